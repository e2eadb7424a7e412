#include "netad/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netad/errors.hpp"

namespace netad {

DenseLayer::DenseLayer(Matrix w, Matrix b) : weight(std::move(w)), bias(std::move(b)) {
  if (bias.value.rows() != 1 || bias.value.cols() != weight.value.cols()) {
    throw ShapeError("dense bias must be 1x" + std::to_string(weight.value.cols()) + ", got " +
                     shape_string(bias.value));
  }
}

ReconstructionHead::ReconstructionHead(DenseLayer enc, DenseLayer dec)
    : encoder(std::move(enc)), decoder(std::move(dec)) {
  const std::size_t n = encoder.inputs();
  const std::size_t b = encoder.outputs();
  if (decoder.inputs() != b || decoder.outputs() != n) {
    throw ShapeError("decoder must map the bottleneck back to the feature width");
  }
  if (b < 1 || b >= n) {
    throw ConfigError("bottleneck width " + std::to_string(b) + " must satisfy 1 <= b < n = " + std::to_string(n));
  }
}

void DetectLossConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a finite non-negative number");
}

namespace {

Matrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& v : m.values()) v = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

DetectorModel DetectorModel::initialize(std::size_t n_features, const ModelConfig& config, std::uint64_t seed) {
  if (config.d_k == 0) throw ConfigError("d_k must be positive");
  if (config.bottleneck == 0) throw ConfigError("bottleneck must be positive");
  Rng rng(derive_seed(seed, kInitStream));
  DetectorModel model;
  model.config = config;
  Matrix wq = xavier_uniform(n_features, config.d_k, rng);
  Matrix wk = xavier_uniform(n_features, config.d_k, rng);
  model.attention = AttentionParams(std::move(wq), std::move(wk));
  Matrix we = xavier_uniform(n_features, config.bottleneck, rng);
  Matrix wd = xavier_uniform(config.bottleneck, n_features, rng);
  DenseLayer enc(std::move(we), Matrix(1, config.bottleneck));
  DenseLayer dec(std::move(wd), Matrix(1, n_features));
  model.head = ReconstructionHead(std::move(enc), std::move(dec));
  return model;
}

std::vector<ParamTensor*> DetectorModel::parameters() {
  return {&attention.w_q, &attention.w_k, &head.encoder.weight, &head.encoder.bias, &head.decoder.weight,
          &head.decoder.bias};
}

void DetectorModel::zero_grad() {
  for (ParamTensor* p : parameters()) p->zero_grad();
}

bool DetectorModel::all_finite() const {
  return attention.w_q.value.all_finite() && attention.w_k.value.all_finite() &&
         head.encoder.weight.value.all_finite() && head.encoder.bias.value.all_finite() &&
         head.decoder.weight.value.all_finite() && head.decoder.bias.value.all_finite();
}

nlohmann::json to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

nlohmann::json to_json(const DenseLayer& layer) {
  return {{"weight", to_json(layer.weight.value)}, {"bias", to_json(layer.bias.value)}};
}

DenseLayer dense_from_json(const nlohmann::json& j) {
  return DenseLayer(matrix_from_json(j.at("weight")), matrix_from_json(j.at("bias")));
}

nlohmann::json to_json(const DetectorModel& model) {
  nlohmann::json j;
  j["n_features"] = model.n_features();
  j["d_k"] = model.config.d_k;
  j["bottleneck"] = model.config.bottleneck;
  j["bypass_attention"] = model.config.bypass_attention;
  j["attention"] = {{"w_q", to_json(model.attention.w_q.value)}, {"w_k", to_json(model.attention.w_k.value)}};
  j["encoder"] = to_json(model.head.encoder);
  j["decoder"] = to_json(model.head.decoder);
  return j;
}

DetectorModel detector_from_json(const nlohmann::json& j) {
  DetectorModel model;
  model.config.d_k = j.at("d_k").get<std::size_t>();
  model.config.bottleneck = j.at("bottleneck").get<std::size_t>();
  model.config.bypass_attention = j.at("bypass_attention").get<bool>();
  const auto& att = j.at("attention");
  model.attention = AttentionParams(matrix_from_json(att.at("w_q")), matrix_from_json(att.at("w_k")));
  model.head = ReconstructionHead(dense_from_json(j.at("encoder")), dense_from_json(j.at("decoder")));
  if (model.n_features() != j.at("n_features").get<std::size_t>() ||
      model.attention.n_features() != model.n_features() || model.attention.d_k() != model.config.d_k ||
      model.head.bottleneck() != model.config.bottleneck) {
    throw ArtifactMismatch("checkpoint model section has inconsistent shapes");
  }
  return model;
}

WindowBatch make_windows(std::span<const FlowRecord> records, std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0) throw ConfigError("window length and stride must be positive");
  if (records.size() < length) {
    throw EmptyInputError("sequence of " + std::to_string(records.size()) + " records is shorter than window length " +
                          std::to_string(length));
  }
  const std::size_t n = records.front().features.size();
  WindowBatch batch{length, stride, {}};
  for (std::size_t start = 0; start + length <= records.size(); start += stride) {
    Window w{Matrix(length, n), Label::benign, records[start].row_index};
    for (std::size_t t = 0; t < length; ++t) {
      const auto& rec = records[start + t];
      if (rec.features.size() != n) throw ShapeError("make_windows: inconsistent feature counts");
      std::copy(rec.features.begin(), rec.features.end(), w.x.row(t).begin());
      if (rec.label == Label::anomalous) w.label = Label::anomalous;
    }
    batch.windows.push_back(std::move(w));
  }
  return batch;
}

WindowBatch benign_only(const WindowBatch& batch) {
  WindowBatch out{batch.length, batch.stride, {}};
  for (const auto& w : batch.windows)
    if (w.label == Label::benign) out.windows.push_back(w);
  return out;
}

std::vector<Label> window_labels(const WindowBatch& batch) {
  std::vector<Label> labels;
  labels.reserve(batch.size());
  for (const auto& w : batch.windows) labels.push_back(w.label);
  return labels;
}

namespace {

constexpr double kEntropyGuard = 1e-12;

struct ForwardState {
  AttentionOutput attn;  // empty when attention is bypassed
  Matrix hidden;         // tanh(Z We + be)
  Matrix residual;       // Z - Zhat
  WindowLoss loss;
};

void add_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += bias(0, j);
  }
}

ForwardState forward(const Matrix& x, const AttentionParams& attention, const DenseLayer& encoder,
                     const DenseLayer& decoder, bool bypass, const DetectLossConfig& config) {
  if (x.cols() != encoder.inputs()) {
    throw ShapeError("window has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(encoder.inputs()));
  }
  ForwardState s;
  if (!bypass) s.attn = attend_forward(x, attention);
  const Matrix& z = bypass ? x : s.attn.context;

  s.hidden = matmul(z, encoder.weight.value);
  add_bias(s.hidden, encoder.bias.value);
  for (double& v : s.hidden.values()) v = std::tanh(v);
  Matrix z_hat = matmul(s.hidden, decoder.weight.value);
  add_bias(z_hat, decoder.bias.value);

  s.residual = Matrix(z.rows(), z.cols());
  double recon = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = z.values()[i] - z_hat.values()[i];
    s.residual.values()[i] = r;
    recon += r * r;
  }

  double sparsity = 0.0;
  if (!bypass) {
    const auto a = s.attn.attention.values();
    switch (config.sparsity) {
      case SparsityMode::as_written_l1:
        for (const double v : a) sparsity += std::abs(v);
        break;
      case SparsityMode::entropy:
        for (const double v : a) sparsity -= v * std::log(v + kEntropyGuard);
        break;
      case SparsityMode::off:
        break;
    }
  }
  s.loss.recon = recon;
  s.loss.sparsity = sparsity;
  s.loss.total = config.sparsity == SparsityMode::off ? recon : recon + config.lambda * sparsity;
  s.loss.score = recon / static_cast<double>(x.rows());
  return s;
}

void add_scaled(Matrix& target, const Matrix& source) {
  auto t = target.values();
  const auto s = source.values();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += s[i];
}

}  // namespace

WindowLoss window_loss(const Matrix& x, const AttentionParams& attention, const DenseLayer& encoder,
                       const DenseLayer& decoder, bool bypass_attention, const DetectLossConfig& config) {
  return forward(x, attention, encoder, decoder, bypass_attention, config).loss;
}

WindowLoss accumulate_window_gradients(const Matrix& x, AttentionParams& attention, DenseLayer& encoder,
                                       DenseLayer& decoder, bool bypass_attention,
                                       const DetectLossConfig& config, double scale) {
  ForwardState s = forward(x, attention, encoder, decoder, bypass_attention, config);
  const Matrix& z = bypass_attention ? x : s.attn.context;
  const std::size_t t = x.rows();

  // d total / d Zhat = -2 R
  Matrix d_zhat = s.residual;
  for (double& v : d_zhat.values()) v *= -2.0 * scale;

  add_scaled(decoder.weight.grad, transposed_matmul(s.hidden, d_zhat));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < d_zhat.cols(); ++j) decoder.bias.grad(0, j) += d_zhat(i, j);

  Matrix d_pre = matmul_transposed(d_zhat, decoder.weight.value);
  for (std::size_t i = 0; i < d_pre.size(); ++i) {
    const double h = s.hidden.values()[i];
    d_pre.values()[i] *= 1.0 - h * h;
  }
  add_scaled(encoder.weight.grad, transposed_matmul(z, d_pre));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < d_pre.cols(); ++j) encoder.bias.grad(0, j) += d_pre(i, j);

  if (bypass_attention) return s.loss;

  // Z feeds the residual directly and the encoder.
  Matrix d_z = matmul_transposed(d_pre, encoder.weight.value);
  for (std::size_t i = 0; i < d_z.size(); ++i) d_z.values()[i] += 2.0 * scale * s.residual.values()[i];

  Matrix d_a(t, t);
  const double sparse_scale = scale * config.lambda;
  if (config.sparsity != SparsityMode::off && sparse_scale != 0.0) {
    const auto a = s.attn.attention.values();
    auto da = d_a.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (config.sparsity == SparsityMode::as_written_l1) {
        da[i] = sparse_scale * (a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0));
      } else {
        da[i] = -sparse_scale * (std::log(a[i] + kEntropyGuard) + a[i] / (a[i] + kEntropyGuard));
      }
    }
  }
  const AttentionGradients g = attend_backward(s.attn, d_z, x, attention, &d_a);
  add_scaled(attention.w_q.grad, g.d_w_q);
  add_scaled(attention.w_k.grad, g.d_w_k);
  return s.loss;
}

WindowLoss window_loss(const Matrix& x, const DetectorModel& model, const DetectLossConfig& config) {
  return window_loss(x, model.attention, model.head.encoder, model.head.decoder, model.config.bypass_attention,
                     config);
}

WindowLoss accumulate_window_gradients(const Matrix& x, DetectorModel& model, const DetectLossConfig& config,
                                       double scale) {
  return accumulate_window_gradients(x, model.attention, model.head.encoder, model.head.decoder,
                                     model.config.bypass_attention, config, scale);
}

LossBreakdown loss_detect(const Matrix& x, const DetectorModel& model, const DetectLossConfig& config) {
  const WindowLoss l = window_loss(x, model, config);
  return {l.recon, l.sparsity, l.total, {l.score}};
}

LossBreakdown batch_loss(const WindowBatch& batch, const DetectorModel& model, const DetectLossConfig& config) {
  if (batch.empty()) throw EmptyInputError("batch_loss on an empty window batch");
  LossBreakdown out;
  out.per_window_scores.reserve(batch.size());
  for (const auto& w : batch.windows) {
    const WindowLoss l = window_loss(w.x, model, config);
    out.recon += l.recon;
    out.sparsity += l.sparsity;
    out.total += l.total;
    out.per_window_scores.push_back(l.score);
  }
  const double n = static_cast<double>(batch.size());
  out.recon /= n;
  out.sparsity /= n;
  out.total /= n;
  return out;
}

double mean_loss(const WindowBatch& batch, const DetectorModel& model, const DetectLossConfig& config) {
  return batch_loss(batch, model, config).total;
}

double score(const Matrix& x, const DetectorModel& model) {
  return window_loss(x, model, DetectLossConfig{0.0, SparsityMode::off}).score;
}

std::vector<double> score_all(const WindowBatch& batch, const DetectorModel& model) {
  std::vector<double> scores;
  scores.reserve(batch.size());
  for (const auto& w : batch.windows) scores.push_back(score(w.x, model));
  return scores;
}

void TrainConfig::validate() const {
  if (epochs > 100000) throw ConfigError("epochs out of range");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
  if (window_length < 2) throw ConfigError("window_length must be at least 2");
  if (window_stride < 1 || window_stride > window_length) {
    throw ConfigError("window_stride must satisfy 1 <= stride <= window_length");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0)) {
    throw ConfigError("invalid Adam settings");
  }
}

OptimizerConfig TrainConfig::optimizer_config() const {
  return {optimizer, learning_rate, beta1, beta2, adam_epsilon};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainResult train(const WindowBatch& benign_windows, const ModelConfig& model_config, const TrainConfig& train_config,
                  const DetectLossConfig& loss_config) {
  if (benign_windows.empty()) throw EmptyInputError("no training windows");
  return train(DetectorModel::initialize(benign_windows.n_features(), model_config, train_config.seed),
               benign_windows, train_config, loss_config);
}

TrainResult train(DetectorModel initial, const WindowBatch& benign_windows, const TrainConfig& train_config,
                  const DetectLossConfig& loss_config) {
  train_config.validate();
  loss_config.validate();
  if (benign_windows.empty()) throw EmptyInputError("no training windows");
  for (std::size_t i = 0; i < benign_windows.size(); ++i) {
    if (benign_windows.windows[i].label != Label::benign) {
      throw ContractViolation("training window " + std::to_string(i) + " is labeled anomalous");
    }
  }
  if (benign_windows.n_features() != initial.n_features()) {
    throw ShapeError("training windows have " + std::to_string(benign_windows.n_features()) +
                     " features, model expects " + std::to_string(initial.n_features()));
  }

  TrainResult result{std::move(initial), {}};
  DetectorModel& model = result.model;
  const auto params = model.parameters();
  Optimizer optimizer(train_config.optimizer_config());
  Rng rng(derive_seed(train_config.seed, kShuffleStream));

  result.curve.push_back(mean_loss(benign_windows, model, loss_config));
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    const auto batches = epoch_batches(benign_windows.size(), train_config.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      model.zero_grad();
      const double scale = 1.0 / static_cast<double>(batches[b].size());
      double loss = 0.0;
      for (const std::size_t idx : batches[b]) {
        loss += accumulate_window_gradients(benign_windows.windows[idx].x, model, loss_config, scale).total;
      }
      if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss", epoch, b);
      optimizer.step(params);
      if (!model.all_finite()) throw DivergenceError("non-finite parameters after update", epoch, b);
    }
    const double epoch_loss = mean_loss(benign_windows, model, loss_config);
    if (!std::isfinite(epoch_loss)) throw DivergenceError("non-finite epoch loss", epoch, batches.size());
    result.curve.push_back(epoch_loss);
  }
  return result;
}

}  // namespace netad
