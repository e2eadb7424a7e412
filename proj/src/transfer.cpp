#include "netad/transfer.hpp"

#include <cmath>
#include <deque>

#include "netad/errors.hpp"

namespace netad {

std::string to_string(SharingMode mode) {
  return mode == SharingMode::all_shared ? "all_shared" : "per_task_decoder";
}

SharingMode sharing_from_string(const std::string& s) {
  if (s == "per_task_decoder") return SharingMode::per_task_decoder;
  if (s == "all_shared") return SharingMode::all_shared;
  throw ConfigError("unknown sharing mode '" + s + "' (expected per_task_decoder or all_shared)");
}

void TransferConfig::validate() const {
  if (task_count != targets.size()) {
    throw ConfigError("declared " + std::to_string(task_count) + " target tasks but " +
                      std::to_string(targets.size()) + " were supplied");
  }
  for (const auto& t : targets) {
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) {
      throw ConfigError("target task '" + t.name + "' has a negative or non-finite weight");
    }
    if (t.windows.empty()) throw EmptyInputError("target task '" + t.name + "' has no windows");
  }
  training.validate();
}

DenseLayer& ModelSet::decoder_for(std::size_t task) {
  return sharing == SharingMode::all_shared ? source.head.decoder : task_decoders.at(task);
}

const DenseLayer& ModelSet::decoder_for(std::size_t task) const {
  return sharing == SharingMode::all_shared ? source.head.decoder : task_decoders.at(task);
}

std::vector<ParamTensor*> ModelSet::parameters() {
  auto params = source.parameters();
  if (sharing == SharingMode::per_task_decoder) {
    for (auto& d : task_decoders) {
      params.push_back(&d.weight);
      params.push_back(&d.bias);
    }
  }
  return params;
}

void ModelSet::zero_grad() {
  for (ParamTensor* p : parameters()) p->zero_grad();
}

bool ModelSet::all_finite() const {
  if (!source.all_finite()) return false;
  for (const auto& d : task_decoders) {
    if (!d.weight.value.all_finite() || !d.bias.value.all_finite()) return false;
  }
  return true;
}

ModelSet make_model_set(const DetectorModel& pretrained, std::size_t tasks, SharingMode sharing) {
  ModelSet set{pretrained, {}, sharing};
  if (sharing == SharingMode::per_task_decoder) set.task_decoders.assign(tasks, pretrained.head.decoder);
  return set;
}

namespace {

double task_mean_loss(const ModelSet& models, std::size_t task, const WindowBatch& batch,
                      const DetectLossConfig& loss_config) {
  double sum = 0.0;
  for (const auto& w : batch.windows) {
    sum += window_loss(w.x, models.source.attention, models.source.head.encoder, models.decoder_for(task),
                       models.source.config.bypass_attention, loss_config)
               .total;
  }
  return sum / static_cast<double>(batch.size());
}

void check_width(const WindowBatch& batch, std::size_t n, const std::string& what) {
  if (batch.n_features() != n) {
    throw ShapeError(what + " has " + std::to_string(batch.n_features()) + " features but the pretrained model expects " +
                     std::to_string(n) + "; re-ingest it with the schema the model was trained on");
  }
}

}  // namespace

TransferLoss loss_transfer(const ModelSet& models, const WindowBatch& source, const TransferConfig& config,
                           const DetectLossConfig& loss_config) {
  config.validate();
  if (source.empty()) throw EmptyInputError("loss_transfer: empty source batch");
  TransferLoss out;
  out.source = mean_loss(source, models.source, loss_config);
  out.total = out.source;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    out.targets.push_back(task_mean_loss(models, i, config.targets[i].windows, loss_config));
    out.total += config.targets[i].weight * out.targets.back();
  }
  return out;
}

TransferLoss accumulate_transfer_gradients(ModelSet& models, const WindowBatch& source, const TransferConfig& config,
                                           const DetectLossConfig& loss_config) {
  config.validate();
  if (source.empty()) throw EmptyInputError("accumulate_transfer_gradients: empty source batch");
  TransferLoss out;
  const double source_scale = 1.0 / static_cast<double>(source.size());
  for (const auto& w : source.windows) {
    out.source += accumulate_window_gradients(w.x, models.source, loss_config, source_scale).total;
  }
  out.source *= source_scale;
  out.total = out.source;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const auto& batch = config.targets[i].windows;
    const double scale = config.targets[i].weight / static_cast<double>(batch.size());
    double sum = 0.0;
    for (const auto& w : batch.windows) {
      sum += accumulate_window_gradients(w.x, models.source.attention, models.source.head.encoder,
                                         models.decoder_for(i), models.source.config.bypass_attention, loss_config,
                                         scale)
                 .total;
    }
    out.targets.push_back(sum / static_cast<double>(batch.size()));
    out.total += config.targets[i].weight * out.targets.back();
  }
  return out;
}

FineTuneResult fine_tune(const DetectorModel& pretrained, const WindowBatch& source, const TransferConfig& config,
                         const DetectLossConfig& loss_config) {
  config.validate();
  loss_config.validate();
  if (source.empty()) throw EmptyInputError("fine_tune: empty source batch");
  const std::size_t n = pretrained.n_features();
  check_width(source, n, "source data");
  for (const auto& t : config.targets) {
    check_width(t.windows, n, "target task '" + t.name + "'");
    for (const auto& w : t.windows.windows) {
      if (w.label != Label::benign) throw ContractViolation("target task '" + t.name + "' contains anomalous windows");
    }
  }
  for (const auto& w : source.windows) {
    if (w.label != Label::benign) throw ContractViolation("source batch contains anomalous windows");
  }

  const TrainConfig& tc = config.training;
  const std::size_t m = config.targets.size();
  FineTuneResult result{make_model_set(pretrained, m, config.sharing), {}, std::vector<std::vector<double>>(m), {}};
  ModelSet& models = result.models;
  const auto params = models.parameters();
  Optimizer optimizer(tc.optimizer_config());

  auto record_curves = [&] {
    const TransferLoss l = loss_transfer(models, source, config, loss_config);
    result.source_curve.push_back(l.source);
    for (std::size_t i = 0; i < m; ++i) result.task_curves[i].push_back(l.targets[i]);
    result.total_curve.push_back(l.total);
  };

  // The source stream matches train() so that zero target weights reproduce
  // its updates exactly; each task draws from its own stream.
  Rng source_rng(derive_seed(tc.seed, kShuffleStream));
  std::vector<Rng> task_rngs;
  std::vector<std::deque<std::vector<std::size_t>>> task_queues(m);
  for (std::size_t i = 0; i < m; ++i) task_rngs.emplace_back(derive_seed(tc.seed, 100 + i));
  auto next_task_batch = [&](std::size_t i) {
    if (task_queues[i].empty()) {
      for (auto& b : epoch_batches(config.targets[i].windows.size(), tc.batch_size, task_rngs[i])) {
        task_queues[i].push_back(std::move(b));
      }
    }
    auto batch = std::move(task_queues[i].front());
    task_queues[i].pop_front();
    return batch;
  };

  record_curves();
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    const auto batches = epoch_batches(source.size(), tc.batch_size, source_rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      models.zero_grad();
      double loss = 0.0;
      const double source_scale = 1.0 / static_cast<double>(batches[b].size());
      for (const std::size_t idx : batches[b]) {
        loss += source_scale *
                accumulate_window_gradients(source.windows[idx].x, models.source, loss_config, source_scale).total;
      }
      for (std::size_t i = 0; i < m; ++i) {
        const auto task_batch = next_task_batch(i);
        const double weight = config.targets[i].weight;
        if (weight == 0.0) continue;
        const double scale = weight / static_cast<double>(task_batch.size());
        for (const std::size_t idx : task_batch) {
          loss += scale * accumulate_window_gradients(config.targets[i].windows.windows[idx].x,
                                                      models.source.attention, models.source.head.encoder,
                                                      models.decoder_for(i), models.source.config.bypass_attention,
                                                      loss_config, scale)
                              .total;
        }
      }
      if (!std::isfinite(loss)) throw DivergenceError("non-finite transfer loss", epoch, b);
      optimizer.step(params);
      if (!models.all_finite()) throw DivergenceError("non-finite parameters after transfer update", epoch, b);
    }
    record_curves();
  }
  return result;
}

std::optional<std::size_t> epochs_to_reach(std::span<const double> curve, double target) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i] <= target) return i;
  }
  return std::nullopt;
}

}  // namespace netad
