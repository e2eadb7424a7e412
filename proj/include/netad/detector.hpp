#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "netad/attention.hpp"
#include "netad/flow_ingest.hpp"
#include "netad/matrix.hpp"
#include "netad/optimizer.hpp"
#include "netad/random.hpp"

namespace netad {

// Fully connected layer applied row-wise: y = x W + b.
struct DenseLayer {
  ParamTensor weight;  // in x out
  ParamTensor bias;    // 1 x out

  DenseLayer() = default;
  DenseLayer(Matrix w, Matrix b);

  std::size_t inputs() const noexcept { return weight.value.rows(); }
  std::size_t outputs() const noexcept { return weight.value.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Bottleneck autoencoder over attention outputs: tanh encoder, linear decoder.
struct ReconstructionHead {
  DenseLayer encoder;  // n -> b
  DenseLayer decoder;  // b -> n

  ReconstructionHead() = default;
  // Requires 1 <= b < n.
  ReconstructionHead(DenseLayer enc, DenseLayer dec);

  std::size_t n_features() const noexcept { return encoder.inputs(); }
  std::size_t bottleneck() const noexcept { return encoder.outputs(); }

  friend bool operator==(const ReconstructionHead&, const ReconstructionHead&) = default;
};

enum class SparsityMode {
  as_written_l1,  // sum of |A_t|_1; constant T for a row-stochastic A
  entropy,        // sum of row entropies of A
  off,
};

struct DetectLossConfig {
  double lambda = 0.1;
  SparsityMode sparsity = SparsityMode::as_written_l1;

  void validate() const;
};

struct ModelConfig {
  std::size_t d_k = 16;
  std::size_t bottleneck = 4;
  // Ablation: skip attention and reconstruct the raw window (Z := X).
  bool bypass_attention = false;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct DetectorModel {
  ModelConfig config;
  AttentionParams attention;
  ReconstructionHead head;

  // Xavier-uniform weights, zero biases.
  static DetectorModel initialize(std::size_t n_features, const ModelConfig& config, std::uint64_t seed);

  std::size_t n_features() const noexcept { return head.n_features(); }
  // Fixed order: w_q, w_k, encoder weight/bias, decoder weight/bias.
  std::vector<ParamTensor*> parameters();
  void zero_grad();
  bool all_finite() const;

  friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DenseLayer& layer);
DenseLayer dense_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DetectorModel& model);
DetectorModel detector_from_json(const nlohmann::json& j);

struct Window {
  Matrix x;  // T x n, normalized features
  Label label = Label::benign;
  std::size_t first_row = 0;  // row_index of the first member record
};

struct WindowBatch {
  std::size_t length = 0;
  std::size_t stride = 0;
  std::vector<Window> windows;

  std::size_t size() const noexcept { return windows.size(); }
  bool empty() const noexcept { return windows.empty(); }
  std::size_t n_features() const noexcept { return windows.empty() ? 0 : windows.front().x.cols(); }
};

// Slices [i, i + T) for i = 0, s, 2s, ...; a trailing partial window is
// dropped. A window is anomalous when any member record is.
WindowBatch make_windows(std::span<const FlowRecord> records, std::size_t length, std::size_t stride);
WindowBatch benign_only(const WindowBatch& batch);
std::vector<Label> window_labels(const WindowBatch& batch);

struct WindowLoss {
  double recon = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
  double score = 0.0;  // recon / T
};

// Per-window objective for explicit parts, so task-specific decoders can be
// swapped in.
WindowLoss window_loss(const Matrix& x, const AttentionParams& attention, const DenseLayer& encoder,
                       const DenseLayer& decoder, bool bypass_attention, const DetectLossConfig& config);

// Same objective; adds scale * dL/dtheta into every part's grad.
WindowLoss accumulate_window_gradients(const Matrix& x, AttentionParams& attention, DenseLayer& encoder,
                                       DenseLayer& decoder, bool bypass_attention,
                                       const DetectLossConfig& config, double scale);

WindowLoss window_loss(const Matrix& x, const DetectorModel& model, const DetectLossConfig& config);
WindowLoss accumulate_window_gradients(const Matrix& x, DetectorModel& model, const DetectLossConfig& config,
                                       double scale);

struct LossBreakdown {
  double recon = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
  std::vector<double> per_window_scores;
};

LossBreakdown loss_detect(const Matrix& x, const DetectorModel& model, const DetectLossConfig& config);
// Means over the batch.
LossBreakdown batch_loss(const WindowBatch& batch, const DetectorModel& model, const DetectLossConfig& config);
double mean_loss(const WindowBatch& batch, const DetectorModel& model, const DetectLossConfig& config);

// Mean squared reconstruction error per time step; the sparsity term is
// not part of the score.
double score(const Matrix& x, const DetectorModel& model);
std::vector<double> score_all(const WindowBatch& batch, const DetectorModel& model);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t window_length = 16;
  std::size_t window_stride = 8;

  void validate() const;
  OptimizerConfig optimizer_config() const;
};

struct TrainResult {
  DetectorModel model;
  // Mean training loss before training (index 0) and after each epoch.
  std::vector<double> curve;
};

// Shuffled minibatches for one epoch.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch_size, Rng& rng);

// Seed streams shared by train() and fine_tune().
inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kShuffleStream = 1;

TrainResult train(const WindowBatch& benign_windows, const ModelConfig& model_config, const TrainConfig& train_config,
                  const DetectLossConfig& loss_config);
// Continues from an existing model.
TrainResult train(DetectorModel initial, const WindowBatch& benign_windows, const TrainConfig& train_config,
                  const DetectLossConfig& loss_config);

}  // namespace netad
