#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netad/detector.hpp"

namespace netad {

enum class SharingMode {
  per_task_decoder,  // attention + encoder shared, one decoder per task
  all_shared,
};

std::string to_string(SharingMode mode);
SharingMode sharing_from_string(const std::string& s);

struct TargetTask {
  std::string name;
  WindowBatch windows;  // benign-only target windows
  double weight = 1.0;  // lambda_i
};

struct TransferConfig {
  std::vector<TargetTask> targets;
  // Declared number of target tasks m; must equal targets.size().
  std::size_t task_count = 0;
  // Epochs, learning rate, batch size, optimizer and seed.
  TrainConfig training;
  SharingMode sharing = SharingMode::per_task_decoder;

  void validate() const;
};

// The source model plus one decoder per target task. In all_shared mode the
// task decoders are unused and every task reads the source decoder.
struct ModelSet {
  DetectorModel source;
  std::vector<DenseLayer> task_decoders;
  SharingMode sharing = SharingMode::per_task_decoder;

  DenseLayer& decoder_for(std::size_t task);
  const DenseLayer& decoder_for(std::size_t task) const;
  // Source parameters first, in DetectorModel::parameters() order.
  std::vector<ParamTensor*> parameters();
  void zero_grad();
  bool all_finite() const;
};

// Task decoders start as copies of the pretrained decoder.
ModelSet make_model_set(const DetectorModel& pretrained, std::size_t tasks, SharingMode sharing);

struct TransferLoss {
  double source = 0.0;
  std::vector<double> targets;  // mean loss per target task
  double total = 0.0;           // source + sum_i lambda_i * targets[i]
};

// Mean per-window loss on the source batch plus the weighted mean losses on
// every target batch.
TransferLoss loss_transfer(const ModelSet& models, const WindowBatch& source, const TransferConfig& config,
                           const DetectLossConfig& loss_config);

// Full-batch gradient of loss_transfer accumulated into the model set.
TransferLoss accumulate_transfer_gradients(ModelSet& models, const WindowBatch& source, const TransferConfig& config,
                                           const DetectLossConfig& loss_config);

struct FineTuneResult {
  ModelSet models;
  // Index 0 is before fine-tuning, then one entry per epoch.
  std::vector<double> source_curve;
  std::vector<std::vector<double>> task_curves;
  std::vector<double> total_curve;
};

// Joint optimization of loss_transfer. Each step takes one source minibatch
// (same schedule as train()) and one minibatch per target task.
FineTuneResult fine_tune(const DetectorModel& pretrained, const WindowBatch& source, const TransferConfig& config,
                         const DetectLossConfig& loss_config);

// First curve index whose value is <= target.
std::optional<std::size_t> epochs_to_reach(std::span<const double> curve, double target);

}  // namespace netad
