#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "netad/detector.hpp"
#include "netad/flow_ingest.hpp"

namespace netad {

inline constexpr const char* kCheckpointFormat = "netad-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// Decoder trained for one target domain during transfer fine-tuning.
struct TaskHead {
  std::string name;
  double weight = 1.0;
  DenseLayer decoder;

  friend bool operator==(const TaskHead&, const TaskHead&) = default;
};

// Everything needed to score new data: weights, the normalization fitted at
// train time, the feature columns it applies to, and the windowing.
struct Checkpoint {
  DetectorModel model;
  NormalizationStats stats;
  std::vector<std::string> feature_names;
  std::size_t window_length = 0;
  std::size_t window_stride = 0;
  // "per_task_decoder" or "all_shared"; empty for a plain trained model.
  std::string sharing;
  std::vector<TaskHead> tasks;
  // Configuration the checkpoint was produced with, stored verbatim.
  nlohmann::json config = nlohmann::json::object();
};

nlohmann::json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

// Serialized form is JSON with a trailing newline; equal checkpoints give
// equal bytes.
std::string dump_checkpoint(const Checkpoint& checkpoint);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace netad
