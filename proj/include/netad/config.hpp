#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netad/detector.hpp"
#include "netad/flow_ingest.hpp"
#include "netad/synth.hpp"
#include "netad/transfer.hpp"

namespace netad {

// Exactly one of csv / synth is set.
struct DataSource {
  std::optional<std::filesystem::path> csv;
  std::optional<ScenarioSpec> synth;
};

struct TransferTargetConfig {
  std::string name;
  DataSource data;
  double weight = 1.0;
};

struct TransferSection {
  std::vector<TransferTargetConfig> targets;
  std::size_t task_count = 0;
  std::size_t epochs = 20;
  std::optional<double> learning_rate;  // defaults to train.learning_rate
  SharingMode sharing = SharingMode::per_task_decoder;
};

struct EvalOptions {
  std::size_t grid_points = 101;
  std::vector<double> data_volume_fractions;
};

struct BenchOptions {
  std::size_t repetitions = 10;
  bool include_ablation = true;
};

struct RunConfig {
  std::uint64_t seed = 42;
  DataSource data;
  CsvSchema schema;
  SplitSpec split;
  ModelConfig model;
  TrainConfig train;
  DetectLossConfig loss;
  std::optional<TransferSection> transfer;
  EvalOptions eval;
  BenchOptions bench;
  std::filesystem::path output_dir = "out";
};

// Relative CSV paths resolve against base_dir. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Replaces the global seed and every seed derived from it (source scenario,
// split, training). Target scenario seeds are part of the target data and
// stay as configured.
void override_seed(RunConfig& config, std::uint64_t seed);

// Canonical echo of the experiment-defining fields (no output directory).
nlohmann::json echo(const RunConfig& config);

std::string to_string(SparsityMode mode);
SparsityMode sparsity_from_string(const std::string& s);

}  // namespace netad
