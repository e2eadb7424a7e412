#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "netad/checkpoint.hpp"
#include "netad/config.hpp"
#include "netad/eval.hpp"

namespace netad {

// Fixed output file names.
inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kCurveFile = "curve.csv";
inline constexpr const char* kCleaningFile = "cleaning.json";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kSweepFile = "sweep.csv";
inline constexpr const char* kTimingFile = "timing.json";
inline constexpr const char* kTransferCurveFile = "transfer_curves.csv";
inline constexpr const char* kSynthFile = "data.csv";

ParsedFlows load_flows(const DataSource& source, const CsvSchema& schema);

// Split, normalized and windowed data for one run.
struct PreparedData {
  std::vector<std::string> feature_names;
  CleaningSummary cleaning;
  NormalizationStats stats;
  std::size_t train_records = 0;
  std::size_t val_records = 0;
  std::size_t test_records = 0;
  WindowBatch train;
  WindowBatch train_benign;
  WindowBatch validation;
  WindowBatch test;
};

// Fits normalization on the training split unless `stats` is given, in
// which case the feature columns must equal `expected_features`.
PreparedData prepare_data(const DataSource& source, const RunConfig& config, std::size_t window_length,
                          std::size_t window_stride, const NormalizationStats* stats = nullptr,
                          const std::vector<std::string>* expected_features = nullptr);

struct SynthSummary {
  std::filesystem::path path;
  std::size_t records = 0;
  std::size_t anomalous = 0;
};

struct TrainSummary {
  Checkpoint checkpoint;
  std::vector<double> curve;
  PreparedData data;
};

struct EvalSummary {
  nlohmann::json report;
  Sweep validation_sweep;
  Sweep test_sweep;
  ThresholdPoint operating_point;
  ThresholdPoint test_point;
  std::vector<VolumePoint> volume_curve;
};

struct TransferSummary {
  Checkpoint checkpoint;
  FineTuneResult result;
};

// `out` is a .csv path or a directory (data.csv is written inside it).
SynthSummary run_synth(const RunConfig& config, const std::filesystem::path& out);
TrainSummary run_train(const RunConfig& config, const std::filesystem::path& out_dir);
EvalSummary run_eval(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                     const std::filesystem::path& out_dir);
TransferSummary run_transfer(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                             const std::filesystem::path& out_dir);
nlohmann::json run_bench(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                         const std::filesystem::path& out_dir);

// Calibrates on validation and evaluates test in memory; writes nothing.
EvalSummary evaluate_model(const RunConfig& config, const Checkpoint& checkpoint, const PreparedData& data);

}  // namespace netad
