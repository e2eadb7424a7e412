#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace netad {

enum class Label : std::uint8_t { benign = 0, anomalous = 1 };

struct FlowRecord {
  std::vector<double> features;
  Label label = Label::benign;
  // Position of the row among the data rows of the source file, counting
  // rows that were later dropped.
  std::size_t row_index = 0;
};

enum class CleaningPolicy {
  drop,  // rows with NaN, Infinity or unparseable cells are removed
  clip,  // +/-Infinity replaced by the column's finite max/min; NaN rows still removed
};

struct CsvSchema {
  std::string label_column = "Label";
  std::string benign_value = "BENIGN";
  // Empty together with auto_numeric selects every numeric non-label column.
  std::vector<std::string> feature_columns;
  bool auto_numeric = true;
  CleaningPolicy cleaning = CleaningPolicy::drop;
  char delimiter = ',';
};

struct CleaningSummary {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  // Reason keys: "non_finite", "unparseable", "field_count".
  std::map<std::string, std::size_t> reasons;
  std::size_t cells_clipped = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

struct ParsedFlows {
  std::vector<std::string> feature_names;
  std::vector<FlowRecord> records;
  CleaningSummary summary;
};

ParsedFlows parse_csv(const std::filesystem::path& path, const CsvSchema& schema);
ParsedFlows parse_csv(std::istream& in, const CsvSchema& schema);

// Writes records in the format parse_csv reads. Anomalous rows carry
// `anomalous_value` in the label column.
void write_csv(std::ostream& out, std::span<const std::string> feature_names,
               std::span<const FlowRecord> records, const CsvSchema& schema,
               const std::string& anomalous_value = "ANOMALOUS");

enum class SplitMode { chronological, stratified_shuffle };

struct SplitSpec {
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 0;
  SplitMode mode = SplitMode::chronological;

  void validate() const;
};

struct SplitResult {
  std::vector<FlowRecord> train;
  std::vector<FlowRecord> val;
  std::vector<FlowRecord> test;
};

// Validation and test sizes are floor(N * fraction); the remainder goes to
// training.
SplitResult split(std::span<const FlowRecord> records, const SplitSpec& spec);

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> std;
  double epsilon = 1e-8;

  std::size_t size() const noexcept { return mean.size(); }
};

// Per-feature mean and population standard deviation.
NormalizationStats fit_normalizer(std::span<const FlowRecord> train);

FlowRecord normalize(const FlowRecord& record, const NormalizationStats& stats);
FlowRecord denormalize(const FlowRecord& record, const NormalizationStats& stats);
std::vector<FlowRecord> normalize_all(std::span<const FlowRecord> records,
                                      const NormalizationStats& stats);

nlohmann::json to_json(const NormalizationStats& stats);
NormalizationStats normalization_from_json(const nlohmann::json& j);

}  // namespace netad
