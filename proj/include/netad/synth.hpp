#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "netad/flow_ingest.hpp"

namespace netad {

enum class AnomalyKind { volumetric_burst, scan_fanout, slow_drift };

std::string to_string(AnomalyKind kind);
AnomalyKind anomaly_kind_from_string(const std::string& s);

struct FeatureBaseline {
  double mean = 0.0;
  double amplitude = 0.0;
  double period = 1.0;  // in records
  double phase = 0.0;   // radians
};

struct AnomalySegment {
  std::size_t start = 0;
  std::size_t length = 0;
  AnomalyKind kind = AnomalyKind::volumetric_burst;
  double intensity = 1.0;
};

// Which columns each anomaly kind touches.
struct FeatureRoles {
  std::vector<std::size_t> volume = {0, 1};
  std::size_t count = 2;
  std::size_t duration = 3;
  std::vector<std::size_t> drift = {4, 5};
};

struct ScenarioSpec {
  std::size_t n_features = 8;
  std::size_t n_records = 4000;
  std::uint64_t seed = 42;
  // One entry per feature; empty selects default_baselines(n_features).
  std::vector<FeatureBaseline> baselines;
  double noise_sigma = 0.5;
  // Multiplies every baseline mean (domain-shift knob).
  double mean_scale = 1.0;
  FeatureRoles roles;
  std::vector<AnomalySegment> segments;

  // Throws ConfigError naming the offending segments.
  void validate() const;
  std::vector<FeatureBaseline> effective_baselines() const;
};

// Seed-independent per-feature sinusoids on two time scales.
std::vector<FeatureBaseline> default_baselines(std::size_t n_features);

// Flow-style column names; features past the built-in list are "Feature <j>".
std::vector<std::string> synth_feature_names(std::size_t n_features);

struct SynthOutput {
  std::vector<std::string> feature_names;
  std::vector<FlowRecord> records;
  // Label text per record: BENIGN or the attack family of the segment.
  std::vector<std::string> label_text;
};

SynthOutput generate(const ScenarioSpec& spec);
// CSV with a "Label" column, benign value "BENIGN".
void write_synth_csv(std::ostream& out, const SynthOutput& data);

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);

}  // namespace netad
