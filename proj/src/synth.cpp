#include "netad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "netad/errors.hpp"
#include "netad/format.hpp"
#include "netad/random.hpp"

namespace netad {

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::volumetric_burst:
      return "volumetric-burst";
    case AnomalyKind::scan_fanout:
      return "scan-fanout";
    case AnomalyKind::slow_drift:
      return "slow-drift";
  }
  return "unknown";
}

AnomalyKind anomaly_kind_from_string(const std::string& s) {
  if (s == "volumetric-burst") return AnomalyKind::volumetric_burst;
  if (s == "scan-fanout") return AnomalyKind::scan_fanout;
  if (s == "slow-drift") return AnomalyKind::slow_drift;
  throw ConfigError("unknown anomaly kind '" + s + "'");
}

namespace {

std::string segment_name(std::size_t i, const AnomalySegment& s) {
  return "segment " + std::to_string(i) + " [" + std::to_string(s.start) + ", " + std::to_string(s.start + s.length) +
         ")";
}

std::string attack_label(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::volumetric_burst:
      return "DDoS";
    case AnomalyKind::scan_fanout:
      return "PortScan";
    case AnomalyKind::slow_drift:
      return "Infiltration";
  }
  return "ANOMALOUS";
}

}  // namespace

void ScenarioSpec::validate() const {
  if (n_features == 0 || n_records == 0) throw ConfigError("scenario needs positive n_features and n_records");
  if (!baselines.empty() && baselines.size() != n_features) {
    throw ConfigError("scenario lists " + std::to_string(baselines.size()) + " baselines for " +
                      std::to_string(n_features) + " features");
  }
  for (const auto& b : baselines) {
    if (!(b.period > 0.0)) throw ConfigError("baseline period must be positive");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  auto check_feature = [&](std::size_t j, const char* role) {
    if (j >= n_features) throw ConfigError(std::string("feature role '") + role + "' index out of range");
  };
  if (!segments.empty()) {
    for (auto j : roles.volume) check_feature(j, "volume");
    for (auto j : roles.drift) check_feature(j, "drift");
    check_feature(roles.count, "count");
    check_feature(roles.duration, "duration");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.length == 0 || s.start + s.length > n_records) {
      throw ConfigError(segment_name(i, s) + " lies outside [0, " + std::to_string(n_records) + ")");
    }
  }
  std::vector<std::size_t> order(segments.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return segments[a].start < segments[b].start; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& prev = segments[order[k - 1]];
    const auto& cur = segments[order[k]];
    if (cur.start < prev.start + prev.length) {
      throw ConfigError("overlapping anomaly segments: " + segment_name(order[k - 1], prev) + " and " +
                        segment_name(order[k], cur));
    }
  }
}

std::vector<FeatureBaseline> default_baselines(std::size_t n_features) {
  std::vector<FeatureBaseline> out;
  // The first half of the features cycles every 64 records, the rest every
  // 960, so short prefixes of a stream miss most of the slow cycle.
  for (std::size_t j = 0; j < n_features; ++j) {
    const double jd = static_cast<double>(j);
    const double period = 2 * j < n_features ? 64.0 : 960.0;
    out.push_back({20.0 + 4.0 * jd, 4.0 + 0.5 * jd, period,
                   2.0 * std::numbers::pi * jd / static_cast<double>(n_features)});
  }
  return out;
}

std::vector<FeatureBaseline> ScenarioSpec::effective_baselines() const {
  return baselines.empty() ? default_baselines(n_features) : baselines;
}

std::vector<std::string> synth_feature_names(std::size_t n_features) {
  static const char* const kNames[] = {"Total Length of Fwd Packets", "Total Length of Bwd Packets",
                                       "Total Fwd Packets",           "Flow Duration",
                                       "Flow IAT Mean",               "Flow IAT Std",
                                       "Fwd Packets/s",               "Bwd Packets/s"};
  std::vector<std::string> names;
  for (std::size_t j = 0; j < n_features; ++j) {
    names.push_back(j < std::size(kNames) ? kNames[j] : "Feature " + std::to_string(j));
  }
  return names;
}

SynthOutput generate(const ScenarioSpec& spec) {
  spec.validate();
  const auto baselines = spec.effective_baselines();
  Rng rng(spec.seed);
  SynthOutput out;
  out.feature_names = synth_feature_names(spec.n_features);
  out.records.resize(spec.n_records);
  out.label_text.assign(spec.n_records, "BENIGN");

  for (std::size_t t = 0; t < spec.n_records; ++t) {
    FlowRecord& r = out.records[t];
    r.row_index = t;
    r.features.resize(spec.n_features);
    for (std::size_t j = 0; j < spec.n_features; ++j) {
      const auto& b = baselines[j];
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) / b.period + b.phase;
      double v = spec.mean_scale * b.mean + b.amplitude * std::sin(angle);
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.normal();
      r.features[j] = v;
    }
  }

  for (const auto& seg : spec.segments) {
    for (std::size_t k = 0; k < seg.length; ++k) {
      FlowRecord& r = out.records[seg.start + k];
      r.label = Label::anomalous;
      out.label_text[seg.start + k] = attack_label(seg.kind);
      switch (seg.kind) {
        case AnomalyKind::volumetric_burst:
          for (auto j : spec.roles.volume) r.features[j] *= seg.intensity;
          break;
        case AnomalyKind::scan_fanout:
          r.features[spec.roles.count] *= seg.intensity;
          r.features[spec.roles.duration] = 0.0;
          break;
        case AnomalyKind::slow_drift: {
          const double ramp = seg.intensity * static_cast<double>(k + 1) / static_cast<double>(seg.length);
          for (auto j : spec.roles.drift) r.features[j] += ramp;
          break;
        }
      }
    }
  }
  return out;
}

void write_synth_csv(std::ostream& out, const SynthOutput& data) {
  for (const auto& name : data.feature_names) out << name << ',';
  out << "Label\n";
  for (std::size_t t = 0; t < data.records.size(); ++t) {
    for (const double v : data.records[t].features) out << format_double(v) << ',';
    out << data.label_text[t] << '\n';
  }
}

nlohmann::json to_json(const ScenarioSpec& spec) {
  nlohmann::json j;
  j["n_features"] = spec.n_features;
  j["n_records"] = spec.n_records;
  j["seed"] = spec.seed;
  j["noise_sigma"] = spec.noise_sigma;
  j["mean_scale"] = spec.mean_scale;
  nlohmann::json baselines = nlohmann::json::array();
  for (const auto& b : spec.baselines) {
    baselines.push_back({{"mean", b.mean}, {"amplitude", b.amplitude}, {"period", b.period}, {"phase", b.phase}});
  }
  j["baselines"] = baselines;
  j["roles"] = {{"volume", spec.roles.volume},
                {"count", spec.roles.count},
                {"duration", spec.roles.duration},
                {"drift", spec.roles.drift}};
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : spec.segments) {
    segments.push_back(
        {{"start", s.start}, {"length", s.length}, {"kind", to_string(s.kind)}, {"intensity", s.intensity}});
  }
  j["segments"] = segments;
  return j;
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  try {
    ScenarioSpec s;
    s.n_features = j.value("n_features", s.n_features);
    s.n_records = j.value("n_records", s.n_records);
    s.seed = j.value("seed", s.seed);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.mean_scale = j.value("mean_scale", s.mean_scale);
    if (j.contains("baselines")) {
      for (const auto& b : j.at("baselines")) {
        s.baselines.push_back({b.at("mean").get<double>(), b.at("amplitude").get<double>(),
                               b.at("period").get<double>(), b.value("phase", 0.0)});
      }
    }
    if (j.contains("roles")) {
      const auto& r = j.at("roles");
      s.roles.volume = r.value("volume", s.roles.volume);
      s.roles.count = r.value("count", s.roles.count);
      s.roles.duration = r.value("duration", s.roles.duration);
      s.roles.drift = r.value("drift", s.roles.drift);
    }
    if (j.contains("segments")) {
      for (const auto& seg : j.at("segments")) {
        s.segments.push_back({seg.at("start").get<std::size_t>(), seg.at("length").get<std::size_t>(),
                              anomaly_kind_from_string(seg.at("kind").get<std::string>()),
                              seg.value("intensity", 1.0)});
      }
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
}

}  // namespace netad
