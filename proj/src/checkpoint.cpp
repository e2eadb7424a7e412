#include "netad/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "netad/errors.hpp"

namespace netad {

nlohmann::json to_json(const Checkpoint& c) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["feature_names"] = c.feature_names;
  j["normalization"] = to_json(c.stats);
  j["windowing"] = {{"length", c.window_length}, {"stride", c.window_stride}};
  j["model"] = to_json(c.model);
  if (!c.tasks.empty() || !c.sharing.empty()) {
    j["sharing"] = c.sharing;
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : c.tasks) {
      tasks.push_back({{"name", t.name}, {"weight", t.weight}, {"decoder", to_json(t.decoder)}});
    }
    j["tasks"] = std::move(tasks);
  }
  j["config"] = c.config;
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw ArtifactMismatch("not a netad checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ArtifactMismatch("unsupported checkpoint version " + j.at("version").dump());
    }
    Checkpoint c;
    c.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    c.stats = normalization_from_json(j.at("normalization"));
    c.window_length = j.at("windowing").at("length").get<std::size_t>();
    c.window_stride = j.at("windowing").at("stride").get<std::size_t>();
    c.model = detector_from_json(j.at("model"));
    if (j.contains("sharing")) c.sharing = j.at("sharing").get<std::string>();
    if (j.contains("tasks")) {
      for (const auto& t : j.at("tasks")) {
        c.tasks.push_back({t.at("name").get<std::string>(), t.at("weight").get<double>(),
                           dense_from_json(t.at("decoder"))});
      }
    }
    if (j.contains("config")) c.config = j.at("config");
    if (c.stats.size() != c.model.n_features() || c.feature_names.size() != c.model.n_features()) {
      throw ArtifactMismatch("checkpoint normalization/feature list does not match the model width");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactMismatch(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw ArtifactMismatch(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw ArtifactMismatch(std::string("malformed checkpoint: ") + e.what());
  }
}

std::string dump_checkpoint(const Checkpoint& checkpoint) { return to_json(checkpoint).dump(1) + "\n"; }

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  out << dump_checkpoint(checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactMismatch("cannot read checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactMismatch("checkpoint is not valid JSON: " + std::string(e.what()));
  }
  return checkpoint_from_json(j);
}

}  // namespace netad
