#include "netad/config.hpp"

#include <fstream>

#include "netad/errors.hpp"

namespace netad {

std::string to_string(SparsityMode mode) {
  switch (mode) {
    case SparsityMode::as_written_l1:
      return "as-written-L1";
    case SparsityMode::entropy:
      return "entropy";
    case SparsityMode::off:
      return "off";
  }
  return "unknown";
}

SparsityMode sparsity_from_string(const std::string& s) {
  if (s == "as-written-L1") return SparsityMode::as_written_l1;
  if (s == "entropy") return SparsityMode::entropy;
  if (s == "off") return SparsityMode::off;
  throw ConfigError("unknown sparsity_mode '" + s + "' (expected as-written-L1, entropy or off)");
}

namespace {

std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

DataSource parse_data(const nlohmann::json& j, const std::filesystem::path& base_dir, std::uint64_t seed) {
  DataSource d;
  const bool has_csv = j.contains("csv");
  const bool has_synth = j.contains("synth");
  if (has_csv == has_synth) throw ConfigError("data section needs exactly one of 'csv' or 'synth'");
  if (has_csv) {
    std::filesystem::path p = j.at("csv").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError("data file does not exist: " + p.string());
    d.csv = p;
  } else {
    nlohmann::json spec = j.at("synth");
    if (!spec.contains("seed")) spec["seed"] = seed;
    d.synth = scenario_from_json(spec);
  }
  return d;
}

nlohmann::json echo_data(const DataSource& d) {
  if (d.csv) return {{"csv", d.csv->string()}};
  return {{"synth", to_json(*d.synth)}};
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  try {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    if (!j.contains("data")) throw ConfigError("config has no data section");
    c.data = parse_data(j.at("data"), base_dir, c.seed);

    if (j.contains("schema")) {
      const auto& s = j.at("schema");
      c.schema.label_column = s.value("label_column", c.schema.label_column);
      c.schema.benign_value = s.value("benign_value", c.schema.benign_value);
      if (s.contains("feature_columns")) {
        const auto& fc = s.at("feature_columns");
        if (fc.is_string()) {
          if (fc.get<std::string>() != "auto-numeric") {
            throw ConfigError("feature_columns must be a list or \"auto-numeric\"");
          }
          c.schema.auto_numeric = true;
        } else {
          c.schema.feature_columns = fc.get<std::vector<std::string>>();
          c.schema.auto_numeric = false;
        }
      }
      const std::string cleaning = s.value("cleaning", std::string("drop"));
      if (cleaning == "drop") c.schema.cleaning = CleaningPolicy::drop;
      else if (cleaning == "clip") c.schema.cleaning = CleaningPolicy::clip;
      else throw ConfigError("cleaning must be 'drop' or 'clip'");
    }

    c.split.seed = c.seed;
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split.train_fraction = s.value("train", c.split.train_fraction);
      c.split.val_fraction = s.value("val", c.split.val_fraction);
      c.split.test_fraction = s.value("test", c.split.test_fraction);
      c.split.seed = s.value("seed", c.split.seed);
      const std::string mode = s.value("mode", std::string("chronological"));
      if (mode == "chronological") c.split.mode = SplitMode::chronological;
      else if (mode == "stratified-shuffle") c.split.mode = SplitMode::stratified_shuffle;
      else throw ConfigError("split mode must be 'chronological' or 'stratified-shuffle'");
    }
    c.split.validate();

    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.d_k = m.value("d_k", c.model.d_k);
      c.model.bottleneck = m.value("bottleneck", c.model.bottleneck);
      c.model.bypass_attention = m.value("bypass_attention", c.model.bypass_attention);
    }
    if (c.model.d_k == 0 || c.model.bottleneck == 0) throw ConfigError("d_k and bottleneck must be positive");

    c.train.seed = c.seed;
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.seed = t.value("seed", c.train.seed);
      c.train.optimizer = optimizer_from_string(t.value("optimizer", optimizer_name(c.train.optimizer)));
      if (t.contains("adam")) {
        const auto& a = t.at("adam");
        c.train.beta1 = a.value("beta1", c.train.beta1);
        c.train.beta2 = a.value("beta2", c.train.beta2);
        c.train.adam_epsilon = a.value("epsilon", c.train.adam_epsilon);
      }
      c.train.window_length = t.value("window_length", c.train.window_length);
      c.train.window_stride = t.value("window_stride", c.train.window_stride);
    }
    c.train.validate();

    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      c.loss.lambda = l.value("lambda", c.loss.lambda);
      c.loss.sparsity = sparsity_from_string(l.value("sparsity_mode", to_string(c.loss.sparsity)));
    }
    c.loss.validate();

    if (j.contains("transfer")) {
      const auto& t = j.at("transfer");
      TransferSection ts;
      if (t.contains("targets")) {
        for (const auto& target : t.at("targets")) {
          TransferTargetConfig tc;
          tc.name = target.value("name", "target_" + std::to_string(ts.targets.size()));
          tc.weight = target.value("lambda", 1.0);
          tc.data = parse_data(target.at("data"), base_dir, c.seed);
          ts.targets.push_back(std::move(tc));
        }
      }
      ts.task_count = t.value("m", ts.targets.size());
      if (ts.task_count != ts.targets.size()) {
        throw ConfigError("transfer.m = " + std::to_string(ts.task_count) + " but " +
                          std::to_string(ts.targets.size()) + " targets are listed");
      }
      ts.epochs = t.value("epochs", ts.epochs);
      if (t.contains("learning_rate")) ts.learning_rate = t.at("learning_rate").get<double>();
      ts.sharing = sharing_from_string(t.value("sharing", to_string(ts.sharing)));
      c.transfer = std::move(ts);
    }

    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      c.eval.grid_points = e.value("grid_points", c.eval.grid_points);
      c.eval.data_volume_fractions = e.value("data_volume_fractions", c.eval.data_volume_fractions);
    }
    if (c.eval.grid_points < 2) throw ConfigError("eval.grid_points must be at least 2");

    if (j.contains("bench")) {
      const auto& b = j.at("bench");
      c.bench.repetitions = b.value("repetitions", c.bench.repetitions);
      c.bench.include_ablation = b.value("include_ablation", c.bench.include_ablation);
    }
    if (c.bench.repetitions == 0) throw ConfigError("bench.repetitions must be at least 1");

    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid run config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  return run_config_from_json(j, path.parent_path());
}

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.split.seed = seed;
  config.train.seed = seed;
  if (config.data.synth) config.data.synth->seed = seed;
}

nlohmann::json echo(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["data"] = echo_data(c.data);
  j["schema"] = {{"label_column", c.schema.label_column},
                 {"benign_value", c.schema.benign_value},
                 {"feature_columns", c.schema.auto_numeric && c.schema.feature_columns.empty()
                                         ? nlohmann::json("auto-numeric")
                                         : nlohmann::json(c.schema.feature_columns)},
                 {"cleaning", c.schema.cleaning == CleaningPolicy::drop ? "drop" : "clip"}};
  j["split"] = {{"train", c.split.train_fraction},
                {"val", c.split.val_fraction},
                {"test", c.split.test_fraction},
                {"seed", c.split.seed},
                {"mode", c.split.mode == SplitMode::chronological ? "chronological" : "stratified-shuffle"}};
  j["model"] = {{"d_k", c.model.d_k}, {"bottleneck", c.model.bottleneck}, {"bypass_attention", c.model.bypass_attention}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"seed", c.train.seed},
                {"optimizer", optimizer_name(c.train.optimizer)},
                {"adam", {{"beta1", c.train.beta1}, {"beta2", c.train.beta2}, {"epsilon", c.train.adam_epsilon}}},
                {"window_length", c.train.window_length},
                {"window_stride", c.train.window_stride}};
  j["loss"] = {{"lambda", c.loss.lambda}, {"sparsity_mode", to_string(c.loss.sparsity)}};
  if (c.transfer) {
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& t : c.transfer->targets) {
      targets.push_back({{"name", t.name}, {"lambda", t.weight}, {"data", echo_data(t.data)}});
    }
    j["transfer"] = {{"m", c.transfer->task_count},
                     {"targets", targets},
                     {"epochs", c.transfer->epochs},
                     {"learning_rate", c.transfer->learning_rate.value_or(c.train.learning_rate)},
                     {"sharing", to_string(c.transfer->sharing)}};
  }
  j["eval"] = {{"grid_points", c.eval.grid_points}, {"data_volume_fractions", c.eval.data_volume_fractions}};
  j["bench"] = {{"repetitions", c.bench.repetitions}, {"include_ablation", c.bench.include_ablation}};
  return j;
}

}  // namespace netad
