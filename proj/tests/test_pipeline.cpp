#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "netad/config.hpp"
#include "netad/errors.hpp"
#include "netad/pipeline.hpp"

using namespace netad;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("netad_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json small_config() {
  return json::parse(R"({
    "seed": 5,
    "data": {"synth": {"n_features": 6, "n_records": 800, "noise_sigma": 0.3,
             "segments": [{"start": 96, "length": 16, "kind": "volumetric-burst", "intensity": 3.0},
                          {"start": 616, "length": 24, "kind": "scan-fanout", "intensity": 4.0},
                          {"start": 720, "length": 24, "kind": "slow-drift", "intensity": 30.0}]}},
    "split": {"train": 0.7, "val": 0.15, "test": 0.15},
    "model": {"d_k": 8, "bottleneck": 3},
    "train": {"epochs": 3, "batch_size": 8, "learning_rate": 0.001, "window_length": 8, "window_stride": 4},
    "loss": {"lambda": 0.1, "sparsity_mode": "entropy"},
    "transfer": {"epochs": 2, "learning_rate": 0.01, "targets": [
      {"name": "shifted", "lambda": 1.0,
       "data": {"synth": {"n_features": 6, "n_records": 400, "mean_scale": 1.5, "seed": 6}}}]},
    "eval": {"grid_points": 21, "data_volume_fractions": [0.5, 1.0]},
    "bench": {"repetitions": 2, "include_ablation": true}
  })");
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = run_config_from_json(small_config());
  CHECK(c.seed == 5);
  REQUIRE(c.data.synth.has_value());
  CHECK(c.data.synth->seed == 5);
  CHECK(c.model.bottleneck == 3);
  CHECK(c.loss.sparsity == SparsityMode::entropy);
  REQUIRE(c.transfer.has_value());
  CHECK(c.transfer->task_count == 1);
  CHECK(c.transfer->targets[0].data.synth->mean_scale == 1.5);
  CHECK(c.eval.data_volume_fractions.size() == 2);
  CHECK(run_config_from_json(echo(c)).seed == 5);
  CHECK(echo(run_config_from_json(echo(c))) == echo(c));

  RunConfig o = c;
  override_seed(o, 9);
  CHECK(o.seed == 9);
  CHECK(o.train.seed == 9);
  CHECK(o.data.synth->seed == 9);
  CHECK(o.transfer->targets[0].data.synth->seed == 6);
}

TEST_CASE("config errors") {
  json j = small_config();
  j["loss"]["sparsity_mode"] = "l2";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = small_config();
  j["transfer"]["m"] = 2;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = small_config();
  j["data"] = {{"csv", "does_not_exist.csv"}};
  CHECK_THROWS_AS(run_config_from_json(j, fs::temp_directory_path()), ConfigError);
  j = small_config();
  j["split"]["val"] = 0.5;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("train and eval are byte reproducible") {
  const RunConfig c = run_config_from_json(small_config());
  const fs::path a = scratch_dir("repro_a"), b = scratch_dir("repro_b");
  run_train(c, a);
  run_train(c, b);
  CHECK(slurp(a / kCheckpointFile) == slurp(b / kCheckpointFile));
  CHECK(slurp(a / kCurveFile) == slurp(b / kCurveFile));
  run_eval(c, a / kCheckpointFile, a);
  run_eval(c, b / kCheckpointFile, b);
  CHECK(slurp(a / kReportFile) == slurp(b / kReportFile));
  CHECK(slurp(a / kSweepFile) == slurp(b / kSweepFile));

  const json report = json::parse(slurp(a / kReportFile));
  for (const char* key : {"config", "dataset", "validation_sweep", "best_f1_point", "test_at_operating_point",
                          "test_sweep", "degenerate_class", "data_volume_curve", "warnings"}) {
    CHECK_MESSAGE(report.contains(key), key);
  }
  CHECK(report["data_volume_curve"].size() == 2);

  const Checkpoint ck = load_checkpoint(a / kCheckpointFile);
  CHECK(dump_checkpoint(ck) == slurp(a / kCheckpointFile));
  CHECK(ck.feature_names.size() == 6);
  CHECK(ck.window_length == 8);
}

TEST_CASE("transfer with zero epochs keeps the model section") {
  json j = small_config();
  j["transfer"]["epochs"] = 0;
  const RunConfig c = run_config_from_json(j);
  const fs::path dir = scratch_dir("transfer0");
  run_train(c, dir);
  const fs::path pretrained = dir / "pretrained.json";
  fs::rename(dir / kCheckpointFile, pretrained);
  const TransferSummary t = run_transfer(c, pretrained, dir);
  const json before = json::parse(slurp(pretrained));
  const json after = json::parse(slurp(dir / kCheckpointFile));
  CHECK(before["model"].dump() == after["model"].dump());
  CHECK(after["tasks"].size() == 1);
  CHECK(after["sharing"] == "per_task_decoder");
  CHECK(fs::exists(dir / kTransferCurveFile));
}

TEST_CASE("eval rejects a checkpoint with different feature columns") {
  const RunConfig c = run_config_from_json(small_config());
  const fs::path dir = scratch_dir("mismatch");
  run_train(c, dir);
  json other = small_config();
  other["data"]["synth"]["n_features"] = 7;
  CHECK_THROWS_AS(run_eval(run_config_from_json(other), dir / kCheckpointFile, dir), ArtifactMismatch);

  std::ofstream(dir / "broken.json") << "{\"format\": \"something-else\"}";
  CHECK_THROWS_AS(load_checkpoint(dir / "broken.json"), ArtifactMismatch);
}

TEST_CASE("single class evaluation sets the warning flag") {
  json j = small_config();
  j["data"]["synth"]["segments"] = json::array({{{"start", 96}, {"length", 16}, {"kind", "volumetric-burst"},
                                                 {"intensity", 3.0}}});
  j["eval"]["data_volume_fractions"] = json::array();
  const RunConfig c = run_config_from_json(j);
  const fs::path dir = scratch_dir("single");
  run_train(c, dir);
  const EvalSummary s = run_eval(c, dir / kCheckpointFile, dir);
  CHECK(s.report["degenerate_class"] == true);
  CHECK_FALSE(s.report["warnings"].empty());
}

TEST_CASE("bench writes the timing schema") {
  const RunConfig c = run_config_from_json(small_config());
  const fs::path dir = scratch_dir("bench");
  run_train(c, dir);
  run_bench(c, dir / kCheckpointFile, dir);
  const json t = json::parse(slurp(dir / kTimingFile));
  CHECK(t["schema_version"] == 1);
  CHECK(t["repetitions"] == 2);
  for (const char* key : {"repetitions", "windows", "mean_seconds", "std_seconds", "windows_per_second", "seconds"}) {
    CHECK_MESSAGE(t["model"].contains(key), key);
  }
  CHECK(t["model"]["seconds"].size() == 2);
  CHECK(t["ablation"].is_object());
}

TEST_CASE("synth writes a parseable CSV") {
  const RunConfig c = run_config_from_json(small_config());
  const fs::path dir = scratch_dir("synth");
  const SynthSummary s = run_synth(c, dir);
  CHECK(s.path == dir / kSynthFile);
  CHECK(s.records == 800);
  CHECK(s.anomalous == 64);
  const SynthSummary named = run_synth(c, dir / "flows.csv");
  CHECK(fs::exists(named.path));
  CHECK(parse_csv(named.path, CsvSchema{}).summary.rows_dropped == 0);
}

TEST_CASE("desk scenario labels exactly the segment records") {
  const RunConfig c = load_run_config(fs::path(NETAD_SOURCE_DIR) / "configs/desk_scale.json");
  const ScenarioSpec& spec = c.data.synth.value();
  std::size_t covered = 0;
  std::set<AnomalyKind> kinds;
  for (const auto& s : spec.segments) {
    covered += s.length;
    kinds.insert(s.kind);
  }
  const SynthOutput out = generate(spec);
  std::size_t anomalous = 0;
  for (const auto& r : out.records) anomalous += r.label == Label::anomalous;
  CHECK(anomalous == covered);
  CHECK(covered * 10 == spec.n_records);
  CHECK(kinds.size() == 3);
}
