// netad: command-line driver for the flow anomaly detection pipeline.
//
//   netad synth    --config run.json --out data.csv
//   netad train    --config run.json --out DIR
//   netad eval     --config run.json --out DIR [--checkpoint PATH]
//   netad transfer --config run.json --out DIR --checkpoint PATH
//   netad bench    --config run.json --out DIR [--checkpoint PATH]
//
// Exit codes: 0 success, 2 configuration error, 3 training divergence,
// 4 artifact/schema mismatch.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "netad/errors.hpp"
#include "netad/format.hpp"
#include "netad/pipeline.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
};

netad::RunConfig load(const GlobalOptions& g) {
  netad::RunConfig config = netad::load_run_config(g.config_path);
  if (g.seed) netad::override_seed(config, *g.seed);
  return config;
}

std::filesystem::path out_dir(const GlobalOptions& g, const netad::RunConfig& config) {
  return g.out.empty() ? config.output_dir : std::filesystem::path(g.out);
}

std::filesystem::path checkpoint_path(const GlobalOptions& g, const std::filesystem::path& dir) {
  return g.checkpoint.empty() ? dir / netad::kCheckpointFile : std::filesystem::path(g.checkpoint);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-attention reconstruction detector for network flow records"};
  app.require_subcommand(1);
  // Global flags may appear after the subcommand name.
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON run config")->required()->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory (synth: .csv path or directory)");
  app.add_option("--seed", g.seed, "Override every run seed");
  app.add_option("--checkpoint", g.checkpoint, "Checkpoint to read (default: <out>/checkpoint.json)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled flow CSV");
  auto* train = app.add_subcommand("train", "Train the detector on benign windows");
  auto* eval = app.add_subcommand("eval", "Calibrate a threshold on validation and report test metrics");
  auto* transfer = app.add_subcommand("transfer", "Fine-tune a checkpoint on target domains");
  auto* bench = app.add_subcommand("bench", "Time the scoring pass");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const netad::RunConfig config = load(g);
    const auto dir = out_dir(g, config);
    if (synth->parsed()) {
      const auto s = netad::run_synth(config, g.out.empty() ? dir : std::filesystem::path(g.out));
      std::cout << "synth: wrote " << s.records << " records (" << s.anomalous << " anomalous) to " << s.path.string()
                << '\n';
    } else if (train->parsed()) {
      const auto s = netad::run_train(config, dir);
      std::cout << "train: " << s.data.train_benign.size() << " benign windows, loss "
                << netad::format_double(s.curve.front()) << " -> " << netad::format_double(s.curve.back())
                << ", checkpoint " << (dir / netad::kCheckpointFile).string() << '\n';
    } else if (eval->parsed()) {
      const auto s = netad::run_eval(config, checkpoint_path(g, dir), dir);
      std::cout << "eval: best validation F1 " << netad::format_double(s.operating_point.f1) << " at threshold "
                << netad::format_double(s.operating_point.threshold) << "; test F1 "
                << netad::format_double(s.test_point.f1) << '\n';
      for (const auto& w : s.report.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << '\n';
    } else if (transfer->parsed()) {
      if (g.checkpoint.empty()) throw netad::ConfigError("transfer needs --checkpoint");
      const auto s = netad::run_transfer(config, g.checkpoint, dir);
      std::cout << "transfer: " << s.result.task_curves.size() << " target task(s), source loss "
                << netad::format_double(s.result.source_curve.front()) << " -> "
                << netad::format_double(s.result.source_curve.back()) << '\n';
    } else if (bench->parsed()) {
      const auto j = netad::run_bench(config, checkpoint_path(g, dir), dir);
      std::cout << "bench: " << j.at("repetitions").get<std::size_t>() << " repetitions, mean "
                << netad::format_double(j.at("model").at("mean_seconds").get<double>()) << " s over "
                << j.at("windows").get<std::size_t>() << " windows\n";
    }
  } catch (const netad::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
