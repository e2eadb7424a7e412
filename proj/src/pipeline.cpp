#include "netad/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "netad/errors.hpp"
#include "netad/format.hpp"
#include "netad/synth.hpp"

namespace netad {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::size_t count_anomalous(const WindowBatch& b) {
  std::size_t n = 0;
  for (const auto& w : b.windows) n += w.label == Label::anomalous ? 1 : 0;
  return n;
}

nlohmann::json sweep_json(const Sweep& sweep) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : sweep.points) points.push_back(to_json(p));
  return points;
}

}  // namespace

ParsedFlows load_flows(const DataSource& source, const CsvSchema& schema) {
  if (source.csv) return parse_csv(*source.csv, schema);
  if (!source.synth) throw ConfigError("data source is empty");
  // Round-trip through the CSV text so synthetic and file data take the
  // same ingestion path.
  std::stringstream text;
  write_synth_csv(text, generate(*source.synth));
  return parse_csv(text, schema);
}

PreparedData prepare_data(const DataSource& source, const RunConfig& config, std::size_t window_length,
                          std::size_t window_stride, const NormalizationStats* stats,
                          const std::vector<std::string>* expected_features) {
  ParsedFlows flows = load_flows(source, config.schema);
  if (expected_features != nullptr && flows.feature_names != *expected_features) {
    std::string detail = "data has " + std::to_string(flows.feature_names.size()) + " feature columns, checkpoint has " +
                         std::to_string(expected_features->size());
    if (flows.feature_names.size() == expected_features->size()) detail = "feature column names differ from checkpoint";
    throw ArtifactMismatch("schema mismatch with checkpoint: " + detail +
                           "; re-ingest with the schema the model was trained on");
  }
  SplitResult parts = split(flows.records, config.split);

  PreparedData d;
  d.feature_names = std::move(flows.feature_names);
  d.cleaning = std::move(flows.summary);
  d.stats = stats != nullptr ? *stats : fit_normalizer(parts.train);
  d.train_records = parts.train.size();
  d.val_records = parts.val.size();
  d.test_records = parts.test.size();
  d.train = make_windows(normalize_all(parts.train, d.stats), window_length, window_stride);
  d.train_benign = benign_only(d.train);
  d.validation = make_windows(normalize_all(parts.val, d.stats), window_length, window_stride);
  d.test = make_windows(normalize_all(parts.test, d.stats), window_length, window_stride);
  return d;
}

SynthSummary run_synth(const RunConfig& config, const std::filesystem::path& out) {
  if (!config.data.synth) throw ConfigError("synth command needs a data.synth scenario in the config");
  std::filesystem::path path = out;
  if (path.extension() != ".csv") {
    ensure_dir(path);
    path /= kSynthFile;
  } else if (path.has_parent_path()) {
    ensure_dir(path.parent_path());
  }
  const SynthOutput data = generate(*config.data.synth);
  std::ostringstream text;
  write_synth_csv(text, data);
  write_text(path, text.str());
  SynthSummary s{path, data.records.size(), 0};
  for (const auto& r : data.records) s.anomalous += r.label == Label::anomalous ? 1 : 0;
  return s;
}

TrainSummary run_train(const RunConfig& config, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  TrainSummary s;
  s.data = prepare_data(config.data, config, config.train.window_length, config.train.window_stride);
  if (s.data.train_benign.empty()) throw EmptyInputError("training split has no benign windows");
  TrainResult trained = train(s.data.train_benign, config.model, config.train, config.loss);
  s.curve = std::move(trained.curve);

  Checkpoint& c = s.checkpoint;
  c.model = std::move(trained.model);
  c.stats = s.data.stats;
  c.feature_names = s.data.feature_names;
  c.window_length = config.train.window_length;
  c.window_stride = config.train.window_stride;
  c.config = echo(config);
  save_checkpoint(out_dir / kCheckpointFile, c);

  std::ostringstream curve;
  curve << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < s.curve.size(); ++e) curve << e << ',' << format_double(s.curve[e]) << '\n';
  write_text(out_dir / kCurveFile, curve.str());
  write_text(out_dir / kCleaningFile, s.data.cleaning.to_json().dump(2) + "\n");
  return s;
}

EvalSummary evaluate_model(const RunConfig& config, const Checkpoint& checkpoint, const PreparedData& data) {
  EvalSummary s;
  std::vector<std::string> warnings = data.cleaning.warnings;

  const auto val_labels = window_labels(data.validation);
  const auto test_labels = window_labels(data.test);
  const auto val_scores = score_all(data.validation, checkpoint.model);
  const auto test_scores = score_all(data.test, checkpoint.model);
  s.validation_sweep = sweep_thresholds(val_scores, val_labels, config.eval.grid_points);
  s.test_sweep = sweep_thresholds(test_scores, test_labels, config.eval.grid_points);
  s.operating_point = pick_operating_point(s.validation_sweep.points);
  s.test_point = evaluate_threshold(test_scores, test_labels, s.operating_point.threshold);
  if (s.validation_sweep.single_class) warnings.push_back("validation windows contain a single class");
  if (s.test_sweep.single_class) warnings.push_back("test windows contain a single class");

  if (!config.eval.data_volume_fractions.empty()) {
    VolumeCurveInputs in;
    in.train_benign = &data.train_benign;
    in.validation = &data.validation;
    in.test = &data.test;
    in.model = checkpoint.model.config;
    in.training = config.train;
    in.loss = config.loss;
    in.grid_points = config.eval.grid_points;
    s.volume_curve = data_volume_curve(config.eval.data_volume_fractions, in, &warnings);
  }

  nlohmann::json& r = s.report;
  r["config"] = echo(config);
  r["dataset"] = {
      {"feature_names", data.feature_names},
      {"cleaning", data.cleaning.to_json()},
      {"records", {{"train", data.train_records}, {"validation", data.val_records}, {"test", data.test_records}}},
      {"windows",
       {{"length", data.validation.length},
        {"stride", data.validation.stride},
        {"validation", {{"total", data.validation.size()}, {"anomalous", count_anomalous(data.validation)}}},
        {"test", {{"total", data.test.size()}, {"anomalous", count_anomalous(data.test)}}}}}};
  r["validation_sweep"] = sweep_json(s.validation_sweep);
  r["best_f1_point"] = to_json(s.operating_point);
  r["test_at_operating_point"] = to_json(s.test_point);
  r["test_sweep"] = sweep_json(s.test_sweep);
  r["degenerate_class"] = s.validation_sweep.single_class || s.test_sweep.single_class;
  // Wall-clock figures live in timing.json so the report stays reproducible.
  r["timing"] = nullptr;
  if (!s.volume_curve.empty()) {
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : s.volume_curve) curve.push_back(to_json(p));
    r["data_volume_curve"] = curve;
  }
  r["warnings"] = warnings;
  return s;
}

EvalSummary run_eval(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                     const std::filesystem::path& out_dir) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  const PreparedData data = prepare_data(config.data, config, checkpoint.window_length, checkpoint.window_stride,
                                         &checkpoint.stats, &checkpoint.feature_names);
  EvalSummary s = evaluate_model(config, checkpoint, data);
  ensure_dir(out_dir);
  write_text(out_dir / kReportFile, s.report.dump(2) + "\n");
  std::ostringstream sweep;
  write_sweep_csv(sweep, s.validation_sweep.points);
  write_text(out_dir / kSweepFile, sweep.str());
  return s;
}

TransferSummary run_transfer(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                             const std::filesystem::path& out_dir) {
  if (!config.transfer) throw ConfigError("transfer command needs a transfer section in the config");
  const Checkpoint pretrained = load_checkpoint(checkpoint_path);
  const TransferSection& section = *config.transfer;

  const PreparedData source = prepare_data(config.data, config, pretrained.window_length, pretrained.window_stride,
                                           &pretrained.stats, &pretrained.feature_names);
  TransferConfig tc;
  tc.task_count = section.task_count;
  tc.sharing = section.sharing;
  tc.training = config.train;
  tc.training.epochs = section.epochs;
  if (section.learning_rate) tc.training.learning_rate = *section.learning_rate;
  for (const auto& target : section.targets) {
    PreparedData td = prepare_data(target.data, config, pretrained.window_length, pretrained.window_stride,
                                   &pretrained.stats, &pretrained.feature_names);
    if (td.train_benign.empty()) throw EmptyInputError("target '" + target.name + "' has no benign training windows");
    tc.targets.push_back({target.name, std::move(td.train_benign), target.weight});
  }

  TransferSummary s;
  s.result = fine_tune(pretrained.model, source.train_benign, tc, config.loss);

  Checkpoint& c = s.checkpoint;
  c = pretrained;
  c.model = s.result.models.source;
  c.sharing = to_string(section.sharing);
  c.tasks.clear();
  for (std::size_t i = 0; i < tc.targets.size(); ++i) {
    c.tasks.push_back({tc.targets[i].name, tc.targets[i].weight, s.result.models.decoder_for(i)});
  }
  c.config = echo(config);

  ensure_dir(out_dir);
  save_checkpoint(out_dir / kCheckpointFile, c);
  std::ostringstream curves;
  curves << "epoch,source";
  for (const auto& t : tc.targets) curves << ',' << t.name;
  curves << ",total\n";
  for (std::size_t e = 0; e < s.result.source_curve.size(); ++e) {
    curves << e << ',' << format_double(s.result.source_curve[e]);
    for (const auto& task : s.result.task_curves) curves << ',' << format_double(task[e]);
    curves << ',' << format_double(s.result.total_curve[e]) << '\n';
  }
  write_text(out_dir / kTransferCurveFile, curves.str());
  return s;
}

nlohmann::json run_bench(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                         const std::filesystem::path& out_dir) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  const PreparedData data = prepare_data(config.data, config, checkpoint.window_length, checkpoint.window_stride,
                                         &checkpoint.stats, &checkpoint.feature_names);
  nlohmann::json j;
  j["schema_version"] = 1;
  j["repetitions"] = config.bench.repetitions;
  j["windows"] = data.test.size();
  j["model"] = benchmark(checkpoint.model, data.test, config.bench.repetitions).to_json();
  if (config.bench.include_ablation) {
    // Same head with attention bypassed (Z := X); scoring cost only.
    DetectorModel ablation = checkpoint.model;
    ablation.config.bypass_attention = true;
    j["ablation"] = benchmark(ablation, data.test, config.bench.repetitions).to_json();
  } else {
    j["ablation"] = nullptr;
  }
  ensure_dir(out_dir);
  write_text(out_dir / kTimingFile, j.dump(2) + "\n");
  return j;
}

}  // namespace netad
