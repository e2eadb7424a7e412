#include "netad/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "netad/errors.hpp"
#include "netad/format.hpp"

namespace netad {

ThresholdPoint evaluate_threshold(std::span<const double> scores, std::span<const Label> labels, double threshold) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  ThresholdPoint p;
  p.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    const bool actual = labels[i] == Label::anomalous;
    if (predicted && actual) ++p.tp;
    else if (predicted) ++p.fp;
    else if (actual) ++p.fn;
    else ++p.tn;
  }
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  p.precision = p.tp + p.fp > 0 ? d(p.tp) / d(p.tp + p.fp) : 1.0;
  p.recall = p.tp + p.fn > 0 ? d(p.tp) / d(p.tp + p.fn) : 0.0;
  p.f1 = p.precision + p.recall > 0.0 ? 2.0 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
  p.accuracy = scores.empty() ? 0.0 : d(p.tp + p.tn) / d(scores.size());
  return p;
}

std::vector<double> quantile_grid(std::span<const double> scores, std::size_t n_points) {
  if (scores.empty()) throw EmptyInputError("quantile_grid needs at least one score");
  if (n_points < 2) throw ConfigError("threshold grid needs at least 2 points");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  const double delta = 1e-6 * std::max(1.0, hi - lo);

  std::vector<double> grid(n_points);
  grid.front() = lo - delta;
  grid.back() = hi + delta;
  const double last = static_cast<double>(sorted.size() - 1);
  for (std::size_t k = 1; k + 1 < n_points; ++k) {
    const double pos = last * static_cast<double>(k) / static_cast<double>(n_points - 1);
    const auto below = static_cast<std::size_t>(std::floor(pos));
    const std::size_t above = std::min(below + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(below);
    grid[k] = sorted[below] + frac * (sorted[above] - sorted[below]);
  }
  return grid;
}

Sweep sweep_thresholds(std::span<const double> scores, std::span<const Label> labels, std::size_t n_points) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  Sweep sweep;
  const auto anomalous = std::count(labels.begin(), labels.end(), Label::anomalous);
  sweep.single_class = anomalous == 0 || static_cast<std::size_t>(anomalous) == labels.size();
  for (const double t : quantile_grid(scores, n_points)) sweep.points.push_back(evaluate_threshold(scores, labels, t));
  return sweep;
}

ThresholdPoint pick_operating_point(std::span<const ThresholdPoint> sweep) {
  if (sweep.empty()) throw EmptyInputError("cannot pick an operating point from an empty sweep");
  const ThresholdPoint* best = &sweep.front();
  for (const auto& p : sweep) {
    if (p.f1 > best->f1 || (p.f1 == best->f1 && p.threshold < best->threshold)) best = &p;
  }
  return *best;
}

nlohmann::json to_json(const ThresholdPoint& p) {
  return {{"threshold", p.threshold}, {"tp", p.tp},       {"fp", p.fp},         {"tn", p.tn},
          {"fn", p.fn},               {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"accuracy", p.accuracy}};
}

void write_sweep_csv(std::ostream& out, std::span<const ThresholdPoint> sweep) {
  out << "threshold,tp,fp,tn,fn,precision,recall,f1,accuracy\n";
  for (const auto& p : sweep) {
    out << format_double(p.threshold) << ',' << p.tp << ',' << p.fp << ',' << p.tn << ',' << p.fn << ','
        << format_double(p.precision) << ',' << format_double(p.recall) << ',' << format_double(p.f1) << ','
        << format_double(p.accuracy) << '\n';
  }
}

nlohmann::json TimingSummary::to_json() const {
  return {{"repetitions", repetitions},         {"windows", windows},
          {"mean_seconds", mean_seconds},       {"std_seconds", std_seconds},
          {"windows_per_second", windows_per_second}, {"seconds", seconds}};
}

TimingSummary benchmark(const DetectorModel& model, const WindowBatch& windows, std::size_t repetitions) {
  if (repetitions == 0) throw ConfigError("benchmark repetitions must be at least 1");
  TimingSummary t;
  t.repetitions = repetitions;
  t.windows = windows.size();
  volatile double sink = 0.0;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    for (const auto& w : windows.windows) sink = sink + score(w.x, model);
    const auto stop = std::chrono::steady_clock::now();
    t.seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  for (const double s : t.seconds) t.mean_seconds += s;
  t.mean_seconds /= static_cast<double>(repetitions);
  for (const double s : t.seconds) t.std_seconds += (s - t.mean_seconds) * (s - t.mean_seconds);
  t.std_seconds = std::sqrt(t.std_seconds / static_cast<double>(repetitions));
  t.windows_per_second = t.mean_seconds > 0.0 ? static_cast<double>(t.windows) / t.mean_seconds : 0.0;
  return t;
}

std::vector<VolumePoint> data_volume_curve(std::span<const double> fractions, const VolumeCurveInputs& inputs,
                                           std::vector<std::string>* warnings) {
  std::vector<VolumePoint> curve;
  if (fractions.empty()) return curve;
  if (inputs.train_benign == nullptr || inputs.validation == nullptr || inputs.test == nullptr) {
    throw ConfigError("data_volume_curve: missing window batches");
  }
  double previous = 0.0;
  for (const double f : fractions) {
    if (!(f > previous) || f > 1.0) throw ConfigError("data volume fractions must be ascending within (0, 1]");
    previous = f;
  }

  const auto val_labels = window_labels(*inputs.validation);
  const auto test_labels = window_labels(*inputs.test);
  const WindowBatch& full = *inputs.train_benign;
  for (const double f : fractions) {
    VolumePoint p;
    p.fraction = f;
    p.train_windows = static_cast<std::size_t>(std::floor(static_cast<double>(full.size()) * f + 1e-9));
    if (p.train_windows < kMinVolumeWindows) {
      p.skipped = true;
      if (warnings != nullptr) {
        warnings->push_back("data volume fraction " + format_double(f) + " yields " +
                            std::to_string(p.train_windows) + " windows; skipped");
      }
      curve.push_back(p);
      continue;
    }
    WindowBatch subset{full.length, full.stride, {}};
    subset.windows.assign(full.windows.begin(), full.windows.begin() + static_cast<std::ptrdiff_t>(p.train_windows));
    const TrainResult trained = train(subset, inputs.model, inputs.training, inputs.loss);

    const auto val_scores = score_all(*inputs.validation, trained.model);
    const auto op = pick_operating_point(sweep_thresholds(val_scores, val_labels, inputs.grid_points).points);
    const auto test_scores = score_all(*inputs.test, trained.model);
    const auto test_point = evaluate_threshold(test_scores, test_labels, op.threshold);
    p.threshold = op.threshold;
    p.validation_f1 = op.f1;
    p.test_f1 = test_point.f1;
    p.test_accuracy = test_point.accuracy;
    curve.push_back(p);
  }
  return curve;
}

nlohmann::json to_json(const VolumePoint& p) {
  return {{"fraction", p.fraction},       {"train_windows", p.train_windows}, {"skipped", p.skipped},
          {"threshold", p.threshold},     {"validation_f1", p.validation_f1}, {"test_f1", p.test_f1},
          {"test_accuracy", p.test_accuracy}};
}

}  // namespace netad
