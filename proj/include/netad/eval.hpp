#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "netad/detector.hpp"

namespace netad {

struct ThresholdPoint {
  double threshold = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double precision = 1.0;  // 1 when nothing is predicted anomalous
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct Sweep {
  std::vector<ThresholdPoint> points;
  // Set when every label belongs to the same class.
  bool single_class = false;
};

// Confusion counts when "anomalous" means score > threshold.
ThresholdPoint evaluate_threshold(std::span<const double> scores, std::span<const Label> labels, double threshold);

// Thresholds: min - delta, the interior score quantiles, max + delta, so both
// the all-positive and the all-negative regime appear.
std::vector<double> quantile_grid(std::span<const double> scores, std::size_t n_points);

Sweep sweep_thresholds(std::span<const double> scores, std::span<const Label> labels, std::size_t n_points = 101);

// Highest F1; ties go to the lower threshold.
ThresholdPoint pick_operating_point(std::span<const ThresholdPoint> sweep);

nlohmann::json to_json(const ThresholdPoint& p);
void write_sweep_csv(std::ostream& out, std::span<const ThresholdPoint> sweep);

struct TimingSummary {
  std::size_t repetitions = 0;
  std::size_t windows = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;  // population standard deviation
  double windows_per_second = 0.0;
  std::vector<double> seconds;

  nlohmann::json to_json() const;
};

// Wall-clock time of scoring every window, repeated sequentially.
TimingSummary benchmark(const DetectorModel& model, const WindowBatch& windows, std::size_t repetitions = 10);

struct VolumePoint {
  double fraction = 0.0;
  std::size_t train_windows = 0;
  bool skipped = false;
  double threshold = 0.0;
  double validation_f1 = 0.0;
  double test_f1 = 0.0;
  double test_accuracy = 0.0;
};

struct VolumeCurveInputs {
  const WindowBatch* train_benign = nullptr;
  const WindowBatch* validation = nullptr;
  const WindowBatch* test = nullptr;
  ModelConfig model;
  TrainConfig training;
  DetectLossConfig loss;
  std::size_t grid_points = 101;
};

inline constexpr std::size_t kMinVolumeWindows = 10;

// Retrains on the leading fraction of the training windows for each entry,
// calibrates the threshold on validation and reports test metrics. Points
// with fewer than kMinVolumeWindows windows are marked skipped.
std::vector<VolumePoint> data_volume_curve(std::span<const double> fractions, const VolumeCurveInputs& inputs,
                                           std::vector<std::string>* warnings = nullptr);

nlohmann::json to_json(const VolumePoint& p);

}  // namespace netad
