#include "netad/flow_ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>

#include "netad/errors.hpp"
#include "netad/format.hpp"
#include "netad/random.hpp"

namespace netad {

nlohmann::json CleaningSummary::to_json() const {
  nlohmann::json j;
  j["rows_read"] = rows_read;
  j["rows_dropped"] = rows_dropped;
  j["reasons"] = reasons;
  j["cells_clipped"] = cells_clipped;
  j["warnings"] = warnings;
  return j;
}

namespace {

enum class CellKind { finite, positive_infinity, negative_infinity, nan, unparseable };

struct Cell {
  CellKind kind;
  double value;
};

Cell parse_cell(std::string_view text) {
  text = trim(text);
  if (text.empty()) return {CellKind::unparseable, 0.0};
  // from_chars rejects a leading '+'.
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc::result_out_of_range) {
    // Overflowing literals such as 1e999 read as infinities.
    const bool negative = text.front() == '-';
    return {negative ? CellKind::negative_infinity : CellKind::positive_infinity, 0.0};
  }
  if (ec != std::errc() || ptr != text.data() + text.size()) return {CellKind::unparseable, 0.0};
  if (std::isnan(v)) return {CellKind::nan, v};
  if (std::isinf(v)) return {v > 0 ? CellKind::positive_infinity : CellKind::negative_infinity, v};
  return {CellKind::finite, v};
}

bool getline_any(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

struct PendingRow {
  std::vector<Cell> cells;
  Label label;
  std::size_t row_index;
};

}  // namespace

ParsedFlows parse_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file: " + path.string());
  return parse_csv(in, schema);
}

ParsedFlows parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!getline_any(in, line) || trim(line).empty()) {
    throw EmptyInputError("CSV input is empty (no header row)");
  }
  std::vector<std::string> header = split_fields(line, schema.delimiter);
  for (auto& h : header) h = std::string(trim(h));
  // UTF-8 byte order mark on the first column.
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

  auto column_of = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), std::string(trim(name)));
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto label_col = column_of(schema.label_column);
  if (!label_col) throw SchemaError("label column '" + schema.label_column + "' not found in header");

  std::vector<std::string> lines;
  while (getline_any(in, line)) {
    if (trim(line).empty()) continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw EmptyInputError("CSV input has a header but no data rows");

  ParsedFlows result;
  std::vector<std::size_t> feature_cols;
  if (!schema.feature_columns.empty()) {
    for (const auto& name : schema.feature_columns) {
      const auto col = column_of(name);
      if (!col) throw SchemaError("feature column '" + name + "' not found in header");
      feature_cols.push_back(*col);
      result.feature_names.push_back(header[*col]);
    }
  } else if (schema.auto_numeric) {
    // A column is numeric when its cell in the first well-formed row parses
    // as a number (NaN and Infinity included).
    const auto probe = std::find_if(lines.begin(), lines.end(), [&](const std::string& l) {
      return split_fields(l, schema.delimiter).size() == header.size();
    });
    if (probe != lines.end()) {
      const auto cells = split_fields(*probe, schema.delimiter);
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == *label_col) continue;
        if (parse_cell(cells[c]).kind != CellKind::unparseable) {
          feature_cols.push_back(c);
          result.feature_names.push_back(header[c]);
        }
      }
    }
  }
  if (feature_cols.empty()) throw SchemaError("schema selects no feature columns");

  CleaningSummary& summary = result.summary;
  std::vector<PendingRow> kept;
  kept.reserve(lines.size());
  const std::string benign(trim(schema.benign_value));

  for (std::size_t row = 0; row < lines.size(); ++row) {
    ++summary.rows_read;
    const auto fields = split_fields(lines[row], schema.delimiter);
    if (fields.size() != header.size()) {
      ++summary.reasons["field_count"];
      ++summary.rows_dropped;
      continue;
    }
    PendingRow pending{{}, trim(fields[*label_col]) == benign ? Label::benign : Label::anomalous, row};
    pending.cells.reserve(feature_cols.size());
    std::optional<std::string> reason;
    for (const std::size_t c : feature_cols) {
      const Cell cell = parse_cell(fields[c]);
      switch (cell.kind) {
        case CellKind::unparseable:
          reason = "unparseable";
          break;
        case CellKind::nan:
          if (!reason) reason = "non_finite";
          break;
        case CellKind::positive_infinity:
        case CellKind::negative_infinity:
          if (!reason && schema.cleaning == CleaningPolicy::drop) reason = "non_finite";
          break;
        case CellKind::finite:
          break;
      }
      pending.cells.push_back(cell);
    }
    if (reason) {
      ++summary.reasons[*reason];
      ++summary.rows_dropped;
      continue;
    }
    kept.push_back(std::move(pending));
  }

  // Clip policy: infinities take the finite extremes of their column among
  // the kept rows (0 when the column has no finite value).
  std::vector<double> col_max(feature_cols.size(), -std::numeric_limits<double>::infinity());
  std::vector<double> col_min(feature_cols.size(), std::numeric_limits<double>::infinity());
  if (schema.cleaning == CleaningPolicy::clip) {
    for (const auto& r : kept) {
      for (std::size_t j = 0; j < r.cells.size(); ++j) {
        if (r.cells[j].kind != CellKind::finite) continue;
        col_max[j] = std::max(col_max[j], r.cells[j].value);
        col_min[j] = std::min(col_min[j], r.cells[j].value);
      }
    }
  }

  result.records.reserve(kept.size());
  for (auto& r : kept) {
    FlowRecord rec;
    rec.label = r.label;
    rec.row_index = r.row_index;
    rec.features.reserve(r.cells.size());
    for (std::size_t j = 0; j < r.cells.size(); ++j) {
      const Cell& cell = r.cells[j];
      double v = cell.value;
      if (cell.kind == CellKind::positive_infinity) {
        v = std::isfinite(col_max[j]) ? col_max[j] : 0.0;
        ++summary.cells_clipped;
      } else if (cell.kind == CellKind::negative_infinity) {
        v = std::isfinite(col_min[j]) ? col_min[j] : 0.0;
        ++summary.cells_clipped;
      }
      rec.features.push_back(v);
    }
    result.records.push_back(std::move(rec));
  }

  if (summary.rows_dropped * 2 > summary.rows_read) {
    summary.warnings.push_back("more than 50% of rows dropped (" + std::to_string(summary.rows_dropped) +
                               " of " + std::to_string(summary.rows_read) + ")");
  }
  return result;
}

void write_csv(std::ostream& out, std::span<const std::string> feature_names,
               std::span<const FlowRecord> records, const CsvSchema& schema,
               const std::string& anomalous_value) {
  const char d = schema.delimiter;
  for (const auto& name : feature_names) out << name << d;
  out << schema.label_column << '\n';
  for (const auto& r : records) {
    if (r.features.size() != feature_names.size()) {
      throw ShapeError("write_csv: record has " + std::to_string(r.features.size()) + " features, header has " +
                       std::to_string(feature_names.size()));
    }
    for (const double v : r.features) out << format_double(v) << d;
    out << (r.label == Label::benign ? schema.benign_value : anomalous_value) << '\n';
  }
}

void SplitSpec::validate() const {
  const double f[] = {train_fraction, val_fraction, test_fraction};
  for (const double v : f) {
    if (!(v > 0.0)) throw ConfigError("split fractions must be positive");
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

namespace {

std::size_t floor_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

}  // namespace

SplitResult split(std::span<const FlowRecord> records, const SplitSpec& spec) {
  spec.validate();
  if (records.empty()) throw EmptyInputError("cannot split an empty record sequence");

  const std::size_t n = records.size();
  const std::size_t n_val = floor_count(n, spec.val_fraction);
  const std::size_t n_test = floor_count(n, spec.test_fraction);
  const std::size_t n_train = n - n_val - n_test;
  if (n_val == 0 || n_test == 0 || n_train == 0) {
    throw ConfigError("split of " + std::to_string(n) + " records leaves an empty partition");
  }

  SplitResult out;
  if (spec.mode == SplitMode::chronological) {
    out.train.assign(records.begin(), records.begin() + n_train);
    out.val.assign(records.begin() + n_train, records.begin() + n_train + n_val);
    out.test.assign(records.begin() + n_train + n_val, records.end());
    return out;
  }

  // Stratified: shuffle each class, then hand out floor(N_c * f) per class
  // and give the leftover slots to the classes with the largest remainders.
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<int>(records[i].label)].push_back(i);
  Rng rng(spec.seed);
  for (auto& idx : by_class) rng.shuffle(idx);

  auto allocate = [&](std::size_t target, double fraction, const std::size_t available[2]) {
    std::array<std::size_t, 2> take{};
    std::array<double, 2> remainder{};
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
      const double exact = static_cast<double>(by_class[c].size()) * fraction;
      take[c] = std::min(available[c], static_cast<std::size_t>(std::floor(exact + 1e-9)));
      remainder[c] = exact - static_cast<double>(take[c]);
      assigned += take[c];
    }
    while (assigned < target) {
      const int c = remainder[0] >= remainder[1] ? 0 : 1;
      const int pick = take[c] < available[c] ? c : 1 - c;
      ++take[pick];
      remainder[pick] = -1.0;
      ++assigned;
    }
    return take;
  };

  std::size_t available[2] = {by_class[0].size(), by_class[1].size()};
  const auto val_take = allocate(n_val, spec.val_fraction, available);
  available[0] -= val_take[0];
  available[1] -= val_take[1];
  const auto test_take = allocate(n_test, spec.test_fraction, available);

  std::vector<std::size_t> val_idx, test_idx, train_idx;
  for (int c = 0; c < 2; ++c) {
    const auto& idx = by_class[c];
    std::size_t pos = 0;
    for (std::size_t k = 0; k < val_take[c]; ++k) val_idx.push_back(idx[pos++]);
    for (std::size_t k = 0; k < test_take[c]; ++k) test_idx.push_back(idx[pos++]);
    while (pos < idx.size()) train_idx.push_back(idx[pos++]);
  }
  // Each partition keeps source order.
  for (auto* part : {&train_idx, &val_idx, &test_idx}) std::sort(part->begin(), part->end());
  for (const auto i : train_idx) out.train.push_back(records[i]);
  for (const auto i : val_idx) out.val.push_back(records[i]);
  for (const auto i : test_idx) out.test.push_back(records[i]);
  return out;
}

NormalizationStats fit_normalizer(std::span<const FlowRecord> train) {
  if (train.empty()) throw EmptyInputError("fit_normalizer needs at least one record");
  const std::size_t n = train.front().features.size();
  NormalizationStats stats;
  stats.mean.assign(n, 0.0);
  stats.std.assign(n, 0.0);
  for (const auto& r : train) {
    if (r.features.size() != n) throw ShapeError("fit_normalizer: inconsistent feature counts");
    for (std::size_t j = 0; j < n; ++j) stats.mean[j] += r.features[j];
  }
  const double count = static_cast<double>(train.size());
  for (auto& m : stats.mean) m /= count;
  for (const auto& r : train) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = r.features[j] - stats.mean[j];
      stats.std[j] += d * d;
    }
  }
  for (auto& s : stats.std) s = std::sqrt(s / count);
  return stats;
}

namespace {

void check_dims(const FlowRecord& record, const NormalizationStats& stats) {
  if (record.features.size() != stats.mean.size() || stats.std.size() != stats.mean.size()) {
    throw ShapeError("record has " + std::to_string(record.features.size()) +
                     " features but normalization stats cover " + std::to_string(stats.mean.size()));
  }
}

}  // namespace

FlowRecord normalize(const FlowRecord& record, const NormalizationStats& stats) {
  check_dims(record, stats);
  FlowRecord out = record;
  for (std::size_t j = 0; j < out.features.size(); ++j) {
    out.features[j] = (record.features[j] - stats.mean[j]) / std::max(stats.std[j], stats.epsilon);
  }
  return out;
}

FlowRecord denormalize(const FlowRecord& record, const NormalizationStats& stats) {
  check_dims(record, stats);
  FlowRecord out = record;
  for (std::size_t j = 0; j < out.features.size(); ++j) {
    out.features[j] = record.features[j] * std::max(stats.std[j], stats.epsilon) + stats.mean[j];
  }
  return out;
}

std::vector<FlowRecord> normalize_all(std::span<const FlowRecord> records, const NormalizationStats& stats) {
  std::vector<FlowRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(normalize(r, stats));
  return out;
}

nlohmann::json to_json(const NormalizationStats& stats) {
  return {{"mean", stats.mean}, {"std", stats.std}, {"epsilon", stats.epsilon}};
}

NormalizationStats normalization_from_json(const nlohmann::json& j) {
  NormalizationStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std = j.at("std").get<std::vector<double>>();
  s.epsilon = j.at("epsilon").get<double>();
  if (s.mean.size() != s.std.size()) throw ArtifactMismatch("normalization mean/std length mismatch");
  return s;
}

}  // namespace netad
