#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clustermodel/error.hpp"

namespace cmodel {

// Dense row-major numeric table with named columns.
//
// Row names are optional metadata. They stay empty for ordinary datasets and
// are filled by transpose() so that a transposed matrix still knows which
// attribute each of its rows came from.
class DataMatrix {
 public:
  DataMatrix() = default;

  DataMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
    col_names_.reserve(cols);
    for (std::size_t c = 0; c < cols; ++c) col_names_.push_back("c" + std::to_string(c));
  }

  DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
             std::vector<std::string> col_names, std::vector<std::string> row_names = {})
      : rows_(rows),
        cols_(cols),
        values_(std::move(values)),
        col_names_(std::move(col_names)),
        row_names_(std::move(row_names)) {
    if (values_.size() != rows_ * cols_) throw ShapeError("DataMatrix: value count != rows*cols");
    if (col_names_.size() != cols_) throw ShapeError("DataMatrix: column name count != cols");
    if (!row_names_.empty() && row_names_.size() != rows_)
      throw ShapeError("DataMatrix: row name count != rows");
    for (double v : values_)
      if (!std::isfinite(v)) throw DomainError("DataMatrix: non-finite value");
  }

  static DataMatrix from_rows(const std::vector<std::vector<double>>& rows,
                              std::vector<std::string> col_names = {}) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? col_names.size() : rows.front().size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("DataMatrix::from_rows: ragged rows");
      values.insert(values.end(), row.begin(), row.end());
    }
    if (col_names.empty())
      for (std::size_t j = 0; j < c; ++j) col_names.push_back("c" + std::to_string(j));
    return DataMatrix(r, c, std::move(values), std::move(col_names));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::string>& col_names() const noexcept { return col_names_; }
  const std::vector<std::string>& row_names() const noexcept { return row_names_; }

  // Row name if present, otherwise the synthetic identifier "r<index>".
  std::string row_name(std::size_t r) const {
    return row_names_.empty() ? "r" + std::to_string(r) : row_names_[r];
  }

  std::optional<std::size_t> find_column(std::string_view name) const {
    for (std::size_t c = 0; c < cols_; ++c)
      if (col_names_[c] == name) return c;
    return std::nullopt;
  }

  DataMatrix select_rows(std::span<const std::size_t> idx) const {
    std::vector<double> values;
    values.reserve(idx.size() * cols_);
    std::vector<std::string> names;
    for (std::size_t r : idx) {
      auto src = row(r);
      values.insert(values.end(), src.begin(), src.end());
      if (!row_names_.empty()) names.push_back(row_names_[r]);
    }
    return DataMatrix(idx.size(), cols_, std::move(values), col_names_, std::move(names));
  }

  DataMatrix select_columns(std::span<const std::size_t> idx) const {
    std::vector<double> values;
    values.reserve(rows_ * idx.size());
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c : idx) values.push_back((*this)(r, c));
    std::vector<std::string> names;
    for (std::size_t c : idx) names.push_back(col_names_[c]);
    return DataMatrix(rows_, idx.size(), std::move(values), std::move(names), row_names_);
  }

  friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<std::string> col_names_;
  std::vector<std::string> row_names_;
};

using ClassId = std::size_t;

struct LabeledDataset {
  DataMatrix matrix;
  std::vector<ClassId> labels;
  std::vector<std::string> class_names;
  std::string label_name = "label";

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (ClassId y : labels) ++counts[y];
    return counts;
  }

  std::size_t distinct_classes() const {
    auto counts = class_counts();
    return static_cast<std::size_t>(
        std::count_if(counts.begin(), counts.end(), [](std::size_t n) { return n > 0; }));
  }

  // Checks the full invariant set, including "at least two classes present".
  // Row subsets built during cross-validation skip this on purpose.
  void validate() const {
    if (labels.size() != matrix.rows()) throw ShapeError("label count != row count");
    for (ClassId y : labels)
      if (y >= class_names.size()) throw SchemaError("label id out of range");
    if (distinct_classes() < 2) throw SchemaError("dataset needs at least two classes");
  }

  LabeledDataset select_rows(std::span<const std::size_t> idx) const {
    LabeledDataset out{matrix.select_rows(idx), {}, class_names, label_name};
    out.labels.reserve(idx.size());
    for (std::size_t r : idx) out.labels.push_back(labels[r]);
    return out;
  }

  LabeledDataset select_columns(std::span<const std::size_t> idx) const {
    return {matrix.select_columns(idx), labels, class_names, label_name};
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

// ---------------------------------------------------------------------------
// Schema

enum class AttributeKind { numeric, categorical, label, excluded };

struct AttributeSchema {
  std::string name;
  AttributeKind kind = AttributeKind::numeric;
  std::vector<double> bins;  // ascending cut points, empty = no discretization
};

namespace detail {

inline void check_bins(const AttributeSchema& a) {
  for (std::size_t i = 1; i < a.bins.size(); ++i)
    if (!(a.bins[i - 1] < a.bins[i]))
      throw SchemaError("bins for '" + a.name + "' are not strictly ascending");
}

}  // namespace detail

inline void validate_schema(std::span<const AttributeSchema> schema) {
  std::size_t labels = 0;
  for (const auto& a : schema) {
    if (a.kind == AttributeKind::label) ++labels;
    detail::check_bins(a);
  }
  if (labels != 1) throw SchemaError("schema must contain exactly one label attribute");
}

// Bin index of a value: the number of cut points strictly below it. A value
// equal to a cut point therefore lands in the lower bin.
inline double bin_index(double value, std::span<const double> cuts) {
  return static_cast<double>(std::lower_bound(cuts.begin(), cuts.end(), value) - cuts.begin());
}

inline LabeledDataset discretize(const LabeledDataset& dataset,
                                 std::span<const AttributeSchema> schema) {
  LabeledDataset out = dataset;
  for (const auto& a : schema) {
    if (a.bins.empty() || a.kind == AttributeKind::label || a.kind == AttributeKind::excluded)
      continue;
    detail::check_bins(a);
    auto col = out.matrix.find_column(a.name);
    if (!col) throw SchemaError("discretize: no column named '" + a.name + "'");
    for (std::size_t r = 0; r < out.matrix.rows(); ++r)
      out.matrix(r, *col) = bin_index(out.matrix(r, *col), a.bins);
  }
  return out;
}

// Drops every column whose schema entry is marked excluded.
inline LabeledDataset drop_excluded(const LabeledDataset& dataset,
                                    std::span<const AttributeSchema> schema) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < dataset.matrix.cols(); ++c) {
    const auto& name = dataset.matrix.col_names()[c];
    bool excluded = std::any_of(schema.begin(), schema.end(), [&](const AttributeSchema& a) {
      return a.name == name && a.kind == AttributeKind::excluded;
    });
    if (!excluded) keep.push_back(c);
  }
  return dataset.select_columns(keep);
}

// ---------------------------------------------------------------------------
// Column transforms

// Maps each column affinely onto [0,1]. Constant columns become 0.
inline DataMatrix min_max_scale(const DataMatrix& m) {
  DataMatrix out = m;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      lo = std::min(lo, m(r, c));
      hi = std::max(hi, m(r, c));
    }
    const double span = hi - lo;
    for (std::size_t r = 0; r < m.rows(); ++r)
      out(r, c) = span > 0.0 ? (m(r, c) - lo) / span : 0.0;
  }
  return out;
}

// result(i, j) = m(j, i). The input's column names become the row names of
// the result; the result's column names are the input's row names (or
// synthetic "r<index>" identifiers when the input has none).
inline DataMatrix transpose(const DataMatrix& m) {
  std::vector<double> values(m.rows() * m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) values[c * m.rows() + r] = m(r, c);
  std::vector<std::string> col_names;
  col_names.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) col_names.push_back(m.row_name(r));
  return DataMatrix(m.cols(), m.rows(), std::move(values), std::move(col_names), m.col_names());
}

// ---------------------------------------------------------------------------
// CSV

enum class MissingPolicy { reject, impute_mode };

namespace csv {

// RFC 4180-style record reader: comma separator, double-quoted fields with
// "" escapes, quoted fields may span lines. CR before LF is dropped.
inline std::vector<std::vector<std::string>> read_records(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char ch;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

inline std::string format_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

}  // namespace csv

// Reads a labeled dataset from CSV text.
//
// A column is numeric when every non-empty cell parses as a finite number,
// otherwise categorical with ordinal codes assigned in first-seen order.
// Labels use first-seen order too, except that an all-numeric label column
// orders its classes by numeric value (so "0","1" always map to 0,1).
inline LabeledDataset parse_csv(std::istream& in, const std::string& label_column,
                                MissingPolicy policy = MissingPolicy::reject) {
  auto records = csv::read_records(in);
  if (records.empty()) throw SchemaError("CSV has no header row");
  const auto header = records.front();
  const std::size_t width = header.size();
  std::optional<std::size_t> label_idx;
  for (std::size_t c = 0; c < width; ++c)
    if (csv::trim(header[c]) == label_column) label_idx = c;
  if (!label_idx) throw SchemaError("label column '" + label_column + "' not in header");

  const std::size_t n = records.size() - 1;
  for (std::size_t r = 1; r <= n; ++r)
    if (records[r].size() != width)
      throw ParseError(r, header[std::min(records[r].size(), width - 1)],
                       "expected " + std::to_string(width) + " fields, got " +
                           std::to_string(records[r].size()));

  auto cell = [&](std::size_t r, std::size_t c) { return csv::trim(records[r + 1][c]); };

  // Labels.
  std::vector<ClassId> labels(n);
  std::vector<std::string> class_names;
  {
    bool numeric = true;
    for (std::size_t r = 0; r < n; ++r) {
      if (cell(r, *label_idx).empty()) throw ParseError(r + 1, label_column, "missing label");
      if (!csv::parse_number(cell(r, *label_idx))) numeric = false;
    }
    std::vector<std::string> seen;
    for (std::size_t r = 0; r < n; ++r) {
      std::string v(cell(r, *label_idx));
      if (std::find(seen.begin(), seen.end(), v) == seen.end()) seen.push_back(v);
    }
    if (numeric)
      std::stable_sort(seen.begin(), seen.end(), [](const std::string& a, const std::string& b) {
        return *csv::parse_number(a) < *csv::parse_number(b);
      });
    class_names = seen;
    for (std::size_t r = 0; r < n; ++r) {
      std::string v(cell(r, *label_idx));
      labels[r] = static_cast<ClassId>(
          std::find(class_names.begin(), class_names.end(), v) - class_names.begin());
    }
  }

  std::vector<std::size_t> attr_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < width; ++c)
    if (c != *label_idx) {
      attr_cols.push_back(c);
      names.emplace_back(csv::trim(header[c]));
    }

  std::vector<double> values(n * attr_cols.size(), 0.0);
  for (std::size_t j = 0; j < attr_cols.size(); ++j) {
    const std::size_t c = attr_cols[j];
    bool numeric = true;
    std::vector<std::size_t> missing;
    for (std::size_t r = 0; r < n; ++r) {
      auto s = cell(r, c);
      if (s.empty()) {
        if (policy == MissingPolicy::reject) throw ParseError(r + 1, names[j], "empty cell");
        missing.push_back(r);
      } else if (!csv::parse_number(s)) {
        numeric = false;
      }
    }
    if (missing.size() == n && n > 0) throw ParseError(1, names[j], "column has no values");

    std::vector<std::string> codes;
    for (std::size_t r = 0; r < n; ++r) {
      auto s = cell(r, c);
      if (s.empty()) continue;
      double v;
      if (numeric) {
        v = *csv::parse_number(s);
      } else {
        auto it = std::find(codes.begin(), codes.end(), s);
        if (it == codes.end()) {
          codes.emplace_back(s);
          it = codes.end() - 1;
        }
        v = static_cast<double>(it - codes.begin());
      }
      values[r * attr_cols.size() + j] = v;
    }

    if (!missing.empty()) {
      // Most frequent observed value; ties go to the smallest value.
      std::map<double, std::size_t> freq;
      for (std::size_t r = 0; r < n; ++r)
        if (!cell(r, c).empty()) ++freq[values[r * attr_cols.size() + j]];
      auto mode = std::max_element(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
                    return a.second < b.second;
                  })->first;
      for (std::size_t r : missing) values[r * attr_cols.size() + j] = mode;
    }
  }

  LabeledDataset ds{DataMatrix(n, attr_cols.size(), std::move(values), std::move(names)),
                    std::move(labels), std::move(class_names), label_column};
  ds.validate();
  return ds;
}

inline LabeledDataset load_csv(const std::string& path, const std::string& label_column,
                               MissingPolicy policy = MissingPolicy::reject) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_csv(in, label_column, policy);
}

// Writes attributes followed by the label column (class names, not ids).
inline void write_csv(const LabeledDataset& ds, std::ostream& out) {
  const auto& m = ds.matrix;
  for (std::size_t c = 0; c < m.cols(); ++c) out << csv::quote(m.col_names()[c]) << ',';
  out << csv::quote(ds.label_name) << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << csv::format_number(m(r, c)) << ',';
    out << csv::quote(ds.class_names[ds.labels[r]]) << '\n';
  }
}

inline void write_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_csv(ds, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticConfig {
  std::size_t n_instances = 1000;
  std::size_t n_groups = 3;
  std::size_t attrs_per_group = 8;
  std::size_t noise_attrs = 0;
  double imbalance = 0.85;  // majority-class share
  std::uint64_t seed = 0;
  double noise_sd = 0.35;   // per-attribute noise around the group latent
};

namespace detail {

inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Planted-structure dataset. Each group g has a standard-normal latent
// factor z_g per instance; its attributes are loading * z_g + offset + noise
// with positive loadings. Noise attributes are independent normals. The
// label is 1 when z_0 exceeds the `imbalance` quantile, so class 1 has
// expected prevalence 1 - imbalance.
inline LabeledDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (!(cfg.imbalance > 0.0 && cfg.imbalance < 1.0))
    throw ParameterError("imbalance must lie in (0,1)");
  if (cfg.n_groups < 1) throw ParameterError("need at least one group");
  if (cfg.attrs_per_group < 1) throw ParameterError("need at least one attribute per group");
  if (cfg.n_instances < 2) throw ParameterError("need at least two instances");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> loading(0.7, 1.3);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);

  const std::size_t grouped = cfg.n_groups * cfg.attrs_per_group;
  const std::size_t width = grouped + cfg.noise_attrs;
  std::vector<double> loadings(grouped), offsets(grouped);
  for (std::size_t a = 0; a < grouped; ++a) {
    loadings[a] = loading(rng);
    offsets[a] = offset(rng);
  }

  std::vector<std::string> names;
  for (std::size_t g = 0; g < cfg.n_groups; ++g)
    for (std::size_t j = 0; j < cfg.attrs_per_group; ++j)
      names.push_back("g" + std::to_string(g) + "_a" + std::to_string(j));
  for (std::size_t j = 0; j < cfg.noise_attrs; ++j) names.push_back("noise" + std::to_string(j));

  const double threshold = detail::normal_quantile(cfg.imbalance);
  std::vector<double> values;
  values.reserve(cfg.n_instances * width);
  std::vector<ClassId> labels(cfg.n_instances);
  std::vector<double> latent(cfg.n_groups);
  for (std::size_t i = 0; i < cfg.n_instances; ++i) {
    for (auto& z : latent) z = normal(rng);
    for (std::size_t a = 0; a < grouped; ++a) {
      const std::size_t g = a / cfg.attrs_per_group;
      values.push_back(loadings[a] * latent[g] + offsets[a] + cfg.noise_sd * normal(rng));
    }
    for (std::size_t j = 0; j < cfg.noise_attrs; ++j) values.push_back(normal(rng));
    labels[i] = latent[0] > threshold ? 1 : 0;
  }

  LabeledDataset ds{DataMatrix(cfg.n_instances, width, std::move(values), std::move(names)),
                    std::move(labels), {"0", "1"}, "class"};
  if (ds.distinct_classes() < 2)
    throw ParameterError("synthetic draw produced a single class; increase n_instances");
  return ds;
}

}  // namespace cmodel
