#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "clustermodel/data.hpp"
#include "clustermodel/error.hpp"

namespace cmodel {

enum class ClassifierKind {
  knn,
  naive_bayes_kernel,
  decision_tree,
  perceptron,
  mlp,
  linear_svm,
  logistic_regression,
  lda,
};

inline constexpr std::array<ClassifierKind, 8> all_classifier_kinds{
    ClassifierKind::knn,        ClassifierKind::naive_bayes_kernel,
    ClassifierKind::decision_tree, ClassifierKind::perceptron,
    ClassifierKind::mlp,        ClassifierKind::linear_svm,
    ClassifierKind::logistic_regression, ClassifierKind::lda,
};

inline std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::naive_bayes_kernel: return "naive_bayes_kernel";
    case ClassifierKind::decision_tree: return "decision_tree";
    case ClassifierKind::perceptron: return "perceptron";
    case ClassifierKind::mlp: return "mlp";
    case ClassifierKind::linear_svm: return "linear_svm";
    case ClassifierKind::logistic_regression: return "logistic_regression";
    case ClassifierKind::lda: return "lda";
  }
  return "?";
}

inline ClassifierKind parse_classifier_kind(std::string_view name) {
  for (auto k : all_classifier_kinds)
    if (to_string(k) == name) return k;
  throw ParameterError("unknown classifier '" + std::string(name) + "'");
}

// Default hyperparameters per kind. Anything not listed here is rejected.
inline const std::map<std::string, double>& default_hyperparameters(ClassifierKind kind) {
  static const std::map<ClassifierKind, std::map<std::string, double>> table{
      {ClassifierKind::knn, {{"k", 5}}},
      {ClassifierKind::naive_bayes_kernel, {{"bandwidth_scale", 1.0}}},
      // max_depth < 0 means unbounded; 0 is a single majority leaf.
      {ClassifierKind::decision_tree, {{"max_depth", 10}, {"min_leaf", 2}}},
      {ClassifierKind::perceptron, {{"learning_rate", 0.1}, {"epochs", 50}}},
      {ClassifierKind::mlp, {{"hidden", 10}, {"learning_rate", 0.1}, {"epochs", 50}}},
      {ClassifierKind::linear_svm, {{"lambda", 1e-3}, {"learning_rate", 0.01}, {"epochs", 30}}},
      {ClassifierKind::logistic_regression,
       {{"lambda", 1e-4}, {"learning_rate", 0.5}, {"iterations", 300}}},
      {ClassifierKind::lda, {{"epsilon", 1e-6}}},
  };
  return table.at(kind);
}

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::knn;
  std::map<std::string, double> hyperparameters;  // overrides only
  std::uint64_t seed = 0;

  double param(const std::string& name) const {
    if (auto it = hyperparameters.find(name); it != hyperparameters.end()) return it->second;
    return default_hyperparameters(kind).at(name);
  }

  void validate() const {
    const auto& defaults = default_hyperparameters(kind);
    for (const auto& [name, value] : hyperparameters) {
      if (!defaults.contains(name))
        throw ParameterError(std::string(to_string(kind)) + ": unknown hyperparameter '" + name +
                             "'");
      if (!std::isfinite(value))
        throw ParameterError(std::string(to_string(kind)) + ": '" + name + "' is not finite");
    }
    auto positive_int = [&](const char* name) {
      double v = param(name);
      if (v < 1 || v != std::floor(v))
        throw ParameterError(std::string(to_string(kind)) + ": '" + name +
                             "' must be a positive integer");
    };
    auto positive = [&](const char* name) {
      if (!(param(name) > 0))
        throw ParameterError(std::string(to_string(kind)) + ": '" + name + "' must be positive");
    };
    switch (kind) {
      case ClassifierKind::knn: positive_int("k"); break;
      case ClassifierKind::naive_bayes_kernel: positive("bandwidth_scale"); break;
      case ClassifierKind::decision_tree:
        if (param("max_depth") != std::floor(param("max_depth")))
          throw ParameterError("decision_tree: 'max_depth' must be an integer");
        positive_int("min_leaf");
        break;
      case ClassifierKind::perceptron:
        positive("learning_rate");
        positive_int("epochs");
        break;
      case ClassifierKind::mlp:
        positive_int("hidden");
        positive("learning_rate");
        positive_int("epochs");
        break;
      case ClassifierKind::linear_svm:
        positive("lambda");
        positive("learning_rate");
        positive_int("epochs");
        break;
      case ClassifierKind::logistic_regression:
        if (param("lambda") < 0) throw ParameterError("logistic_regression: negative lambda");
        positive("learning_rate");
        positive_int("iterations");
        break;
      case ClassifierKind::lda: positive("epsilon"); break;
    }
  }
};

inline ClassifierSpec make_spec(ClassifierKind kind, std::map<std::string, double> hyper = {},
                                std::uint64_t seed = 0) {
  ClassifierSpec spec{kind, std::move(hyper), seed};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Learned parameter sets

struct KnnParams {
  std::size_t k = 5;
  DataMatrix rows;
  std::vector<ClassId> labels;
};

struct KernelDensityParams {
  // per class, per attribute: sample values and bandwidth
  std::vector<std::vector<std::vector<double>>> samples;
  std::vector<std::vector<double>> bandwidth;
  std::vector<double> log_prior;  // -inf for classes absent from training
};

struct TreeNode {
  std::size_t feature = 0;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  ClassId leaf = 0;
  bool is_leaf() const noexcept { return left < 0; }
};

struct TreeParams {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

// Per-feature affine input map x' = (x - shift) * scale.
struct InputScaler {
  std::vector<double> shift;
  std::vector<double> scale;

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - shift[j]) * scale[j];
    return out;
  }
};

// One-vs-rest or softmax linear scores: weights[c] has n_features + 1
// entries, the bias last.
struct LinearParams {
  InputScaler scaler;
  std::vector<std::vector<double>> weights;
  std::vector<bool> present;
};

struct MlpParams {
  InputScaler scaler;
  std::size_t hidden = 10;
  std::vector<double> w1;  // hidden x (n_features + 1)
  std::vector<double> w2;  // classes x (hidden + 1)
  std::vector<bool> present;
};

struct LdaParams {
  std::vector<std::vector<double>> coef;  // per class: Sigma^-1 mu_c
  std::vector<double> intercept;          // -0.5 mu_c' Sigma^-1 mu_c + log prior
  std::vector<bool> present;
};

struct TrainedModel {
  ClassifierKind kind = ClassifierKind::knn;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  std::variant<KnnParams, KernelDensityParams, TreeParams, LinearParams, MlpParams, LdaParams>
      params;
};

namespace detail {

// Rows sorted lexicographically by (features, label). Learners iterate in
// this order (then shuffle with their own seed) so the fitted model does
// not depend on the order rows arrive in.
inline std::vector<std::size_t> canonical_order(const LabeledDataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto& m = ds.matrix;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    auto ra = m.row(a), rb = m.row(b);
    for (std::size_t j = 0; j < ra.size(); ++j)
      if (ra[j] != rb[j]) return ra[j] < rb[j];
    return ds.labels[a] < ds.labels[b];
  });
  return idx;
}

inline InputScaler standardizer(const DataMatrix& m) {
  InputScaler s;
  s.shift.assign(m.cols(), 0.0);
  s.scale.assign(m.cols(), 1.0);
  const double n = static_cast<double>(m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) mu += m(i, j);
    mu /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) var += (m(i, j) - mu) * (m(i, j) - mu);
    var /= n;
    s.shift[j] = mu;
    s.scale[j] = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

// Maps each training column onto [-1, 1]; constant columns map to 0.
inline InputScaler symmetric_range_scaler(const DataMatrix& m) {
  InputScaler s;
  s.shift.assign(m.cols(), 0.0);
  s.scale.assign(m.cols(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      lo = std::min(lo, m(i, j));
      hi = std::max(hi, m(i, j));
    }
    s.shift[j] = 0.5 * (lo + hi);
    s.scale[j] = hi > lo ? 2.0 / (hi - lo) : 0.0;
  }
  return s;
}

inline std::vector<bool> present_classes(const LabeledDataset& ds) {
  std::vector<bool> p(ds.num_classes(), false);
  for (auto y : ds.labels) p[y] = true;
  return p;
}

inline ClassId majority(std::span<const std::size_t> counts) {
  return static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// Highest score among present classes; ties go to the lowest class id.
inline ClassId argmax_present(std::span<const double> scores, const std::vector<bool>& present) {
  ClassId best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (!present[c]) continue;
    if (!found || scores[c] > best_score) {
      best = c;
      best_score = scores[c];
      found = true;
    }
  }
  return best;
}

inline double dot_bias(std::span<const double> w, std::span<const double> x) {
  double s = w[x.size()];
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
  return s;
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// --- knn ------------------------------------------------------------------

inline KnnParams train_knn(const ClassifierSpec& spec, const LabeledDataset& ds) {
  auto order = canonical_order(ds);
  KnnParams p;
  p.k = static_cast<std::size_t>(spec.param("k"));
  p.rows = ds.matrix.select_rows(order);
  for (auto i : order) p.labels.push_back(ds.labels[i]);
  return p;
}

inline ClassId predict_knn(const KnnParams& p, std::size_t n_classes, std::span<const double> x) {
  const std::size_t n = p.rows.rows();
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = p.rows.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (r[j] - x[j]) * (r[j] - x[j]);
    d[i] = {s, i};
  }
  const std::size_t k = std::min(p.k, n);
  std::partial_sort(d.begin(), d.begin() + static_cast<long>(k), d.end());
  std::vector<std::size_t> votes(n_classes, 0);
  for (std::size_t i = 0; i < k; ++i) ++votes[p.labels[d[i].second]];
  return majority(votes);
}

// --- naive bayes with kernel densities -------------------------------------

inline double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Silverman's rule, 0.9 * min(sd, IQR/1.34) * n^(-1/5), falling back to the
// sd alone when the IQR is zero. Returns 0 when the sample has no spread.
inline double silverman_bandwidth(std::vector<double> v) {
  if (v.size() < 2) return 0.0;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double mu = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - mu) * (x - mu);
  const double sd = std::sqrt(var / (n - 1.0));
  const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

inline KernelDensityParams train_kernel_nb(const ClassifierSpec& spec, const LabeledDataset& ds) {
  auto order = canonical_order(ds);
  const std::size_t c = ds.num_classes(), d = ds.matrix.cols();
  const double scale = spec.param("bandwidth_scale");
  KernelDensityParams p;
  p.samples.assign(c, std::vector<std::vector<double>>(d));
  p.bandwidth.assign(c, std::vector<double>(d, 0.0));
  p.log_prior.assign(c, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> counts(c, 0);
  for (auto i : order) {
    ++counts[ds.labels[i]];
    for (std::size_t j = 0; j < d; ++j) p.samples[ds.labels[i]][j].push_back(ds.matrix(i, j));
  }
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> all;
    for (auto i : order) all.push_back(ds.matrix(i, j));
    double global = silverman_bandwidth(all);
    if (global <= 0.0) global = 1.0;
    for (std::size_t k = 0; k < c; ++k) {
      double h = silverman_bandwidth(p.samples[k][j]);
      p.bandwidth[k][j] = scale * (h > 0.0 ? h : global);
    }
  }
  for (std::size_t k = 0; k < c; ++k)
    if (counts[k] > 0)
      p.log_prior[k] = std::log(static_cast<double>(counts[k]) / static_cast<double>(ds.size()));
  return p;
}

inline ClassId predict_kernel_nb(const KernelDensityParams& p, std::span<const double> x) {
  const std::size_t c = p.log_prior.size();
  std::vector<double> score(c, -std::numeric_limits<double>::infinity());
  std::vector<bool> present(c);
  for (std::size_t k = 0; k < c; ++k) {
    present[k] = std::isfinite(p.log_prior[k]);
    if (!present[k]) continue;
    double s = p.log_prior[k];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto& v = p.samples[k][j];
      const double h = p.bandwidth[k][j];
      // log( 1/(n h sqrt(2 pi)) * sum exp(-z^2/2) ) via log-sum-exp
      double mx = -std::numeric_limits<double>::infinity();
      for (double vi : v) mx = std::max(mx, -0.5 * ((x[j] - vi) / h) * ((x[j] - vi) / h));
      double acc = 0.0;
      for (double vi : v) acc += std::exp(-0.5 * ((x[j] - vi) / h) * ((x[j] - vi) / h) - mx);
      s += mx + std::log(acc) - std::log(static_cast<double>(v.size()) * h) -
           0.5 * std::log(2.0 * 3.14159265358979323846);
    }
    score[k] = s;
  }
  return argmax_present(score, present);
}

// --- decision tree ---------------------------------------------------------

inline double gini(std::span<const std::size_t> counts, std::size_t total) {
  if (total == 0) return 0.0;
  double s = 1.0;
  for (auto n : counts) {
    const double p = static_cast<double>(n) / static_cast<double>(total);
    s -= p * p;
  }
  return s;
}

inline TreeParams train_tree(const ClassifierSpec& spec, const LabeledDataset& ds) {
  const long max_depth = static_cast<long>(spec.param("max_depth"));
  const std::size_t min_leaf = static_cast<std::size_t>(spec.param("min_leaf"));
  const std::size_t c = ds.num_classes(), d = ds.matrix.cols();
  const auto& m = ds.matrix;

  TreeParams tree;
  struct Task {
    int node;
    std::vector<std::size_t> rows;
    long depth;
  };
  tree.nodes.emplace_back();
  std::vector<Task> stack;
  stack.push_back({0, canonical_order(ds), 0});

  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    std::vector<std::size_t> counts(c, 0);
    for (auto i : task.rows) ++counts[ds.labels[i]];
    tree.nodes[task.node].leaf = majority(counts);
    const bool pure = std::count_if(counts.begin(), counts.end(),
                                    [](std::size_t n) { return n > 0; }) <= 1;
    if (pure || (max_depth >= 0 && task.depth >= max_depth) || task.rows.size() < 2 * min_leaf)
      continue;

    const std::size_t n = task.rows.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = task.rows;
    for (std::size_t j = 0; j < d; ++j) {
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](std::size_t a, std::size_t b) { return m(a, j) < m(b, j); });
      std::vector<std::size_t> left(c, 0), right = counts;
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        const ClassId y = ds.labels[sorted[pos]];
        ++left[y];
        --right[y];
        const double a = m(sorted[pos], j), b = m(sorted[pos + 1], j);
        if (a == b) continue;
        const std::size_t nl = pos + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double impurity = (static_cast<double>(nl) * gini(left, nl) +
                                 static_cast<double>(nr) * gini(right, nr)) /
                                static_cast<double>(n);
        if (impurity < best) {
          best = impurity;
          best_feature = j;
          double mid = a + 0.5 * (b - a);
          best_threshold = mid < b ? mid : a;
        }
      }
    }
    if (!std::isfinite(best)) continue;

    std::vector<std::size_t> lrows, rrows;
    for (auto i : task.rows)
      (m(i, best_feature) <= best_threshold ? lrows : rrows).push_back(i);
    const int l = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int r = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& node = tree.nodes[task.node];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    stack.push_back({r, std::move(rrows), task.depth + 1});
    stack.push_back({l, std::move(lrows), task.depth + 1});
  }
  return tree;
}

inline ClassId predict_tree(const TreeParams& t, std::span<const double> x) {
  std::size_t i = 0;
  while (!t.nodes[i].is_leaf())
    i = static_cast<std::size_t>(x[t.nodes[i].feature] <= t.nodes[i].threshold ? t.nodes[i].left
                                                                                : t.nodes[i].right);
  return t.nodes[i].leaf;
}

// --- linear learners -------------------------------------------------------

inline DataMatrix scaled_rows(const InputScaler& s, const DataMatrix& m,
                              std::span<const std::size_t> order) {
  std::vector<double> values;
  values.reserve(order.size() * m.cols());
  for (auto i : order) {
    auto r = s.apply(m.row(i));
    values.insert(values.end(), r.begin(), r.end());
  }
  return DataMatrix(order.size(), m.cols(), std::move(values), m.col_names());
}

inline void shuffle(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
}

inline LinearParams train_perceptron(const ClassifierSpec& spec, const LabeledDataset& ds) {
  auto order = canonical_order(ds);
  LinearParams p;
  p.scaler = standardizer(ds.matrix);
  p.present = present_classes(ds);
  const auto x = scaled_rows(p.scaler, ds.matrix, order);
  const std::size_t n = x.rows(), d = x.cols(), c = ds.num_classes();
  const double lr = spec.param("learning_rate");
  const auto epochs = static_cast<std::size_t>(spec.param("epochs"));
  p.weights.assign(c, std::vector<double>(d + 1, 0.0));
  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> visit(n);
  for (std::size_t cls = 0; cls < c; ++cls) {
    if (!p.present[cls]) continue;
    auto& w = p.weights[cls];
    std::iota(visit.begin(), visit.end(), 0);
    for (std::size_t e = 0; e < epochs; ++e) {
      shuffle(visit, rng);
      std::size_t mistakes = 0;
      for (auto i : visit) {
        const double y = ds.labels[order[i]] == cls ? 1.0 : -1.0;
        auto r = x.row(i);
        if (y * dot_bias(w, r) <= 0.0) {
          for (std::size_t j = 0; j < d; ++j) w[j] += lr * y * r[j];
          w[d] += lr * y;
          ++mistakes;
        }
      }
      if (mistakes == 0) break;
    }
  }
  return p;
}

inline LinearParams train_linear_svm(const ClassifierSpec& spec, const LabeledDataset& ds) {
  auto order = canonical_order(ds);
  LinearParams p;
  p.scaler = standardizer(ds.matrix);
  p.present = present_classes(ds);
  const auto x = scaled_rows(p.scaler, ds.matrix, order);
  const std::size_t n = x.rows(), d = x.cols(), c = ds.num_classes();
  const double lambda = spec.param("lambda");
  const double lr = spec.param("learning_rate");
  const auto epochs = static_cast<std::size_t>(spec.param("epochs"));
  p.weights.assign(c, std::vector<double>(d + 1, 0.0));
  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> visit(n);
  for (std::size_t cls = 0; cls < c; ++cls) {
    if (!p.present[cls]) continue;
    auto& w = p.weights[cls];
    std::iota(visit.begin(), visit.end(), 0);
    for (std::size_t e = 0; e < epochs; ++e) {
      shuffle(visit, rng);
      for (auto i : visit) {
        const double y = ds.labels[order[i]] == cls ? 1.0 : -1.0;
        auto r = x.row(i);
        const bool violated = y * dot_bias(w, r) < 1.0;
        for (std::size_t j = 0; j < d; ++j) {
          w[j] *= 1.0 - lr * lambda;
          if (violated) w[j] += lr * y * r[j];
        }
        if (violated) w[d] += lr * y;
      }
    }
  }
  return p;
}

// Multinomial softmax regression, full-batch gradient descent, L2 on the
// weights (not the bias).
inline LinearParams train_logistic(const ClassifierSpec& spec, const LabeledDataset& ds) {
  auto order = canonical_order(ds);
  LinearParams p;
  p.scaler = standardizer(ds.matrix);
  p.present = present_classes(ds);
  const auto x = scaled_rows(p.scaler, ds.matrix, order);
  const std::size_t n = x.rows(), d = x.cols(), c = ds.num_classes();
  const double lambda = spec.param("lambda");
  const double lr = spec.param("learning_rate");
  const auto iterations = static_cast<std::size_t>(spec.param("iterations"));
  p.weights.assign(c, std::vector<double>(d + 1, 0.0));
  std::vector<std::vector<double>> grad(c, std::vector<double>(d + 1));
  std::vector<double> prob(c);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = x.row(i);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < c; ++k) {
        prob[k] = p.present[k] ? dot_bias(p.weights[k], r) : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, prob[k]);
      }
      double z = 0.0;
      for (auto& v : prob) z += (v = std::exp(v - mx));
      const ClassId y = ds.labels[order[i]];
      for (std::size_t k = 0; k < c; ++k) {
        const double err = prob[k] / z - (k == y ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) grad[k][j] += err * r[j];
        grad[k][d] += err;
      }
    }
    for (std::size_t k = 0; k < c; ++k) {
      if (!p.present[k]) continue;
      for (std::size_t j = 0; j <= d; ++j) {
        double g = grad[k][j] / static_cast<double>(n);
        if (j < d) g += lambda * p.weights[k][j];
        p.weights[k][j] -= lr * g;
      }
    }
  }
  return p;
}

inline ClassId predict_linear(const LinearParams& p, std::span<const double> x) {
  auto z = p.scaler.apply(x);
  std::vector<double> scores(p.weights.size());
  for (std::size_t k = 0; k < scores.size(); ++k) scores[k] = dot_bias(p.weights[k], z);
  return argmax_present(scores, p.present);
}

// --- mlp -------------------------------------------------------------------

// One sigmoid hidden layer, one sigmoid output per class, cross-entropy on
// one-hot targets, per-sample backpropagation.
inline MlpParams train_mlp(const ClassifierSpec& spec, const LabeledDataset& ds) {
  auto order = canonical_order(ds);
  MlpParams p;
  p.scaler = symmetric_range_scaler(ds.matrix);
  p.present = present_classes(ds);
  p.hidden = static_cast<std::size_t>(spec.param("hidden"));
  const auto x = scaled_rows(p.scaler, ds.matrix, order);
  const std::size_t n = x.rows(), d = x.cols(), c = ds.num_classes(), h = p.hidden;
  const double lr = spec.param("learning_rate");
  const auto epochs = static_cast<std::size_t>(spec.param("epochs"));

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> init(-0.5, 0.5);
  p.w1.resize(h * (d + 1));
  p.w2.resize(c * (h + 1));
  for (auto& w : p.w1) w = init(rng);
  for (auto& w : p.w2) w = init(rng);

  std::vector<double> hid(h), out(c), delta_out(c), delta_hid(h);
  std::vector<std::size_t> visit(n);
  std::iota(visit.begin(), visit.end(), 0);
  for (std::size_t e = 0; e < epochs; ++e) {
    shuffle(visit, rng);
    for (auto i : visit) {
      auto r = x.row(i);
      for (std::size_t u = 0; u < h; ++u) hid[u] = sigmoid(dot_bias({&p.w1[u * (d + 1)], d + 1}, r));
      for (std::size_t k = 0; k < c; ++k) out[k] = sigmoid(dot_bias({&p.w2[k * (h + 1)], h + 1}, hid));
      const ClassId y = ds.labels[order[i]];
      for (std::size_t k = 0; k < c; ++k) delta_out[k] = out[k] - (k == y ? 1.0 : 0.0);
      for (std::size_t u = 0; u < h; ++u) {
        double s = 0.0;
        for (std::size_t k = 0; k < c; ++k) s += delta_out[k] * p.w2[k * (h + 1) + u];
        delta_hid[u] = s * hid[u] * (1.0 - hid[u]);
      }
      for (std::size_t k = 0; k < c; ++k) {
        double* w = &p.w2[k * (h + 1)];
        for (std::size_t u = 0; u < h; ++u) w[u] -= lr * delta_out[k] * hid[u];
        w[h] -= lr * delta_out[k];
      }
      for (std::size_t u = 0; u < h; ++u) {
        double* w = &p.w1[u * (d + 1)];
        for (std::size_t j = 0; j < d; ++j) w[j] -= lr * delta_hid[u] * r[j];
        w[d] -= lr * delta_hid[u];
      }
    }
  }
  return p;
}

inline ClassId predict_mlp(const MlpParams& p, std::size_t n_classes, std::span<const double> x) {
  auto z = p.scaler.apply(x);
  const std::size_t d = z.size(), h = p.hidden;
  std::vector<double> hid(h), out(n_classes);
  for (std::size_t u = 0; u < h; ++u) hid[u] = sigmoid(dot_bias({&p.w1[u * (d + 1)], d + 1}, z));
  for (std::size_t k = 0; k < n_classes; ++k)
    out[k] = dot_bias({&p.w2[k * (h + 1)], h + 1}, hid);
  return argmax_present(out, p.present);
}

// --- lda -------------------------------------------------------------------

// In-place Cholesky of an n x n SPD matrix; false if not positive definite.
inline bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double s = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) s -= a[j * n + k] * a[j * n + k];
    if (!(s > 0.0)) return false;
    a[j * n + j] = std::sqrt(s);
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) t -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = t / a[j * n + j];
    }
  }
  return true;
}

inline std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                          std::vector<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l[i * n + k] * b[k];
    b[i] /= l[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= l[k * n + i] * b[k];
    b[i] /= l[i * n + i];
  }
  return b;
}

inline LdaParams train_lda(const ClassifierSpec& spec, const LabeledDataset& ds) {
  auto order = canonical_order(ds);
  const std::size_t c = ds.num_classes(), d = ds.matrix.cols();
  const auto& m = ds.matrix;
  LdaParams p;
  p.present = present_classes(ds);
  std::vector<std::vector<double>> mu(c, std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(c, 0);
  for (auto i : order) {
    ++counts[ds.labels[i]];
    for (std::size_t j = 0; j < d; ++j) mu[ds.labels[i]][j] += m(i, j);
  }
  std::size_t groups = 0;
  for (std::size_t k = 0; k < c; ++k)
    if (counts[k] > 0) {
      ++groups;
      for (auto& v : mu[k]) v /= static_cast<double>(counts[k]);
    }
  std::vector<double> cov(d * d, 0.0);
  std::vector<double> diff(d);
  for (auto i : order) {
    for (std::size_t j = 0; j < d; ++j) diff[j] = m(i, j) - mu[ds.labels[i]][j];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b <= a; ++b) cov[a * d + b] += diff[a] * diff[b];
  }
  const double denom = ds.size() > groups ? static_cast<double>(ds.size() - groups)
                                          : static_cast<double>(ds.size());
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      cov[a * d + b] /= denom;
      cov[b * d + a] = cov[a * d + b];
    }

  // Ridge eps*I; grow it tenfold until the factorization succeeds.
  double eps = spec.param("epsilon");
  std::vector<double> l;
  for (int attempt = 0;; ++attempt) {
    l = cov;
    for (std::size_t j = 0; j < d; ++j) l[j * d + j] += eps;
    if (cholesky(l, d)) break;
    if (attempt > 30) throw TrainingError("lda: covariance is not positive definite");
    eps *= 10.0;
  }

  p.coef.assign(c, std::vector<double>(d, 0.0));
  p.intercept.assign(c, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < c; ++k) {
    if (counts[k] == 0) continue;
    p.coef[k] = cholesky_solve(l, d, mu[k]);
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) q += mu[k][j] * p.coef[k][j];
    p.intercept[k] = -0.5 * q +
                     std::log(static_cast<double>(counts[k]) / static_cast<double>(ds.size()));
  }
  return p;
}

inline ClassId predict_lda(const LdaParams& p, std::span<const double> x) {
  std::vector<double> scores(p.coef.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    double s = p.intercept[k];
    for (std::size_t j = 0; j < x.size(); ++j) s += p.coef[k][j] * x[j];
    scores[k] = s;
  }
  return argmax_present(scores, p.present);
}

}  // namespace detail

// Fits one classifier. Deterministic in (spec, set of training rows): row
// order does not matter because every learner first sorts rows canonically.
inline TrainedModel train(const ClassifierSpec& spec, const LabeledDataset& train_set) {
  spec.validate();
  if (train_set.size() == 0) throw TrainingError("training set is empty");
  if (train_set.labels.size() != train_set.matrix.rows())
    throw ShapeError("training set: label count != row count");
  for (auto y : train_set.labels)
    if (y >= train_set.num_classes()) throw ShapeError("training set: label id out of range");
  if (train_set.distinct_classes() < 2)
    throw TrainingError("training set contains a single class");

  TrainedModel model;
  model.kind = spec.kind;
  model.n_classes = train_set.num_classes();
  model.n_features = train_set.matrix.cols();
  switch (spec.kind) {
    case ClassifierKind::knn: model.params = detail::train_knn(spec, train_set); break;
    case ClassifierKind::naive_bayes_kernel:
      model.params = detail::train_kernel_nb(spec, train_set);
      break;
    case ClassifierKind::decision_tree: model.params = detail::train_tree(spec, train_set); break;
    case ClassifierKind::perceptron: model.params = detail::train_perceptron(spec, train_set); break;
    case ClassifierKind::mlp: model.params = detail::train_mlp(spec, train_set); break;
    case ClassifierKind::linear_svm: model.params = detail::train_linear_svm(spec, train_set); break;
    case ClassifierKind::logistic_regression:
      model.params = detail::train_logistic(spec, train_set);
      break;
    case ClassifierKind::lda: model.params = detail::train_lda(spec, train_set); break;
  }
  return model;
}

inline ClassId predict(const TrainedModel& model, std::span<const double> row) {
  if (row.size() != model.n_features)
    throw ShapeError("predict: got " + std::to_string(row.size()) + " features, model expects " +
                     std::to_string(model.n_features));
  return std::visit(
      [&](const auto& p) -> ClassId {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, KnnParams>)
          return detail::predict_knn(p, model.n_classes, row);
        else if constexpr (std::is_same_v<P, KernelDensityParams>)
          return detail::predict_kernel_nb(p, row);
        else if constexpr (std::is_same_v<P, TreeParams>)
          return detail::predict_tree(p, row);
        else if constexpr (std::is_same_v<P, LinearParams>)
          return detail::predict_linear(p, row);
        else if constexpr (std::is_same_v<P, MlpParams>)
          return detail::predict_mlp(p, model.n_classes, row);
        else
          return detail::predict_lda(p, row);
      },
      model.params);
}

inline std::vector<ClassId> predict(const TrainedModel& model, const DataMatrix& rows) {
  std::vector<ClassId> out;
  out.reserve(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out.push_back(predict(model, rows.row(i)));
  return out;
}

}  // namespace cmodel
