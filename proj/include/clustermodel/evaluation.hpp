#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clustermodel/classifiers.hpp"
#include "clustermodel/data.hpp"
#include "clustermodel/error.hpp"

namespace cmodel {

// counts[actual][predicted]
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t classes) : c_(classes), counts_(classes * classes, 0) {}

  static ConfusionMatrix from_rows(const std::vector<std::vector<std::size_t>>& rows) {
    ConfusionMatrix cm(rows.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (rows[a].size() != rows.size()) throw ShapeError("confusion matrix must be square");
      for (std::size_t p = 0; p < rows.size(); ++p) cm.at(a, p) = rows[a][p];
    }
    return cm;
  }

  std::size_t classes() const noexcept { return c_; }
  std::size_t& at(std::size_t actual, std::size_t predicted) {
    return counts_[actual * c_ + predicted];
  }
  std::size_t at(std::size_t actual, std::size_t predicted) const {
    return counts_[actual * c_ + predicted];
  }

  void add(ClassId actual, ClassId predicted) {
    if (actual >= c_ || predicted >= c_) throw ShapeError("confusion matrix: class id out of range");
    ++at(actual, predicted);
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    if (o.c_ != c_) throw ShapeError("confusion matrix: class count mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    return *this;
  }

  std::size_t total() const {
    std::size_t s = 0;
    for (auto v : counts_) s += v;
    return s;
  }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < c_; ++i) s += at(i, i);
    return s;
  }
  std::size_t row_sum(std::size_t actual) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < c_; ++p) s += at(actual, p);
    return s;
  }
  std::size_t col_sum(std::size_t predicted) const {
    std::size_t s = 0;
    for (std::size_t a = 0; a < c_; ++a) s += at(a, predicted);
    return s;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t c_ = 0;
  std::vector<std::size_t> counts_;
};

enum class F1Mode { macro, weighted };

inline std::string_view to_string(F1Mode m) { return m == F1Mode::macro ? "macro" : "weighted"; }

inline F1Mode parse_f1_mode(std::string_view s) {
  if (s == "macro") return F1Mode::macro;
  if (s == "weighted") return F1Mode::weighted;
  throw ParameterError("unknown F1 mode '" + std::string(s) + "'");
}

struct MetricsRecord {
  double accuracy = 0.0;
  std::vector<double> precision, recall, f1;  // per class, fractions
  std::vector<std::size_t> support;
  F1Mode f1_mode = F1Mode::weighted;
  double f1_avg = 0.0;  // percent
  double kappa = 0.0;
  ConfusionMatrix confusion;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

namespace detail {

inline void require_mass(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw NumericalError("confusion matrix is empty");
}

inline double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

inline double accuracy(const ConfusionMatrix& cm) {
  detail::require_mass(cm);
  return detail::ratio(cm.trace(), cm.total());
}

inline double precision(const ConfusionMatrix& cm, std::size_t cls) {
  return detail::ratio(cm.at(cls, cls), cm.col_sum(cls));
}

inline double recall(const ConfusionMatrix& cm, std::size_t cls) {
  return detail::ratio(cm.at(cls, cls), cm.row_sum(cls));
}

// 2 * recall * precision / (recall + precision); 0 when both are 0.
inline double f1_score(const ConfusionMatrix& cm, std::size_t cls) {
  const double p = precision(cm, cls), r = recall(cm, cls);
  return p + r == 0.0 ? 0.0 : 2.0 * (r * p) / (r + p);
}

// Class-averaged F1 as a percentage. Weighted mode weights each class by
// its actual support; macro mode averages all classes equally.
inline double f1_from_confusion(const ConfusionMatrix& cm, F1Mode mode = F1Mode::weighted) {
  detail::require_mass(cm);
  double s = 0.0;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    const double w = mode == F1Mode::weighted ? detail::ratio(cm.row_sum(k), cm.total())
                                              : 1.0 / static_cast<double>(cm.classes());
    s += w * f1_score(cm, k);
  }
  return 100.0 * s;
}

// Cohen's kappa, (P(A) - P(E)) / (1 - P(E)) with P(A) = trace / total and
// P(E) = sum_i row_i * col_i / total^2.
inline double kappa_from_confusion(const ConfusionMatrix& cm) {
  detail::require_mass(cm);
  const double n = static_cast<double>(cm.total());
  const double pa = static_cast<double>(cm.trace()) / n;
  double pe = 0.0;
  for (std::size_t k = 0; k < cm.classes(); ++k)
    pe += static_cast<double>(cm.row_sum(k)) * static_cast<double>(cm.col_sum(k));
  pe /= n * n;
  if (pe == 1.0) throw NumericalError("kappa undefined: chance agreement is 1");
  return (pa - pe) / (1.0 - pe);
}

inline MetricsRecord compute_metrics(const ConfusionMatrix& cm, F1Mode mode = F1Mode::weighted) {
  MetricsRecord m;
  m.accuracy = accuracy(cm);
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    m.precision.push_back(precision(cm, k));
    m.recall.push_back(recall(cm, k));
    m.f1.push_back(f1_score(cm, k));
    m.support.push_back(cm.row_sum(k));
  }
  m.f1_mode = mode;
  m.f1_avg = f1_from_confusion(cm, mode);
  m.kappa = kappa_from_confusion(cm);
  m.confusion = cm;
  return m;
}

using Folds = std::vector<std::vector<std::size_t>>;

// Stratified fold assignment: each class's indices are shuffled with the
// seed and dealt round-robin over the folds, the dealing position carrying
// over from one class to the next so fold sizes stay within one of each
// other too. Indices inside each fold are ascending.
inline Folds stratified_folds(const LabeledDataset& ds, std::size_t f, std::uint64_t seed) {
  if (f < 2) throw ParameterError("stratified_folds: need at least 2 folds");
  if (f > ds.size())
    throw ParameterError("stratified_folds: " + std::to_string(f) + " folds for " +
                         std::to_string(ds.size()) + " rows");
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  Folds folds(f);
  std::size_t next = 0;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(members[i - 1], members[pick(rng)]);
    }
    for (auto idx : members) {
      folds[next].push_back(idx);
      next = (next + 1) % f;
    }
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

// A fold-local preprocessing step: fitted on the training rows of a fold,
// it returns the transform to apply to both training and held-out rows.
using FittedTransform = std::function<DataMatrix(const DataMatrix&)>;
using FoldPreprocessor = std::function<FittedTransform(const LabeledDataset& train)>;

// Pooled confusion matrix over precomputed folds.
inline ConfusionMatrix cross_validate(const LabeledDataset& ds, const ClassifierSpec& spec,
                                      const Folds& folds, const FoldPreprocessor& preproc = {}) {
  ConfusionMatrix pooled(ds.num_classes());
  std::vector<char> is_test(ds.size());
  for (std::size_t k = 0; k < folds.size(); ++k) {
    std::fill(is_test.begin(), is_test.end(), 0);
    for (auto i : folds[k]) is_test[i] = 1;
    std::vector<std::size_t> train_idx;
    train_idx.reserve(ds.size() - folds[k].size());
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (!is_test[i]) train_idx.push_back(i);

    LabeledDataset train_set = ds.select_rows(train_idx);
    LabeledDataset test_set = ds.select_rows(folds[k]);
    try {
      if (preproc) {
        auto transform = preproc(train_set);
        train_set.matrix = transform(train_set.matrix);
        test_set.matrix = transform(test_set.matrix);
      }
      const auto model = train(spec, train_set);
      for (std::size_t i = 0; i < test_set.size(); ++i)
        pooled.add(test_set.labels[i], predict(model, test_set.matrix.row(i)));
    } catch (const TrainingError& e) {
      throw TrainingError("fold " + std::to_string(k) + ": " + e.what());
    }
  }
  return pooled;
}

inline ConfusionMatrix cross_validate(const LabeledDataset& ds, const ClassifierSpec& spec,
                                      std::size_t f, std::uint64_t seed,
                                      const FoldPreprocessor& preproc = {}) {
  return cross_validate(ds, spec, stratified_folds(ds, f, seed), preproc);
}

}  // namespace cmodel
