#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "clustermodel/classifiers.hpp"
#include "clustermodel/evaluation.hpp"

namespace cmodel {
namespace {

LabeledDataset two_blobs(std::uint64_t seed, std::size_t per_class, double gap) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> rows;
  std::vector<ClassId> labels;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      rows.push_back({g(rng) + (c ? gap : -gap), g(rng), g(rng)});
      labels.push_back(c);
    }
  return {DataMatrix::from_rows(rows, {"x", "y", "z"}), labels, {"a", "b"}};
}

LabeledDataset permuted(const LabeledDataset& ds, std::uint64_t seed) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return ds.select_rows(idx);
}

DataMatrix probe_grid() {
  std::vector<std::vector<double>> rows;
  for (double x = -3; x <= 3; x += 0.75)
    for (double y = -2; y <= 2; y += 1.0) rows.push_back({x, y, 0.5 * x - y});
  return DataMatrix::from_rows(rows, {"x", "y", "z"});
}

TEST(ClassifierKind, NamesRoundTrip) {
  for (auto k : all_classifier_kinds) EXPECT_EQ(parse_classifier_kind(to_string(k)), k);
  EXPECT_THROW(parse_classifier_kind("random_forest"), ParameterError);
}

TEST(ClassifierSpec, Validation) {
  EXPECT_THROW(make_spec(ClassifierKind::knn, {{"k", 0}}), ParameterError);
  EXPECT_THROW(make_spec(ClassifierKind::knn, {{"k", 2.5}}), ParameterError);
  EXPECT_THROW(make_spec(ClassifierKind::knn, {{"neighbours", 3}}), ParameterError);
  EXPECT_THROW(make_spec(ClassifierKind::lda, {{"epsilon", -1}}), ParameterError);
  EXPECT_THROW(make_spec(ClassifierKind::mlp, {{"hidden", 0}}), ParameterError);
  EXPECT_EQ(make_spec(ClassifierKind::knn).param("k"), 5.0);
  EXPECT_EQ(make_spec(ClassifierKind::knn, {{"k", 3}}).param("k"), 3.0);
}

TEST(Train, Errors) {
  LabeledDataset one{DataMatrix::from_rows({{1.0}, {2.0}}), {0, 0}, {"a", "b"}};
  LabeledDataset empty{DataMatrix(0, 1, {}, {"x"}), {}, {"a", "b"}};
  for (auto k : all_classifier_kinds) {
    EXPECT_THROW(train(make_spec(k), one), TrainingError) << to_string(k);
    EXPECT_THROW(train(make_spec(k), empty), TrainingError) << to_string(k);
  }
  auto ds = two_blobs(1, 10, 2.0);
  auto m = train(make_spec(ClassifierKind::knn), ds);
  std::vector<double> short_row{1.0, 2.0};
  EXPECT_THROW(predict(m, short_row), ShapeError);
}

TEST(Knn, OneNeighbourReturnsOwnLabel) {
  auto ds = two_blobs(2, 30, 0.3);  // overlapping classes, distinct points
  auto m = train(make_spec(ClassifierKind::knn, {{"k", 1}}), ds);
  EXPECT_EQ(predict(m, ds.matrix), ds.labels);
}

// Oracle: a separating line exists if some direction puts every class-0
// projection strictly below every class-1 projection.
bool separable_by_line(const std::vector<std::array<double, 2>>& pts, const std::vector<ClassId>& y) {
  for (int step = 0; step < 7200; ++step) {
    const double th = M_PI * step / 3600.0;
    double max0 = -1e300, min1 = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double p = std::cos(th) * pts[i][0] + std::sin(th) * pts[i][1];
      if (y[i] == 0) max0 = std::max(max0, p);
      else min1 = std::min(min1, p);
    }
    if (max0 < min1) return true;
  }
  return false;
}

TEST(Perceptron, SeparableSetFitsExactly) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<std::array<double, 2>> pts;
    std::vector<std::vector<double>> rows;
    std::vector<ClassId> y;
    while (pts.size() < 20) {
      const double a = u(rng), b = u(rng);
      const double s = 1.3 * a - b + 0.4;
      if (std::abs(s) < 0.25) continue;
      pts.push_back({a, b});
      rows.push_back({a, b});
      y.push_back(s > 0 ? 1 : 0);
    }
    if (std::count(y.begin(), y.end(), 0u) == 0 || std::count(y.begin(), y.end(), 1u) == 0) continue;
    ASSERT_TRUE(separable_by_line(pts, y));
    LabeledDataset ds{DataMatrix::from_rows(rows, {"a", "b"}), y, {"n", "p"}};
    auto m = train(make_spec(ClassifierKind::perceptron, {{"epochs", 200}}, seed), ds);
    EXPECT_EQ(predict(m, ds.matrix), y) << "seed " << seed;
  }
}

TEST(Lda, ClassifiesSymmetricMeans) {
  std::vector<std::vector<double>> rows;
  std::vector<ClassId> y;
  const double offsets[4][2] = {{0.5, 0.5}, {-0.5, 0.5}, {0.5, -0.5}, {-0.5, -0.5}};
  for (int c = 0; c < 2; ++c)
    for (const auto& o : offsets) {
      rows.push_back({(c ? 1.0 : -1.0) + o[0], o[1]});
      y.push_back(static_cast<ClassId>(c));
    }
  LabeledDataset ds{DataMatrix::from_rows(rows, {"a", "b"}), y, {"l", "r"}};
  auto m = train(make_spec(ClassifierKind::lda), ds);
  std::vector<double> left{-1, 0}, right{1, 0}, near_left{-0.1, 3};
  EXPECT_EQ(predict(m, left), 0u);
  EXPECT_EQ(predict(m, right), 1u);
  // Equal priors and shared covariance put the boundary at x = 0.
  EXPECT_EQ(predict(m, near_left), 0u);
}

TEST(NaiveBayesKernel, OnePointPerClass) {
  LabeledDataset ds{DataMatrix::from_rows({{0.0, 0.0}, {4.0, 1.0}}, {"a", "b"}), {0, 1}, {"p", "q"}};
  auto m = train(make_spec(ClassifierKind::naive_bayes_kernel), ds);
  std::vector<double> q0{0.4, 0.1}, q1{3.7, 0.8};
  EXPECT_EQ(predict(m, q0), 0u);
  EXPECT_EQ(predict(m, q1), 1u);
}

TEST(DecisionTree, DepthZeroPredictsMajority) {
  auto ds = two_blobs(3, 10, 3.0);
  ds.labels[0] = 1;  // 11 of class 1
  auto m = train(make_spec(ClassifierKind::decision_tree, {{"max_depth", 0}}), ds);
  for (auto p : predict(m, probe_grid())) EXPECT_EQ(p, 1u);
}

TEST(DecisionTree, UnboundedFitsDistinctRows) {
  auto ds = two_blobs(4, 60, 0.2);
  auto m = train(make_spec(ClassifierKind::decision_tree, {{"max_depth", -1}, {"min_leaf", 1}}), ds);
  EXPECT_EQ(predict(m, ds.matrix), ds.labels);
}

TEST(AllLearners, DeterministicAndPure) {
  auto ds = two_blobs(5, 40, 0.8);
  auto probe = probe_grid();
  for (auto k : all_classifier_kinds) {
    auto spec = make_spec(k, {}, 11);
    auto a = train(spec, ds), b = train(spec, ds);
    auto pa = predict(a, probe);
    EXPECT_EQ(pa, predict(b, probe)) << to_string(k);
    EXPECT_EQ(pa, predict(a, probe)) << to_string(k);
    for (auto p : pa) EXPECT_LT(p, ds.num_classes());
  }
}

TEST(AllLearners, RowOrderDoesNotMatter) {
  auto ds = two_blobs(6, 40, 0.8);
  auto probe = probe_grid();
  for (auto k : all_classifier_kinds) {
    auto spec = make_spec(k, {}, 3);
    const auto base = predict(train(spec, ds), probe);
    for (std::uint64_t s = 0; s < 3; ++s)
      EXPECT_EQ(predict(train(spec, permuted(ds, s)), probe), base) << to_string(k);
  }
}

TEST(AllLearners, AbsentClassNeverPredicted) {
  auto ds = two_blobs(7, 20, 1.5);
  ds.class_names.push_back("never");
  for (auto k : all_classifier_kinds) {
    auto m = train(make_spec(k), ds);
    EXPECT_EQ(m.n_classes, 3u);
    for (auto p : predict(m, probe_grid())) EXPECT_LT(p, 2u) << to_string(k);
  }
}

TEST(AllLearners, BeatMajorityBaselineOnPlantedData) {
  SyntheticConfig cfg;
  cfg.n_instances = 1000;
  cfg.seed = 21;
  auto ds = generate_synthetic(cfg);
  const auto counts = ds.class_counts();
  ConfusionMatrix majority(2);
  const ClassId maj = counts[0] >= counts[1] ? 0 : 1;
  for (auto y : ds.labels) majority.add(y, maj);
  const double baseline = f1_from_confusion(majority);
  for (auto k : all_classifier_kinds) {
    auto cm = cross_validate(ds, make_spec(k, {}, 1), 10, 1);
    EXPECT_GE(f1_from_confusion(cm), baseline + 10.0) << to_string(k);
  }
}

}  // namespace
}  // namespace cmodel
