#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "clustermodel/clustering.hpp"
#include "clustermodel/data.hpp"

namespace cmodel {
namespace {

TEST(Jaccard, Identity) {
  std::vector<double> x{0.2, 0, 3.5};
  EXPECT_DOUBLE_EQ(jaccard_similarity(x, x), 1.0);
}

TEST(Jaccard, HandEvaluatedMinMaxSums) {
  std::vector<double> x{1, 0, 1}, y{1, 1, 0};
  // min-sum 1, max-sum 3
  EXPECT_DOUBLE_EQ(jaccard_similarity(x, y), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(jaccard_distance(x, y), 2.0 / 3.0);
}

TEST(Jaccard, AllZeroVectorsAreIdentical) {
  std::vector<double> z{0, 0};
  EXPECT_DOUBLE_EQ(jaccard_similarity(z, z), 1.0);
}

TEST(Jaccard, Errors) {
  std::vector<double> a{1, -0.1}, b{1, 1}, c{1};
  EXPECT_THROW(jaccard_similarity(a, b), DomainError);
  EXPECT_THROW(jaccard_similarity(b, c), ShapeError);
}

TEST(Jaccard, SymmetricAndOneOnlyWhenEqual) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x(5), y(5);
    for (auto& v : x) v = u(rng) < 0.3 ? 0.0 : u(rng);
    for (auto& v : y) v = u(rng) < 0.3 ? 0.0 : u(rng);
    const double s = jaccard_similarity(x, y);
    EXPECT_DOUBLE_EQ(s, jaccard_similarity(y, x));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_EQ(s == 1.0, x == y);
  }
}

// Exhaustive over every binary triple up to length 6.
TEST(Jaccard, DistanceTriangleInequalityOnBinaryVectors) {
  for (int len = 1; len <= 6; ++len) {
    const int count = 1 << len;
    auto vec = [len](int bits) {
      std::vector<double> v(len);
      for (int i = 0; i < len; ++i) v[i] = (bits >> i) & 1;
      return v;
    };
    for (int a = 0; a < count; ++a)
      for (int b = 0; b < count; ++b)
        for (int c = 0; c < count; ++c) {
          auto x = vec(a), y = vec(b), z = vec(c);
          ASSERT_LE(jaccard_distance(x, z), jaccard_distance(x, y) + jaccard_distance(y, z) + 1e-15)
              << len << ":" << a << "," << b << "," << c;
        }
  }
}

DataMatrix random_points(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(n * d);
  for (auto& x : v) x = u(rng) < 0.3 ? 0.0 : u(rng);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("c" + std::to_string(j));
  return DataMatrix(n, d, v, names);
}

TEST(KMeans, KEqualsPointCount) {
  std::mt19937_64 rng(2);
  auto pts = random_points(rng, 6, 4);
  auto a = kmeans(pts, 6, 0);
  EXPECT_EQ(std::set<std::size_t>(a.assignment.begin(), a.assignment.end()).size(), 6u);
  EXPECT_DOUBLE_EQ(a.objective, 0.0);
}

TEST(KMeans, SingleClusterCentroidIsMean) {
  auto pts = DataMatrix::from_rows({{1, 0, 2}, {0, 1, 2}, {1, 1, 2}, {0.5, 0.5, 2}});
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto a = kmeans(pts, 1, seed);
    ASSERT_EQ(a.centroids.size(), 1u);
    EXPECT_NEAR(a.centroids[0][0], 0.625, 1e-15);
    EXPECT_NEAR(a.centroids[0][1], 0.625, 1e-15);
    EXPECT_NEAR(a.centroids[0][2], 2.0, 1e-15);
  }
}

TEST(KMeans, ParameterErrors) {
  auto pts = DataMatrix::from_rows({{1, 0}, {0, 1}});
  EXPECT_THROW(kmeans(pts, 0, 0), ParameterError);
  EXPECT_THROW(kmeans(pts, 3, 0), ParameterError);
  KMeansOptions none;
  none.restarts = 0;
  EXPECT_THROW(kmeans(pts, 1, 0, none), ParameterError);
  auto neg = DataMatrix::from_rows({{1, -1}, {0, 1}});
  EXPECT_THROW(kmeans(neg, 1, 0), DomainError);
}

TEST(KMeans, ObjectiveNonIncreasingAndBounded) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 5 + rng() % 40, d = 2 + rng() % 20;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(6, n);
    auto pts = random_points(rng, n, d);
    KMeansOptions opts;
    opts.max_iter = 25;
    auto a = kmeans(pts, k, seed, opts);
    EXPECT_LE(a.iterations, opts.max_iter);
    for (std::size_t i = 1; i < a.objective_history.size(); ++i)
      ASSERT_LE(a.objective_history[i], a.objective_history[i - 1]) << "seed " << seed;
    // every cluster non-empty, objective matches distances
    auto sizes = a.cluster_sizes();
    for (auto s : sizes) EXPECT_GT(s, 0u);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LT(a.assignment[i], k);
      EXPECT_NEAR(a.distances[i], jaccard_distance(pts.row(i), a.centroids[a.assignment[i]]),
                  1e-15);
      total += a.distances[i];
    }
    EXPECT_NEAR(total, a.objective, 1e-12);
  }
}

TEST(KMeans, DeterministicPerSeed) {
  std::mt19937_64 rng(4);
  auto pts = random_points(rng, 30, 8);
  auto a = kmeans(pts, 3, 17), b = kmeans(pts, 3, 17);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.objective_history, b.objective_history);
}

// Oracle: sum of Jaccard distances to the component-wise mean, minimised by
// enumerating every split of the points into two non-empty groups.
struct BruteForce {
  double objective;
  std::vector<std::size_t> assignment;
};

BruteForce brute_force_two_partition(const DataMatrix& pts) {
  const std::size_t n = pts.rows(), d = pts.cols();
  BruteForce best{std::numeric_limits<double>::infinity(), {}};
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    if (mask & 1u) continue;  // fix point 0 in group 0 to skip mirror images
    std::vector<std::size_t> assign(n);
    for (std::size_t i = 0; i < n; ++i) assign[i] = (mask >> i) & 1u;
    double obj = 0;
    for (std::size_t g = 0; g < 2; ++g) {
      std::vector<double> mean(d, 0.0);
      double count = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == g) {
          for (std::size_t j = 0; j < d; ++j) mean[j] += pts(i, j);
          ++count;
        }
      for (auto& m : mean) m /= count;
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == g) obj += jaccard_distance(pts.row(i), mean);
    }
    if (obj < best.objective) best = {obj, assign};
  }
  return best;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

// Binary indicator rows: group A has support in the first half of the
// coordinates, group B in the second half.
DataMatrix separated_indicators(std::mt19937_64& rng, std::size_t n_a, std::size_t n_b,
                                std::size_t half, std::vector<std::size_t>& planted) {
  std::vector<std::vector<double>> rows;
  planted.clear();
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t i = 0; i < (g == 0 ? n_a : n_b); ++i) {
      std::vector<double> row(2 * half, 0.0);
      for (std::size_t j = 0; j < half; ++j) row[g * half + j] = (rng() % 4 != 0) ? 1.0 : 0.0;
      row[g * half + rng() % half] = 1.0;
      rows.push_back(row);
      planted.push_back(g);
    }
  }
  return DataMatrix::from_rows(rows);
}

TEST(KMeans, RecoversBruteForceOptimalBipartition) {
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    std::mt19937_64 rng(100 + inst);
    const std::size_t n_a = 2 + rng() % 4, n_b = 2 + rng() % 4;  // <= 10 points
    std::vector<std::size_t> planted;
    auto pts = separated_indicators(rng, n_a, n_b, 4, planted);
    const auto oracle = brute_force_two_partition(pts);
    ASSERT_TRUE(same_partition(oracle.assignment, planted)) << "instance " << inst;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto a = kmeans(pts, 2, seed);
      EXPECT_TRUE(same_partition(a.assignment, planted)) << "instance " << inst << " seed " << seed;
      EXPECT_NEAR(a.objective, oracle.objective, 1e-12);
    }
  }
}

TEST(KMeans, EmptyClusterRepairKeepsEveryClusterPopulated) {
  // Duplicate points make empty clusters likely after initialisation.
  auto pts = DataMatrix::from_rows({{1, 0}, {1, 0}, {1, 0}, {0, 1}, {0, 1}, {0.5, 0.5}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = kmeans(pts, 4, seed);
    for (auto s : a.cluster_sizes()) EXPECT_GT(s, 0u);
  }
}

TEST(SplitByCluster, TwoByTwo) {
  LabeledDataset ds{DataMatrix::from_rows({{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}},
                                          {"a", "b", "c", "d"}),
                    {0, 1, 0},
                    {"n", "y"}};
  ClusterAssignment asg;
  asg.k = 2;
  asg.assignment = {0, 1, 0, 1};
  asg.label_cluster = 1;
  auto p = split_by_cluster(ds, asg);
  ASSERT_EQ(p.clusters.size(), 2u);
  EXPECT_EQ(p.clusters[0].matrix.col_names(), (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(p.clusters[1].matrix.col_names(), (std::vector<std::string>{"b", "d"}));
  for (const auto& c : p.clusters) {
    EXPECT_EQ(c.matrix.rows(), 3u);
    EXPECT_EQ(c.labels, ds.labels);
  }
  EXPECT_EQ(p.clusters[1].matrix.column(1), (std::vector<double>{4, 8, 12}));
  EXPECT_EQ(p.label_cluster, 1u);
}

TEST(SplitByCluster, PartitionProperty) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t cols = 1 + rng() % 12, k = 1 + rng() % 4;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c));
    LabeledDataset ds{DataMatrix(3, cols, std::vector<double>(3 * cols, 1.0), names),
                      {0, 1, 1},
                      {"a", "b"}};
    ClusterAssignment asg;
    asg.k = k;
    for (std::size_t c = 0; c < cols; ++c) asg.assignment.push_back(rng() % k);
    auto p = split_by_cluster(ds, asg);
    std::multiset<std::string> seen;
    for (const auto& c : p.clusters)
      for (const auto& n : c.matrix.col_names()) seen.insert(n);
    EXPECT_EQ(seen, std::multiset<std::string>(names.begin(), names.end()));
  }
}

TEST(SplitByCluster, SingleClusterIsInput) {
  LabeledDataset ds{DataMatrix::from_rows({{1, 2}, {3, 4}}, {"a", "b"}), {0, 1}, {"n", "y"}};
  ClusterAssignment asg;
  asg.k = 1;
  asg.assignment = {0, 0};
  auto p = split_by_cluster(ds, asg);
  ASSERT_EQ(p.clusters.size(), 1u);
  EXPECT_EQ(p.clusters[0], ds);
}

TEST(SplitByCluster, Mismatch) {
  LabeledDataset ds{DataMatrix::from_rows({{1, 2}, {3, 4}}, {"a", "b"}), {0, 1}, {"n", "y"}};
  ClusterAssignment asg;
  asg.k = 1;
  asg.assignment = {0, 0, 0};
  EXPECT_THROW(split_by_cluster(ds, asg), ShapeError);
  asg.assignment = {0, 0};
  asg.point_names = {"a", "z"};
  EXPECT_THROW(split_by_cluster(ds, asg), ShapeError);
}

TEST(DetachPoint, RecordsLabelCluster) {
  auto pts = DataMatrix::from_rows({{1, 0}, {1, 0.1}, {0, 1}, {0.1, 1}});
  auto a = kmeans(pts, 2, 0);
  auto d = detach_point(a, 3);
  EXPECT_EQ(d.assignment.size(), 3u);
  EXPECT_EQ(d.label_cluster, a.assignment[3]);
  EXPECT_NEAR(d.objective, a.objective - a.distances[3], 1e-15);
}

TEST(AdjustedRand, KnownValues) {
  std::vector<std::size_t> a{0, 0, 1, 1}, b{1, 1, 0, 0}, c{0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), 1.0);
  EXPECT_LT(adjusted_rand_index(a, c), 0.0);
  // sklearn: adjusted_rand_score([0,0,0,1,1,1],[0,0,1,1,2,2]) = 0.24242424...
  std::vector<std::size_t> x{0, 0, 0, 1, 1, 1}, y{0, 0, 1, 1, 2, 2};
  EXPECT_NEAR(adjusted_rand_index(x, y), 0.24242424242424243, 1e-12);
}

TEST(KMeans, PlantedAttributeGroupsRecovered) {
  int good = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    SyntheticConfig cfg;
    cfg.n_instances = 400;
    cfg.n_groups = 3;
    cfg.attrs_per_group = 5;
    cfg.noise_attrs = 0;
    cfg.imbalance = 0.8;
    cfg.seed = static_cast<std::uint64_t>(seed);
    auto ds = generate_synthetic(cfg);
    auto rd1 = transpose(min_max_scale(ds.matrix));
    auto a = kmeans(rd1, 3, static_cast<std::uint64_t>(seed));
    std::vector<std::size_t> truth;
    for (std::size_t c = 0; c < rd1.rows(); ++c) truth.push_back(c / cfg.attrs_per_group);
    if (adjusted_rand_index(a.assignment, truth) >= 0.9) ++good;
  }
  EXPECT_GE(good, 9);
}

}  // namespace
}  // namespace cmodel
