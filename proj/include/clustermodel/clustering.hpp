#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clustermodel/data.hpp"
#include "clustermodel/error.hpp"

namespace cmodel {

namespace detail {

// Generalized Jaccard on inputs already known to be valid.
inline double jaccard_unchecked(std::span<const double> x, std::span<const double> y) {
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lo += std::min(x[i], y[i]);
    hi += std::max(x[i], y[i]);
  }
  return hi == 0.0 ? 1.0 : lo / hi;
}

inline double jaccard_distance_unchecked(std::span<const double> x, std::span<const double> y) {
  return 1.0 - jaccard_unchecked(x, y);
}

}  // namespace detail

/// Generalized (weighted) Jaccard similarity: sum of component minima over
/// sum of component maxima. Two all-zero vectors are identical and score 1.
/// On 0/1 vectors this is ordinary set Jaccard.
inline double jaccard_similarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("jaccard_similarity: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= 0.0) || !(y[i] >= 0.0))
      throw DomainError("jaccard_similarity: components must be non-negative");
  return detail::jaccard_unchecked(x, y);
}

inline double jaccard_distance(std::span<const double> x, std::span<const double> y) {
  return 1.0 - jaccard_similarity(x, y);
}

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;          // cluster id per point
  std::vector<std::vector<double>> centroids;   // k vectors of point dimension
  std::vector<double> distances;                // per-point distance to its centroid
  std::vector<std::string> point_names;         // row names of the clustered matrix
  std::size_t iterations = 0;
  double objective = 0.0;                       // sum of `distances`
  std::vector<double> objective_history;        // [0] after initial assignment
  std::optional<std::size_t> label_cluster;     // set by detach_point

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto c : assignment) ++sizes[c];
    return sizes;
  }
};

struct KMeansOptions {
  std::size_t max_iter = 100;
  double min_improvement = 1e-12;
  std::size_t restarts = 10;  // independent initialisations; lowest objective wins
};

namespace detail {

class Lloyd {
 public:
  Lloyd(const DataMatrix& points, std::size_t k) : points_(points), k_(k) {}

  std::vector<double> point(std::size_t i) const {
    auto r = points_.row(i);
    return {r.begin(), r.end()};
  }

  double dist(std::size_t i, const std::vector<double>& c) const {
    return jaccard_distance_unchecked(points_.row(i), c);
  }

  // Nearest centroid per point; ties go to the lowest cluster id.
  std::vector<std::size_t> assign(const std::vector<std::vector<double>>& centroids) const {
    std::vector<std::size_t> out(points_.rows());
    for (std::size_t i = 0; i < points_.rows(); ++i) {
      double best = dist(i, centroids[0]);
      std::size_t arg = 0;
      for (std::size_t j = 1; j < k_; ++j) {
        double d = dist(i, centroids[j]);
        if (d < best) {
          best = d;
          arg = j;
        }
      }
      out[i] = arg;
    }
    return out;
  }

  // Empty cluster repair: the point farthest from its own centroid (taken
  // from a cluster with more than one member) seeds the empty cluster.
  void repair(std::vector<std::size_t>& assign, std::vector<std::vector<double>>& centroids) const {
    for (std::size_t j = 0; j < k_; ++j) {
      std::vector<std::size_t> sizes(k_, 0);
      for (auto c : assign) ++sizes[c];
      if (sizes[j] > 0) continue;
      double worst = -1.0;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < assign.size(); ++i) {
        if (sizes[assign[i]] < 2) continue;
        double d = dist(i, centroids[assign[i]]);
        if (d > worst) {
          worst = d;
          arg = i;
        }
      }
      assign[arg] = j;
      centroids[j] = point(arg);
    }
  }

  double objective(const std::vector<std::size_t>& assign,
                   const std::vector<std::vector<double>>& centroids) const {
    double total = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i) total += dist(i, centroids[assign[i]]);
    return total;
  }

  // Component-wise mean of each cluster's members.
  std::vector<std::vector<double>> means(const std::vector<std::size_t>& assign) const {
    const std::size_t dim = points_.cols();
    std::vector<std::vector<double>> mean(k_, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> sizes(k_, 0);
    for (std::size_t i = 0; i < assign.size(); ++i) {
      auto r = points_.row(i);
      auto& m = mean[assign[i]];
      for (std::size_t d = 0; d < dim; ++d) m[d] += r[d];
      ++sizes[assign[i]];
    }
    for (std::size_t j = 0; j < k_; ++j)
      for (auto& v : mean[j]) v /= static_cast<double>(sizes[j]);
    return mean;
  }

 private:
  const DataMatrix& points_;
  std::size_t k_;
};

}  // namespace detail

namespace detail {

inline ClusterAssignment lloyd_run(const DataMatrix& points, std::size_t k, std::mt19937_64& rng,
                                   const KMeansOptions& opts) {
  Lloyd lloyd(points, k);
  std::vector<std::size_t> order(points.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::vector<double>> centroids;
  for (std::size_t j = 0; j < k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, order.size() - 1);
    std::swap(order[j], order[pick(rng)]);
    centroids.push_back(lloyd.point(order[j]));
  }
  auto assign = lloyd.assign(centroids);
  lloyd.repair(assign, centroids);
  centroids = lloyd.means(assign);

  ClusterAssignment out;
  out.k = k;
  out.objective_history.push_back(lloyd.objective(assign, centroids));

  while (out.iterations < opts.max_iter) {
    ++out.iterations;
    auto next = lloyd.assign(centroids);
    // Keep a point where it is when the new nearest centroid is no closer.
    for (std::size_t i = 0; i < next.size(); ++i)
      if (next[i] != assign[i] &&
          !(lloyd.dist(i, centroids[next[i]]) < lloyd.dist(i, centroids[assign[i]])))
        next[i] = assign[i];
    if (next == assign) break;
    auto trial = centroids;
    lloyd.repair(next, trial);
    trial = lloyd.means(next);
    const double obj = lloyd.objective(next, trial);
    const double prev = out.objective_history.back();
    // The mean is not the Jaccard minimiser, so a reassignment can raise the
    // objective; such a step counts as no improvement and is not taken.
    if (obj > prev) break;
    out.objective_history.push_back(obj);
    assign = std::move(next);
    centroids = std::move(trial);
    if (prev - obj < opts.min_improvement) break;
  }

  out.assignment = std::move(assign);
  out.distances.resize(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i)
    out.distances[i] = lloyd.dist(i, centroids[out.assignment[i]]);
  out.objective = out.objective_history.back();
  out.centroids = std::move(centroids);
  return out;
}

}  // namespace detail

// Lloyd's k-means under Jaccard distance (1 - generalized Jaccard
// similarity). Rows of `points` are the objects being clustered; for
// attribute clustering that is the transposed, [0,1]-scaled data matrix.
//
// Each run starts from k distinct rows drawn without replacement; runs share
// one mt19937_64 stream seeded with `seed`, and the run with the lowest
// objective is returned (earliest on ties). Within a run every centroid after
// initialisation is the mean of its cluster. A run stops when no assignment
// changes, when the objective improves by less than `min_improvement` (a step
// that would raise it is discarded), or after `max_iter` rounds, so the
// recorded objective never increases.
inline ClusterAssignment kmeans(const DataMatrix& points, std::size_t k, std::uint64_t seed,
                                const KMeansOptions& opts = {}) {
  if (k == 0) throw ParameterError("kmeans: k must be at least 1");
  if (k > points.rows())
    throw ParameterError("kmeans: k=" + std::to_string(k) + " exceeds point count " +
                         std::to_string(points.rows()));
  if (opts.restarts == 0) throw ParameterError("kmeans: restarts must be at least 1");
  for (double v : points.values())
    if (v < 0.0) throw DomainError("kmeans: points must be non-negative (scale first)");

  std::mt19937_64 rng(seed);
  auto best = detail::lloyd_run(points, k, rng, opts);
  for (std::size_t r = 1; r < opts.restarts; ++r) {
    auto run = detail::lloyd_run(points, k, rng, opts);
    if (run.objective < best.objective) best = std::move(run);
  }
  for (std::size_t i = 0; i < points.rows(); ++i) best.point_names.push_back(points.row_name(i));
  return best;
}

// Removes one clustered point (the class row during attribute clustering)
// and records its cluster as the label cluster.
inline ClusterAssignment detach_point(const ClusterAssignment& a, std::size_t index) {
  if (index >= a.assignment.size()) throw ShapeError("detach_point: index out of range");
  ClusterAssignment out = a;
  out.label_cluster = a.assignment[index];
  out.assignment.erase(out.assignment.begin() + static_cast<std::ptrdiff_t>(index));
  out.distances.erase(out.distances.begin() + static_cast<std::ptrdiff_t>(index));
  if (!out.point_names.empty())
    out.point_names.erase(out.point_names.begin() + static_cast<std::ptrdiff_t>(index));
  out.objective = 0.0;
  for (double d : out.distances) out.objective += d;
  return out;
}

struct ClusterPartition {
  std::vector<LabeledDataset> clusters;           // one dataset per cluster id
  std::vector<std::vector<std::size_t>> columns;  // original column indices per cluster
  std::optional<std::size_t> label_cluster;
};

// Re-forms instance-level datasets from an attribute assignment: cluster j
// gets exactly the columns assigned to j, in their original order, with the
// full label vector. Clusters may come out with zero columns.
inline ClusterPartition split_by_cluster(const LabeledDataset& dataset,
                                         const ClusterAssignment& assignment) {
  const auto& m = dataset.matrix;
  if (assignment.assignment.size() != m.cols())
    throw ShapeError("split_by_cluster: assignment covers " +
                     std::to_string(assignment.assignment.size()) + " attributes, dataset has " +
                     std::to_string(m.cols()));
  if (!assignment.point_names.empty() && assignment.point_names != m.col_names())
    throw ShapeError("split_by_cluster: assignment names do not match dataset columns");

  ClusterPartition out;
  out.columns.resize(assignment.k);
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (assignment.assignment[c] >= assignment.k)
      throw ShapeError("split_by_cluster: cluster id out of range");
    out.columns[assignment.assignment[c]].push_back(c);
  }
  for (const auto& cols : out.columns) out.clusters.push_back(dataset.select_columns(cols));
  out.label_cluster = assignment.label_cluster;
  return out;
}

// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw ShapeError("adjusted_rand_index: length mismatch");
  auto choose2 = [](double n) { return n * (n - 1.0) / 2.0; };
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [_, n] : joint) index += choose2(n);
  for (const auto& [_, n] : ra) sa += choose2(n);
  for (const auto& [_, n] : rb) sb += choose2(n);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return index == max_index ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace cmodel
