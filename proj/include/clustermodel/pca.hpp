#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "clustermodel/data.hpp"
#include "clustermodel/error.hpp"

namespace cmodel {

struct SymmetricEigen {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

// Cyclic Jacobi eigendecomposition of a dense symmetric matrix (row-major,
// n x n). Sweeps until the off-diagonal Frobenius norm drops below `tol`
// relative to the full norm.
inline SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n, double tol = 1e-10,
                                   int max_sweeps = 100) {
  if (a.size() != n * n) throw ShapeError("jacobi_eigen: matrix is not n x n");
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto at = [n](std::vector<double>& m, std::size_t r, std::size_t c) -> double& {
    return m[r * n + c];
  };

  double norm = 0.0;
  for (double x : a) norm += x * x;
  norm = std::sqrt(norm);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * at(a, p, q) * at(a, p, q);
    if (std::sqrt(off) <= tol * std::max(norm, 1e-300)) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (apq == 0.0) continue;
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(a, k, p), akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(a, p, k), aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = at(v, k, p), vkq = at(v, k, q);
          at(v, k, p) = c * vkp - s * vkq;
          at(v, k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return at(a, i, i) > at(a, j, j); });
  SymmetricEigen out;
  for (std::size_t i : order) {
    out.values.push_back(at(a, i, i));
    std::vector<double> vec(n);
    for (std::size_t k = 0; k < n; ++k) vec[k] = at(v, k, i);
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

struct PcaModel {
  std::vector<double> mean;                     // per attribute
  std::vector<std::vector<double>> components;  // retained x n_attributes, orthonormal rows
  std::vector<double> eigenvalues;              // all of them, descending, clamped at 0
  std::size_t retained = 0;
};

// Fits PCA on the sample covariance (n - 1 denominator) of `m` and keeps the
// shortest prefix of components whose eigenvalue sum reaches
// variance_threshold of the total.
inline PcaModel fit_pca(const DataMatrix& m, double variance_threshold = 0.95) {
  if (m.rows() < 2) throw ParameterError("fit_pca: need at least two rows");
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
    throw ParameterError("fit_pca: variance_threshold must lie in (0,1]");
  const std::size_t n = m.rows(), d = m.cols();

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += m(r, c);
  for (auto& x : model.mean) x /= static_cast<double>(n);

  std::vector<double> cov(d * d, 0.0);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) centered[c] = m(r, c) - model.mean[c];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += centered[i] * centered[j];
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] /= static_cast<double>(n - 1);
      cov[j * d + i] = cov[i * d + j];
    }

  auto eig = jacobi_eigen(std::move(cov), d);
  for (auto& x : eig.values) x = std::max(x, 0.0);
  const double total = std::accumulate(eig.values.begin(), eig.values.end(), 0.0);

  std::size_t keep = 0;
  double acc = 0.0;
  if (total <= 0.0) {
    keep = std::min<std::size_t>(1, d);
  } else {
    while (keep < d) {
      acc += eig.values[keep++];
      if (acc >= variance_threshold * total) break;
    }
    // Threshold 1 means "every component with non-zero variance"; round-off
    // could otherwise leave zero-variance directions in or drop the last one.
    if (variance_threshold == 1.0) {
      keep = 0;
      for (double x : eig.values)
        if (x > 1e-12 * total) ++keep;
    }
  }
  model.eigenvalues = std::move(eig.values);
  model.retained = keep;
  model.components.assign(eig.vectors.begin(), eig.vectors.begin() + static_cast<long>(keep));
  return model;
}

inline DataMatrix project(const PcaModel& model, const DataMatrix& m) {
  if (m.cols() != model.mean.size())
    throw ShapeError("project: matrix has " + std::to_string(m.cols()) +
                     " columns, model expects " + std::to_string(model.mean.size()));
  std::vector<double> values(m.rows() * model.retained, 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t k = 0; k < model.retained; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < m.cols(); ++c)
        s += (m(r, c) - model.mean[c]) * model.components[k][c];
      values[r * model.retained + k] = s;
    }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < model.retained; ++k) names.push_back("pc" + std::to_string(k + 1));
  return DataMatrix(m.rows(), model.retained, std::move(values), std::move(names));
}

// Maps projected scores back into attribute space.
inline DataMatrix reconstruct(const PcaModel& model, const DataMatrix& scores,
                              std::vector<std::string> col_names = {}) {
  if (scores.cols() != model.retained) throw ShapeError("reconstruct: score width != retained");
  const std::size_t d = model.mean.size();
  std::vector<double> values(scores.rows() * d);
  for (std::size_t r = 0; r < scores.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) {
      double s = model.mean[c];
      for (std::size_t k = 0; k < model.retained; ++k) s += scores(r, k) * model.components[k][c];
      values[r * d + c] = s;
    }
  if (col_names.empty())
    for (std::size_t c = 0; c < d; ++c) col_names.push_back("c" + std::to_string(c));
  return DataMatrix(scores.rows(), d, std::move(values), std::move(col_names));
}

}  // namespace cmodel
