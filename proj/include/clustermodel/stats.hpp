#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clustermodel/error.hpp"

namespace cmodel {

namespace detail {

// Continued fraction for the incomplete beta function, modified Lentz.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericalError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b). `one_minus_x` lets callers pass
// 1 - x without cancellation when x is close to 1.
inline double regularized_incomplete_beta(double a, double b, double x,
                                          std::optional<double> one_minus_x = std::nullopt) {
  if (!(a > 0.0 && b > 0.0)) throw ParameterError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("incomplete beta: x outside [0,1]");
  const double y = one_minus_x.value_or(1.0 - x);
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log(y));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, y) / b;
}

// CDF of Student's t with `df` degrees of freedom.
inline double t_cdf(double t, std::size_t df) {
  if (df == 0) throw ParameterError("t_cdf: df must be at least 1");
  if (std::isnan(t)) throw DomainError("t_cdf: t is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double nu = static_cast<double>(df);
  const double denom = nu + t * t;
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * nu, 0.5, nu / denom, t * t / denom);
  return t < 0.0 ? tail : 1.0 - tail;
}

// Inverse CDF by bisection on t_cdf, run to the resolution of double.
// Upper-half probabilities are mapped through symmetry so the search always
// works in the lower tail where t_cdf has full relative precision.
inline double t_inv(double p, std::size_t df) {
  if (df == 0) throw ParameterError("t_inv: df must be at least 1");
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("t_inv: p must lie in (0,1)");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -t_inv(1.0 - p, df);
  double lo = -1.0, hi = 0.0;
  while (t_cdf(lo, df) > p) {
    hi = lo;
    lo *= 2.0;
    if (!std::isfinite(lo)) throw NumericalError("t_inv: quantile out of range");
  }
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (t_cdf(mid, df) < p) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Sample variance, n - 1 denominator.
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ParameterError("sample_variance: need at least two values");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("pearson_correlation: length mismatch");
  if (a.size() < 2) throw ParameterError("pearson_correlation: need at least two pairs");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw NumericalError("pearson_correlation: constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// One record per printed row of a "paired two sample for means" table.
struct TTestResult {
  std::size_t n = 0;
  double mean_a = 0.0, mean_b = 0.0;
  double var_a = 0.0, var_b = 0.0;
  std::optional<double> pearson_r;  // empty when either column is constant
  double hypothesized_difference = 0.0;
  std::size_t df = 0;
  double t_stat = 0.0;
  double p_one_tail = 0.0;  // tail beyond |t| on the observed side
  double p_two_tail = 0.0;
  double alpha = 0.05;
  double t_crit_one = 0.0;
  double t_crit_two = 0.0;

  friend bool operator==(const TTestResult&, const TTestResult&) = default;
};

// Paired t-test on d = a - b with sample standard deviation of d.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                                 double alpha = 0.05) {
  if (a.size() != b.size()) throw ShapeError("paired_t_test: length mismatch");
  if (a.size() < 2) throw ParameterError("paired_t_test: need at least two pairs");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("paired_t_test: alpha must lie in (0,1)");
  const std::size_t n = a.size();

  std::vector<double> d(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  const double sd = std::sqrt(sample_variance(d));
  // Differences equal up to rounding count as identical.
  if (sd <= 64.0 * std::numeric_limits<double>::epsilon() * scale)
    throw NumericalError("paired_t_test: differences have zero variance");

  TTestResult r;
  r.n = n;
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  r.var_a = sample_variance(a);
  r.var_b = sample_variance(b);
  try {
    r.pearson_r = pearson_correlation(a, b);
  } catch (const NumericalError&) {
    r.pearson_r.reset();
  }
  r.df = n - 1;
  r.t_stat = mean(d) / (sd / std::sqrt(static_cast<double>(n)));
  r.p_one_tail = t_cdf(-std::abs(r.t_stat), r.df);
  r.p_two_tail = 2.0 * r.p_one_tail;
  r.alpha = alpha;
  r.t_crit_one = t_inv(1.0 - alpha, r.df);
  r.t_crit_two = t_inv(1.0 - alpha / 2.0, r.df);
  return r;
}

}  // namespace cmodel
