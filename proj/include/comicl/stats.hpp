#pragma once

// Small statistics toolkit: moments, Student-t quantiles, confidence
// intervals.  The t quantile is computed from the regularized incomplete
// beta function rather than a lookup table so arbitrary degrees of freedom
// work.

#include <cmath>
#include <span>
#include <vector>

#include "comicl/common.hpp"

namespace comicl {

inline double mean(std::span<const double> v) {
  require(!v.empty(), "mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Unbiased sample standard deviation (n-1 denominator).
inline double sample_sd(std::span<const double> v) {
  require(v.size() >= 2, "sample_sd: need at least two values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

namespace detail {

// log Gamma via the Lanczos approximation (g=7, n=9).
inline double log_gamma(double x) {
  static const double kCoef[9] = {
      0.99999999999980993,  676.5203681218851,   -1259.1392167224028,
      771.32342877765313,   -176.61502916214059, 12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection formula.
    return std::log(3.14159265358979323846 /
                    std::sin(3.14159265358979323846 * x)) -
           log_gamma(1.0 - x);
  }
  x -= 1.0;
  double a = kCoef[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += kCoef[i] / (x + i);
  return 0.5 * std::log(2.0 * 3.14159265358979323846) +
         (x + 0.5) * std::log(t) - t + std::log(a);
}

// Continued fraction for the incomplete beta function (Lentz's method).
inline double beta_cf(double a, double b, double x) {
  const double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-14) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  require(a > 0 && b > 0, "incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = detail::log_gamma(a + b) - detail::log_gamma(a) -
                          detail::log_gamma(b) + a * std::log(x) +
                          b * std::log(1.0 - x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * detail::beta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(ln_front) * detail::beta_cf(b, a, 1.0 - x) / b;
}

// CDF of Student's t with `df` degrees of freedom.
inline double student_t_cdf(double t, double df) {
  require(df > 0, "student_t_cdf: df must be positive");
  const double x = df / (df + t * t);
  const double p = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - p : p;
}

// Quantile of Student's t (p in (0,1)); bisection on the CDF.
inline double student_t_quantile(double df, double p) {
  require(p > 0.0 && p < 1.0, "student_t_quantile: p must be in (0,1)");
  if (p == 0.5) return 0.0;
  double lo = -1e3, hi = 1e3;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, df) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// A two-sided confidence interval.
struct Ci {
  double center = 0.0;
  double half_width = 0.0;
  double lo() const { return center - half_width; }
  double hi() const { return center + half_width; }
};

// 95% t-interval for a mean from raw samples.
inline Ci mean_ci95(std::span<const double> values) {
  require(values.size() >= 2, "mean_ci95: need at least two values");
  const double n = static_cast<double>(values.size());
  const double t = student_t_quantile(n - 1.0, 0.975);
  return Ci{mean(values), t * sample_sd(values) / std::sqrt(n)};
}

// 95% interval for a proportion: normal-theory SEM sqrt(p(1-p)/n) scaled by
// the t quantile with n-1 degrees of freedom.
inline Ci proportion_ci95(double p_hat, std::size_t n) {
  require(n >= 2, "proportion_ci95: need at least two trials");
  require(p_hat >= 0.0 && p_hat <= 1.0, "proportion_ci95: p out of [0,1]");
  const double dn = static_cast<double>(n);
  const double sem = std::sqrt(p_hat * (1.0 - p_hat) / dn);
  const double t = student_t_quantile(dn - 1.0, 0.975);
  return Ci{p_hat, t * sem};
}

}  // namespace comicl
