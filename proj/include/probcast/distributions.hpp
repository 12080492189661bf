#pragma once

// Densities, CDFs, quantiles, moments, and samplers for the three
// predictive distributions: Normal, Student's t, and the Fernandez-Steel
// skewed Student's t.
//
// Parameterization notes:
//   * sigma is the scale parameter, not the standard deviation; a Student-t
//     with scale sigma has variance sigma^2 * nu/(nu-2).
//   * The skewed-t applies the Fernandez-Steel transform to the standard
//     Student-t: for z = (x-mu)/sigma the density is
//         2/(xi + 1/xi) * [ f_t(xi*z)  for z < 0,  f_t(z/xi)  for z >= 0 ]
//     with the z = 0 point assigned to the right branch.
//   * nu must exceed 2 so that variances and VaR scalings exist. (The
//     printed second-moment factor in the source material evaluates to
//     3*nu/(nu-2) at xi = 1; we use the standard Fernandez-Steel factor
//     (xi^3 + xi^-3)/(xi + 1/xi) * nu/(nu-2), which reduces correctly and
//     matches Monte Carlo.)

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "probcast/errors.hpp"
#include "probcast/numerics.hpp"
#include "probcast/rng.hpp"
#include "probcast/special_functions.hpp"

namespace probcast {

enum class DistKind : int { Normal = 0, StudentT = 1, SkewedStudentT = 2 };

inline int param_count(DistKind kind) {
  switch (kind) {
    case DistKind::Normal: return 2;
    case DistKind::StudentT: return 3;
    case DistKind::SkewedStudentT: return 4;
  }
  return 0;
}

inline const char* kind_name(DistKind kind) {
  switch (kind) {
    case DistKind::Normal: return "normal";
    case DistKind::StudentT: return "student_t";
    case DistKind::SkewedStudentT: return "skewed_student_t";
  }
  return "?";
}

// One predictive distribution. nu is meaningful for the t kinds only and
// xi for the skewed t only; unused slots are zero.
struct DistributionSpec {
  DistKind kind = DistKind::Normal;
  double mu = 0.0;
  double sigma = 1.0;
  double nu = 0.0;
  double xi = 0.0;

  static DistributionSpec normal(double mu, double sigma) {
    return {DistKind::Normal, mu, sigma, 0.0, 0.0};
  }
  static DistributionSpec student_t(double mu, double sigma, double nu) {
    return {DistKind::StudentT, mu, sigma, nu, 0.0};
  }
  static DistributionSpec skewed_student_t(double mu, double sigma, double nu, double xi) {
    return {DistKind::SkewedStudentT, mu, sigma, nu, xi};
  }
};

inline void validate(const DistributionSpec& spec) {
  if (!std::isfinite(spec.mu)) throw std::domain_error("distribution: mu must be finite");
  if (!std::isfinite(spec.sigma) || spec.sigma <= 0.0)
    throw std::domain_error("distribution: sigma must be positive and finite");
  if (spec.kind != DistKind::Normal) {
    if (!std::isfinite(spec.nu) || spec.nu <= 2.0)
      throw std::domain_error("distribution: nu must exceed 2");
  }
  if (spec.kind == DistKind::SkewedStudentT) {
    if (!std::isfinite(spec.xi) || spec.xi <= 0.0)
      throw std::domain_error("distribution: xi must be positive and finite");
  }
}

namespace detail {

// ---- standard building blocks (location 0, scale 1) ----

inline double norm_log_pdf_std(double z) { return -kLnSqrt2Pi - 0.5 * z * z; }

inline double norm_pdf_std(double z) { return std::exp(norm_log_pdf_std(z)); }

inline double norm_cdf_std(double z) { return 0.5 * probcast::erfc(-z / kSqrt2); }

// Acklam's rational approximation followed by one Halley step.
inline double norm_quantile_std(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = norm_cdf_std(x) - p;
  const double u = e / norm_pdf_std(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

inline double t_log_norm_const(double nu) {
  return probcast::lgamma(0.5 * (nu + 1.0)) - probcast::lgamma(0.5 * nu) -
         0.5 * std::log(nu * kPi);
}

inline double t_log_pdf_std(double z, double nu) {
  return t_log_norm_const(nu) - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

inline double t_pdf_std(double z, double nu) { return std::exp(t_log_pdf_std(z, nu)); }

inline double t_cdf_std(double t, double nu) {
  if (t == 0.0) return 0.5;
  const double xb = nu / (nu + t * t);
  const double half_tail = 0.5 * probcast::incomplete_beta(0.5 * nu, 0.5, xb);
  return t < 0.0 ? half_tail : 1.0 - half_tail;
}

inline double t_quantile_std(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("t_quantile: p outside (0, 1)");
  if (p == 0.5) return 0.0;
  const bool flip = p > 0.5;
  if (flip) p = 1.0 - p;
  // p < 0.5, root is negative; pick an initial guess from the tail
  // expansion for small p, otherwise from the scaled normal quantile.
  double guess;
  if (p < 0.05) {
    const double log_beta =
        probcast::lgamma(0.5 * nu) + probcast::lgamma(0.5) - probcast::lgamma(0.5 * (nu + 1.0));
    guess = -std::sqrt(nu) * std::exp(-(std::log(p * nu) + log_beta) / nu);
  } else {
    const double z = norm_quantile_std(p);
    guess = nu > 2.0 ? z * std::sqrt(nu / (nu - 2.0)) : z;
  }
  double lo = std::min(guess * 2.0 - 1.0, -1.0);
  int expand = 0;
  while (t_cdf_std(lo, nu) > p) {
    lo *= 8.0;
    if (++expand > 200) throw numeric_error("t_quantile: failed to bracket");
  }
  const double ftol = std::max(1e-14, 1e-9 * p);
  return bracketed_newton([&](double t) { return t_cdf_std(t, nu) - p; },
                          [&](double t) { return t_pdf_std(t, nu); }, guess, lo, 0.0, ftol) *
         (flip ? -1.0 : 1.0);
}

// ---- Fernandez-Steel skewed standard t ----

inline double skewt_log_pdf_std(double z, double nu, double xi) {
  const double w = z < 0.0 ? xi * z : z / xi;
  return std::log(2.0 / (xi + 1.0 / xi)) + t_log_pdf_std(w, nu);
}

inline double skewt_cdf_std(double z, double nu, double xi) {
  const double xi2 = xi * xi;
  if (z < 0.0) return 2.0 / (1.0 + xi2) * t_cdf_std(xi * z, nu);
  return (1.0 - xi2 + 2.0 * xi2 * t_cdf_std(z / xi, nu)) / (1.0 + xi2);
}

inline double skewt_quantile_std(double p, double nu, double xi) {
  const double xi2 = xi * xi;
  const double split = 1.0 / (1.0 + xi2);
  double z;
  if (p <= split) {
    z = t_quantile_std(0.5 * p * (1.0 + xi2), nu) / xi;
  } else {
    z = xi * t_quantile_std((p * (1.0 + xi2) + xi2 - 1.0) / (2.0 * xi2), nu);
  }
  // closed-form inversion through the t quantile; fall back to bisection
  // if the round trip drifts
  if (std::fabs(skewt_cdf_std(z, nu, xi) - p) > 1e-9) {
    double lo = z - 1.0, hi = z + 1.0;
    while (skewt_cdf_std(lo, nu, xi) > p) lo -= 2.0 * (hi - lo);
    while (skewt_cdf_std(hi, nu, xi) < p) hi += 2.0 * (hi - lo);
    z = bisect([&](double t) { return skewt_cdf_std(t, nu, xi) - p; }, lo, hi, 1e-13);
  }
  return z;
}

// log-density without parameter validation; the test harness uses this to
// evaluate below the production nu floor.
inline double log_pdf_unchecked(const DistributionSpec& spec, double x) {
  const double z = (x - spec.mu) / spec.sigma;
  switch (spec.kind) {
    case DistKind::Normal: return norm_log_pdf_std(z) - std::log(spec.sigma);
    case DistKind::StudentT: return t_log_pdf_std(z, spec.nu) - std::log(spec.sigma);
    case DistKind::SkewedStudentT:
      return skewt_log_pdf_std(z, spec.nu, spec.xi) - std::log(spec.sigma);
  }
  throw std::domain_error("distribution: unknown kind");
}

}  // namespace detail

inline double log_pdf(const DistributionSpec& spec, double x) {
  validate(spec);
  if (!std::isfinite(x)) throw std::domain_error("log_pdf: x must be finite");
  return detail::log_pdf_unchecked(spec, x);
}

inline double pdf(const DistributionSpec& spec, double x) { return std::exp(log_pdf(spec, x)); }

inline double cdf(const DistributionSpec& spec, double x) {
  validate(spec);
  if (std::isnan(x)) throw std::domain_error("cdf: x is NaN");
  if (std::isinf(x)) return x < 0.0 ? 0.0 : 1.0;
  const double z = (x - spec.mu) / spec.sigma;
  switch (spec.kind) {
    case DistKind::Normal: return detail::norm_cdf_std(z);
    case DistKind::StudentT: return detail::t_cdf_std(z, spec.nu);
    case DistKind::SkewedStudentT: return detail::skewt_cdf_std(z, spec.nu, spec.xi);
  }
  throw std::domain_error("distribution: unknown kind");
}

inline double quantile(const DistributionSpec& spec, double p) {
  validate(spec);
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile: p outside (0, 1)");
  double z = 0.0;
  switch (spec.kind) {
    case DistKind::Normal: z = detail::norm_quantile_std(p); break;
    case DistKind::StudentT: z = detail::t_quantile_std(p, spec.nu); break;
    case DistKind::SkewedStudentT: z = detail::skewt_quantile_std(p, spec.nu, spec.xi); break;
  }
  return spec.mu + spec.sigma * z;
}

// Mean-shift and second-moment factors of the skewed standard t, plus the
// resulting mean and variance at scale sigma (relative to the location).
struct SkewTMoments {
  double phi = 0.0;
  double gamma = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

inline SkewTMoments skewt_moments(double sigma, double nu, double xi) {
  if (!(sigma > 0.0)) throw std::domain_error("skewt_moments: sigma must be positive");
  if (!(nu > 2.0)) throw std::domain_error("skewt_moments: nu must exceed 2");
  if (!(xi > 0.0)) throw std::domain_error("skewt_moments: xi must be positive");
  // first absolute moment of the standard t
  const double m1 = 2.0 * nu * std::exp(lgamma(0.5 * (nu + 1.0)) - lgamma(0.5 * nu)) /
                    ((nu - 1.0) * std::sqrt(kPi * nu));
  const double inv = 1.0 / xi;
  SkewTMoments m;
  m.phi = (xi * xi - inv * inv) / (xi + inv) * m1;
  m.gamma = (xi * xi * xi + inv * inv * inv) / (xi + inv) * nu / (nu - 2.0);
  m.mean = m.phi * sigma;
  m.variance = (m.gamma - m.phi * m.phi) * sigma * sigma;
  return m;
}

// Draw into out[0..n) by inverse-CDF sampling; deterministic given the rng state.
inline void sample_into(const DistributionSpec& spec, Rng& rng, double* out, std::size_t n) {
  validate(spec);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double z = 0.0;
    switch (spec.kind) {
      case DistKind::Normal: z = detail::norm_quantile_std(u); break;
      case DistKind::StudentT: z = detail::t_quantile_std(u, spec.nu); break;
      case DistKind::SkewedStudentT: z = detail::skewt_quantile_std(u, spec.nu, spec.xi); break;
    }
    out[i] = spec.mu + spec.sigma * z;
  }
}

inline std::vector<double> sample(const DistributionSpec& spec, std::size_t n,
                                  std::uint64_t seed) {
  if (n < 1) throw std::domain_error("sample: n must be at least 1");
  std::vector<double> out(n);
  Rng rng(seed);
  sample_into(spec, rng, out.data(), n);
  return out;
}

inline double sample_one(const DistributionSpec& spec, Rng& rng) {
  double x;
  sample_into(spec, rng, &x, 1);
  return x;
}

}  // namespace probcast
