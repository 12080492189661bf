#pragma once

// Negative-log-likelihood training objectives over batches of raw network
// outputs. Raw outputs are unconstrained; link functions map them to valid
// distribution parameters:
//   mu = a,  sigma = softplus(s) + 1e-6,  nu = 2 + softplus(d),  xi = exp(k)
// Losses are means over the batch and gradients are exact analytic
// derivatives with respect to the raw outputs, composed through the links.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "probcast/distributions.hpp"
#include "probcast/errors.hpp"
#include "probcast/special_functions.hpp"

namespace probcast {

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Raw head values for one time step; the width actually used is 2/3/4
// depending on the distribution kind.
struct RawParamVector {
  double a = 0.0;  // location
  double s = 0.0;  // scale
  double d = 0.0;  // degrees of freedom
  double k = 0.0;  // skewness
};

struct LinkedParams {
  double mu = 0.0;
  double sigma = 0.0;
  double nu = 0.0;
  double xi = 0.0;
};

namespace detail {
inline std::atomic<std::uint64_t>& link_clamp_counter() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}
}  // namespace detail

// Number of times exp(k) had to be clamped at |k| = 30 since process start.
inline std::uint64_t link_clamp_count() { return detail::link_clamp_counter().load(); }

inline constexpr double kSigmaFloor = 1e-6;
inline constexpr double kXiRawClamp = 30.0;

inline LinkedParams link_transform(const RawParamVector& raw, DistKind kind) {
  if (!std::isfinite(raw.a) || !std::isfinite(raw.s) || !std::isfinite(raw.d) ||
      !std::isfinite(raw.k))
    throw std::domain_error("link_transform: raw outputs must be finite");
  LinkedParams out;
  out.mu = raw.a;
  out.sigma = softplus(raw.s) + kSigmaFloor;
  if (kind != DistKind::Normal) out.nu = 2.0 + softplus(raw.d);
  if (kind == DistKind::SkewedStudentT) {
    double k = raw.k;
    if (std::fabs(k) > kXiRawClamp) {
      k = k > 0.0 ? kXiRawClamp : -kXiRawClamp;
      detail::link_clamp_counter().fetch_add(1);
    }
    out.xi = std::exp(k);
  }
  return out;
}

inline DistributionSpec to_spec(const LinkedParams& p, DistKind kind) {
  return {kind, p.mu, p.sigma, p.nu, p.xi};
}

struct NllResult {
  double loss = 0.0;          // mean per-observation NLL
  std::vector<double> grad;   // row-major [n, width], d(loss)/d(raw)
};

namespace detail {

struct ParamGrad {
  double loss = 0.0;
  double d_mu = 0.0, d_sigma = 0.0, d_nu = 0.0, d_xi = 0.0;
};

inline ParamGrad normal_obs(double r, const LinkedParams& p) {
  const double z = (r - p.mu) / p.sigma;
  ParamGrad g;
  g.loss = kLnSqrt2Pi + std::log(p.sigma) + 0.5 * z * z;
  g.d_mu = -z / p.sigma;
  g.d_sigma = (1.0 - z * z) / p.sigma;
  return g;
}

inline ParamGrad student_obs(double r, const LinkedParams& p) {
  const double z = (r - p.mu) / p.sigma;
  const double nu = p.nu;
  const double a = (nu + 1.0) * z / (nu + z * z);
  ParamGrad g;
  g.loss = -probcast::lgamma(0.5 * (nu + 1.0)) + probcast::lgamma(0.5 * nu) +
           0.5 * std::log(nu * kPi) + std::log(p.sigma) +
           0.5 * (nu + 1.0) * std::log1p(z * z / nu);
  g.d_mu = -a / p.sigma;
  g.d_sigma = (1.0 - a * z) / p.sigma;
  g.d_nu = -0.5 * digamma(0.5 * (nu + 1.0)) + 0.5 * digamma(0.5 * nu) + 0.5 / nu +
           0.5 * std::log1p(z * z / nu) - 0.5 * (nu + 1.0) * z * z / (nu * (nu + z * z));
  return g;
}

inline ParamGrad skewt_obs(double r, const LinkedParams& p) {
  const double z = (r - p.mu) / p.sigma;
  const double nu = p.nu;
  const double xi = p.xi;
  // branch by sign of z, with z = 0 on the right branch
  const double c = z < 0.0 ? xi : 1.0 / xi;
  const double w = c * z;
  const double b = (nu + 1.0) * w / (nu + w * w);
  ParamGrad g;
  g.loss = std::log(0.5 * (xi + 1.0 / xi)) + std::log(p.sigma) -
           probcast::lgamma(0.5 * (nu + 1.0)) + probcast::lgamma(0.5 * nu) +
           0.5 * std::log(nu * kPi) + 0.5 * (nu + 1.0) * std::log1p(w * w / nu);
  g.d_mu = -b * c / p.sigma;
  g.d_sigma = (1.0 - b * w) / p.sigma;
  g.d_nu = -0.5 * digamma(0.5 * (nu + 1.0)) + 0.5 * digamma(0.5 * nu) + 0.5 / nu +
           0.5 * std::log1p(w * w / nu) - 0.5 * (nu + 1.0) * w * w / (nu * (nu + w * w));
  const double dw_dxi = z < 0.0 ? z : -z / (xi * xi);
  g.d_xi = (1.0 - 1.0 / (xi * xi)) / (xi + 1.0 / xi) + b * dw_dxi;
  return g;
}

inline NllResult nll_batch(DistKind kind, std::span<const double> raw,
                           std::span<const double> returns) {
  const int width = param_count(kind);
  const std::size_t n = returns.size();
  if (n == 0) throw std::domain_error("nll: empty batch");
  if (raw.size() != n * static_cast<std::size_t>(width))
    throw std::domain_error("nll: raw batch size does not match returns (width " +
                            std::to_string(width) + ")");
  NllResult out;
  out.grad.assign(raw.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = raw.data() + i * width;
    RawParamVector rv;
    rv.a = row[0];
    rv.s = row[1];
    if (width > 2) rv.d = row[2];
    if (width > 3) rv.k = row[3];
    const LinkedParams p = link_transform(rv, kind);
    ParamGrad g;
    switch (kind) {
      case DistKind::Normal: g = normal_obs(returns[i], p); break;
      case DistKind::StudentT: g = student_obs(returns[i], p); break;
      case DistKind::SkewedStudentT: g = skewt_obs(returns[i], p); break;
    }
    if (!std::isfinite(g.loss))
      throw numeric_error("nll: non-finite loss at batch index " + std::to_string(i));
    total += g.loss;
    double* grow = out.grad.data() + i * width;
    grow[0] = g.d_mu * inv_n;
    grow[1] = g.d_sigma * sigmoid(rv.s) * inv_n;
    if (width > 2) grow[2] = g.d_nu * sigmoid(rv.d) * inv_n;
    if (width > 3) grow[3] = std::fabs(rv.k) > kXiRawClamp ? 0.0 : g.d_xi * p.xi * inv_n;
  }
  out.loss = total * inv_n;
  return out;
}

}  // namespace detail

// raw is row-major [n, 2]: (a, s) per observation
inline NllResult nll_normal(std::span<const double> raw, std::span<const double> returns) {
  return detail::nll_batch(DistKind::Normal, raw, returns);
}

// raw is row-major [n, 3]: (a, s, d) per observation
inline NllResult nll_student(std::span<const double> raw, std::span<const double> returns) {
  return detail::nll_batch(DistKind::StudentT, raw, returns);
}

// raw is row-major [n, 4]: (a, s, d, k) per observation
inline NllResult nll_skewt(std::span<const double> raw, std::span<const double> returns) {
  return detail::nll_batch(DistKind::SkewedStudentT, raw, returns);
}

inline NllResult nll_loss(DistKind kind, std::span<const double> raw,
                          std::span<const double> returns) {
  return detail::nll_batch(kind, raw, returns);
}

}  // namespace probcast
