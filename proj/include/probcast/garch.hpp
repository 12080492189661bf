#pragma once

// GARCH(1,1) maximum-likelihood baseline with Normal, Student-t, or
// skewed-t innovations. The recursion drives the scale parameter of the
// innovation law:
//   sigma^2_t = omega + alpha * (r_{t-1} - mu)^2 + beta * sigma^2_{t-1}
// with sigma^2_0 at the unconditional level omega / (1 - alpha - beta).
// Estimation is Nelder-Mead in an unconstrained transformed space with
// three seeded starts.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "probcast/distributions.hpp"
#include "probcast/errors.hpp"
#include "probcast/nelder_mead.hpp"
#include "probcast/nll_losses.hpp"
#include "probcast/rng.hpp"

namespace probcast {

struct GarchParams {
  double mu = 0.0;
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  DistKind kind = DistKind::Normal;
  double nu = 0.0;
  double xi = 0.0;
};

inline void validate(const GarchParams& p) {
  if (!(p.omega > 0.0)) throw std::domain_error("garch: omega must be positive");
  if (!(p.alpha >= 0.0 && p.beta >= 0.0))
    throw std::domain_error("garch: alpha and beta must be non-negative");
  if (!(p.alpha + p.beta < 1.0))
    throw std::domain_error("garch: alpha + beta must be below 1 (stationarity)");
  if (p.kind != DistKind::Normal && !(p.nu > 2.0))
    throw std::domain_error("garch: nu must exceed 2");
  if (p.kind == DistKind::SkewedStudentT && !(p.xi > 0.0))
    throw std::domain_error("garch: xi must be positive");
}

inline std::vector<double> garch_filter(const GarchParams& params,
                                        std::span<const double> returns) {
  validate(params);
  if (returns.size() < 2) throw data_error("garch_filter: need at least two observations");
  std::vector<double> sigma2(returns.size());
  sigma2[0] = params.omega / (1.0 - params.alpha - params.beta);
  for (std::size_t t = 1; t < returns.size(); ++t) {
    const double eps = returns[t - 1] - params.mu;
    sigma2[t] = params.omega + params.alpha * eps * eps + params.beta * sigma2[t - 1];
  }
  return sigma2;
}

// Total negative log-likelihood: -sum_t log f(r_t; mu, sigma_t, nu, xi).
inline double garch_nll(const GarchParams& params, std::span<const double> returns) {
  const std::vector<double> sigma2 = garch_filter(params, returns);
  double nll = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const DistributionSpec spec{params.kind, params.mu, std::sqrt(sigma2[t]), params.nu,
                                params.xi};
    nll -= detail::log_pdf_unchecked(spec, returns[t]);
  }
  return nll;
}

namespace detail {

// unconstrained parameterization: mu raw, log omega, logistic persistence
// and its alpha/beta split, then the nll_losses links for nu and xi
inline GarchParams garch_from_raw(const std::vector<double>& raw, DistKind kind) {
  GarchParams p;
  p.kind = kind;
  p.mu = raw[0];
  p.omega = std::exp(raw[1]);
  const double persistence = 0.9995 * probcast::sigmoid(raw[2]);
  const double split = probcast::sigmoid(raw[3]);
  p.alpha = persistence * split;
  p.beta = persistence * (1.0 - split);
  if (kind != DistKind::Normal) p.nu = 2.0 + probcast::softplus(raw[4]);
  if (kind == DistKind::SkewedStudentT) p.xi = std::exp(std::clamp(raw[5], -30.0, 30.0));
  return p;
}

inline double softplus_inverse(double y) { return std::log(std::expm1(y)); }

}  // namespace detail

struct GarchFit {
  GarchParams params;
  double nll = 0.0;
  int iterations = 0;
};

inline GarchFit garch_fit(std::span<const double> returns, DistKind kind,
                          std::uint64_t seed = 0) {
  if (returns.size() < 250) throw data_error("garch_fit: need at least 250 observations");
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(returns.size());
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= static_cast<double>(returns.size() - 1);
  if (!(var > 0.0)) throw data_error("garch_fit: degenerate (constant) series");

  const int dim = kind == DistKind::Normal ? 4 : (kind == DistKind::StudentT ? 5 : 6);
  auto objective = [&](const std::vector<double>& raw) {
    const GarchParams p = detail::garch_from_raw(raw, kind);
    const double nll = garch_nll(p, returns);
    return std::isfinite(nll) ? nll : 1e30;
  };

  // heuristic center: mild ARCH with persistence 0.9 around the sample scale
  std::vector<double> center(dim, 0.0);
  center[0] = mean;
  center[1] = std::log(0.1 * var);
  center[2] = 2.2;   // persistence ~ 0.9
  center[3] = -2.2;  // alpha ~ 0.1 of persistence
  if (dim > 4) center[4] = detail::softplus_inverse(6.0);  // nu ~ 8
  if (dim > 5) center[5] = 0.0;                            // xi = 1

  Rng rng(mix_seed(seed, 0x6a72c8));
  GarchFit best;
  best.nll = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int start = 0; start < 3; ++start) {
    std::vector<double> x0 = center;
    if (start > 0)
      for (auto& v : x0) v += 0.5 * (2.0 * rng.uniform() - 1.0);
    const NelderMeadResult nm = nelder_mead(objective, x0, 0.25, 1e-10, 4000);
    if (!std::isfinite(nm.fx) || nm.fx >= 1e30) continue;
    any = true;
    if (nm.fx < best.nll) {
      best.nll = nm.fx;
      best.params = detail::garch_from_raw(nm.x, kind);
      best.iterations = nm.iterations;
    }
  }
  if (!any)
    throw numeric_error("garch_fit: no start converged to a finite likelihood (n = " +
                        std::to_string(returns.size()) + ")");
  validate(best.params);
  return best;
}

// One-step-ahead forecast after the end of history.
inline DistributionSpec garch_forecast(const GarchParams& params,
                                       std::span<const double> history) {
  const std::vector<double> sigma2 = garch_filter(params, history);
  const double eps = history.back() - params.mu;
  const double next = params.omega + params.alpha * eps * eps + params.beta * sigma2.back();
  return {params.kind, params.mu, std::sqrt(next), params.nu, params.xi};
}

}  // namespace probcast
