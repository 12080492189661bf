#pragma once

// Value-at-Risk and Expected Shortfall from distributional forecasts, plus
// the Kupiec, Christoffersen, and McNeil-Frey backtests. Long-position
// convention throughout: VaR(alpha) = -quantile(alpha) in positive loss
// units, an exceedance is a return below -VaR, and ES is the (signed)
// conditional mean return beyond the quantile.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "probcast/distributions.hpp"
#include "probcast/errors.hpp"
#include "probcast/numerics.hpp"
#include "probcast/rng.hpp"
#include "probcast/special_functions.hpp"

namespace probcast {

inline double var_forecast(const DistributionSpec& spec, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::domain_error("var_forecast: alpha outside (0, 0.5)");
  return -quantile(spec, alpha);
}

namespace detail {

// E[Z | Z < q] for the standard t; from d/dz [ f(z) (nu + z^2)/(nu - 1) ] = -z f(z)
inline double t_tail_mean_std(double q, double nu, double alpha) {
  return -t_pdf_std(q, nu) * (nu + q * q) / ((nu - 1.0) * alpha);
}

// (1/alpha) * integral_0^alpha Q(p) dp via the substitution p = alpha e^{-u},
// which tames the quantile blow-up at p -> 0.
inline double tail_mean_by_quadrature(const DistributionSpec& spec, double alpha) {
  const double upper = 30.0;  // p down to alpha * e^-30 ~ 1e-14 * alpha
  const double integral = adaptive_simpson(
      [&](double u) {
        const double p = alpha * std::exp(-u);
        return p * quantile(spec, p);
      },
      0.0, upper, 1e-10);
  return integral / alpha;
}

}  // namespace detail

// Signed conditional mean E[X | X < quantile(alpha)].
inline double es_forecast(const DistributionSpec& spec, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::domain_error("es_forecast: alpha outside (0, 0.5)");
  validate(spec);
  switch (spec.kind) {
    case DistKind::Normal: {
      const double q = detail::norm_quantile_std(alpha);
      return spec.mu - spec.sigma * detail::norm_pdf_std(q) / alpha;
    }
    case DistKind::StudentT: {
      const double q = detail::t_quantile_std(alpha, spec.nu);
      return spec.mu + spec.sigma * detail::t_tail_mean_std(q, spec.nu, alpha);
    }
    case DistKind::SkewedStudentT:
      return detail::tail_mean_by_quadrature(spec, alpha);
  }
  throw std::domain_error("es_forecast: unknown kind");
}

// Per-step VaR/ES and the exceedance indicators for one tolerance.
struct RiskSeries {
  double alpha = 0.0;
  std::vector<double> var;           // positive loss units
  std::vector<double> es;            // signed tail-mean returns
  std::vector<std::uint8_t> exceed;  // return[t] < -var[t]
};

inline RiskSeries build_risk_series(std::span<const DistributionSpec> forecasts,
                                    std::span<const double> realized, double alpha) {
  if (forecasts.size() != realized.size())
    throw data_error("build_risk_series: forecast/realized length mismatch");
  RiskSeries rs;
  rs.alpha = alpha;
  rs.var.reserve(forecasts.size());
  rs.es.reserve(forecasts.size());
  rs.exceed.reserve(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double v = var_forecast(forecasts[i], alpha);
    rs.var.push_back(v);
    rs.es.push_back(es_forecast(forecasts[i], alpha));
    rs.exceed.push_back(realized[i] < -v ? 1 : 0);
  }
  return rs;
}

struct KupiecResult {
  double lr = 0.0;
  double p_value = 1.0;
};

// Unconditional coverage LR with the 0 ln 0 = 0 convention; p-value from
// the chi-square survival function with one degree of freedom.
inline KupiecResult kupiec_test(std::size_t exceedances, std::size_t n, double alpha) {
  if (n == 0 || exceedances > n) throw std::domain_error("kupiec_test: invalid counts");
  const double x = static_cast<double>(exceedances);
  const double dn = static_cast<double>(n);
  auto xlogy = [](double a, double y) { return a == 0.0 ? 0.0 : a * std::log(y); };
  const double phat = x / dn;
  const double ll_hat = xlogy(x, phat) + xlogy(dn - x, 1.0 - phat);
  const double ll_null = xlogy(x, alpha) + xlogy(dn - x, 1.0 - alpha);
  KupiecResult res;
  res.lr = 2.0 * (ll_hat - ll_null);
  if (res.lr < 0.0) res.lr = 0.0;  // guards rounding when phat == alpha
  res.p_value = chi2_sf(res.lr, 1.0);
  return res;
}

struct ChristoffersenResult {
  double lr_independence = 0.0;
  double p_independence = 1.0;
  double lr_conditional = 0.0;
  double p_conditional = 1.0;
  bool degenerate = false;  // all-zero or all-one exceedance series
};

// First-order Markov independence LR on the exceedance series; conditional
// coverage adds the Kupiec LR (chi-square, 2 df).
inline ChristoffersenResult christoffersen_test(std::span<const std::uint8_t> exceed,
                                                double alpha) {
  if (exceed.size() < 2) throw data_error("christoffersen_test: series shorter than 2");
  std::size_t n00 = 0, n01 = 0, n10 = 0, n11 = 0, total = 0;
  for (std::size_t t = 1; t < exceed.size(); ++t) {
    const int prev = exceed[t - 1] ? 1 : 0;
    const int cur = exceed[t] ? 1 : 0;
    if (prev == 0 && cur == 0) ++n00;
    if (prev == 0 && cur == 1) ++n01;
    if (prev == 1 && cur == 0) ++n10;
    if (prev == 1 && cur == 1) ++n11;
    total += exceed[t] ? 1 : 0;
  }
  total += exceed[0] ? 1 : 0;
  ChristoffersenResult res;
  auto xlogy = [](double a, double y) { return a == 0.0 ? 0.0 : a * std::log(y); };
  if (total == 0 || total == exceed.size()) {
    res.degenerate = true;
  } else {
    const double d00 = static_cast<double>(n00), d01 = static_cast<double>(n01);
    const double d10 = static_cast<double>(n10), d11 = static_cast<double>(n11);
    const double pi01 = d00 + d01 > 0.0 ? d01 / (d00 + d01) : 0.0;
    const double pi11 = d10 + d11 > 0.0 ? d11 / (d10 + d11) : 0.0;
    const double pi = (d01 + d11) / (d00 + d01 + d10 + d11);
    const double ll1 = xlogy(d00, 1.0 - pi01) + xlogy(d01, pi01) + xlogy(d10, 1.0 - pi11) +
                       xlogy(d11, pi11);
    const double ll0 = xlogy(d00 + d10, 1.0 - pi) + xlogy(d01 + d11, pi);
    res.lr_independence = std::max(0.0, 2.0 * (ll1 - ll0));
    res.p_independence = chi2_sf(res.lr_independence, 1.0);
  }
  const KupiecResult kup = kupiec_test(total, exceed.size(), alpha);
  res.lr_conditional = res.lr_independence + kup.lr;
  res.p_conditional = chi2_sf(res.lr_conditional, 2.0);
  return res;
}

enum class MfVariant { Bootstrap, Sample };

struct McneilFreyResult {
  bool sufficient = false;  // at least 5 exceedance observations
  std::size_t exceedances = 0;
  double mean_residual = 0.0;
  double p_value = 1.0;
};

// Standardized ES residuals U_t = (r_t - ES_t)/sigma_t on exceedance days.
// Null: mean U = 0; one-sided alternative mean U < 0 (ES too optimistic).
inline McneilFreyResult mcneil_frey_test(std::span<const double> returns,
                                         std::span<const double> var_series,
                                         std::span<const double> es_series,
                                         std::span<const double> sigma_series, MfVariant variant,
                                         std::uint64_t seed = 0, std::size_t n_boot = 10000) {
  const std::size_t n = returns.size();
  if (var_series.size() != n || es_series.size() != n || sigma_series.size() != n)
    throw data_error("mcneil_frey_test: series length mismatch");
  std::vector<double> u;
  for (std::size_t t = 0; t < n; ++t) {
    if (returns[t] < -var_series[t]) {
      if (!(sigma_series[t] > 0.0))
        throw std::domain_error("mcneil_frey_test: non-positive sigma on exceedance day");
      u.push_back((returns[t] - es_series[t]) / sigma_series[t]);
    }
  }
  McneilFreyResult res;
  res.exceedances = u.size();
  if (u.size() < 5) return res;  // insufficient data, reported as such
  res.sufficient = true;
  const double m = static_cast<double>(u.size());
  double mean = 0.0;
  for (double v : u) mean += v;
  mean /= m;
  res.mean_residual = mean;
  if (variant == MfVariant::Sample) {
    double ss = 0.0;
    for (double v : u) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (m - 1.0));
    if (sd < 1e-300) {
      res.p_value = mean < 0.0 ? 0.0 : 1.0;
    } else {
      const double tstat = mean / (sd / std::sqrt(m));
      res.p_value = detail::t_cdf_std(tstat, m - 1.0);
    }
    return res;
  }
  // bootstrap: resample centered residuals to build the null distribution
  std::vector<double> centered(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) centered[i] = u[i] - mean;
  Rng rng(seed);
  std::size_t at_or_below = 0;
  for (std::size_t b = 0; b < n_boot; ++b) {
    double bm = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      bm += centered[static_cast<std::size_t>(rng.below(u.size()))];
    bm /= m;
    if (bm <= mean) ++at_or_below;
  }
  res.p_value = static_cast<double>(at_or_below + 1) / static_cast<double>(n_boot + 1);
  return res;
}

// Exceedance counts, test statistics, and p-values for one tolerance.
struct BacktestReport {
  double alpha = 0.0;
  std::size_t n = 0;
  std::size_t exceedances = 0;
  double exceed_pct = 0.0;
  double kupiec_lr = 0.0;
  double kupiec_p = 1.0;
  double christoffersen_ind_p = 1.0;
  double christoffersen_cc_p = 1.0;
  bool christoffersen_degenerate = false;
  bool es_sufficient = false;
  double es_bootstrap_p = 1.0;
  double es_sample_p = 1.0;
};

inline BacktestReport run_backtest(std::span<const DistributionSpec> forecasts,
                                   std::span<const double> realized, double alpha,
                                   std::uint64_t seed = 0) {
  const RiskSeries rs = build_risk_series(forecasts, realized, alpha);
  BacktestReport rep;
  rep.alpha = alpha;
  rep.n = realized.size();
  for (auto e : rs.exceed) rep.exceedances += e;
  rep.exceed_pct = 100.0 * static_cast<double>(rep.exceedances) / static_cast<double>(rep.n);
  const KupiecResult kup = kupiec_test(rep.exceedances, rep.n, alpha);
  rep.kupiec_lr = kup.lr;
  rep.kupiec_p = kup.p_value;
  const ChristoffersenResult chr = christoffersen_test(rs.exceed, alpha);
  rep.christoffersen_ind_p = chr.p_independence;
  rep.christoffersen_cc_p = chr.p_conditional;
  rep.christoffersen_degenerate = chr.degenerate;
  std::vector<double> sigma(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i) sigma[i] = forecasts[i].sigma;
  const auto mf_boot =
      mcneil_frey_test(realized, rs.var, rs.es, sigma, MfVariant::Bootstrap, seed);
  const auto mf_sample =
      mcneil_frey_test(realized, rs.var, rs.es, sigma, MfVariant::Sample, seed);
  rep.es_sufficient = mf_boot.sufficient;
  rep.es_bootstrap_p = mf_boot.p_value;
  rep.es_sample_p = mf_sample.p_value;
  return rep;
}

}  // namespace probcast
