#pragma once

// Proper scoring rules and calibration diagnostics: log predictive score,
// CRPS (closed form for the Normal, probability-space quadrature for the t
// kinds), PIT, and a Kolmogorov-Smirnov uniformity test on the PIT series.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "probcast/distributions.hpp"
#include "probcast/errors.hpp"
#include "probcast/numerics.hpp"

namespace probcast {

inline double lps(const DistributionSpec& forecast, double realized) {
  return -log_pdf(forecast, realized);
}

inline double crps_normal_closed_form(const DistributionSpec& spec, double x) {
  const double z = (x - spec.mu) / spec.sigma;
  const double phi = detail::norm_pdf_std(z);
  const double big_phi = detail::norm_cdf_std(z);
  return spec.sigma * (z * (2.0 * big_phi - 1.0) + 2.0 * phi - 1.0 / std::sqrt(kPi));
}

// CRPS as the probability-space integral of (p - 1{quantile(p) >= x})^2
// dquantile, split at p = F(x) and clipped to [1e-7, 1 - 1e-7].
inline double crps_quadrature(const DistributionSpec& spec, double x) {
  validate(spec);
  constexpr double p_clip = 1e-7;
  constexpr double tol = 1e-8;
  const double pr = cdf(spec, x);
  const double lo = p_clip, hi = 1.0 - p_clip;
  auto dq = [&](double p) { return 1.0 / pdf(spec, quantile(spec, p)); };
  double total = 0.0;
  if (pr > lo)
    total += adaptive_simpson([&](double p) { return p * p * dq(p); }, lo, std::min(pr, hi),
                              0.5 * tol);
  if (pr < hi)
    total += adaptive_simpson([&](double p) { return (1.0 - p) * (1.0 - p) * dq(p); },
                              std::max(pr, lo), hi, 0.5 * tol);
  return total;
}

inline double crps(const DistributionSpec& forecast, double realized) {
  validate(forecast);
  if (forecast.kind == DistKind::Normal) return crps_normal_closed_form(forecast, realized);
  return crps_quadrature(forecast, realized);
}

inline double pit(const DistributionSpec& forecast, double realized) {
  return cdf(forecast, realized);
}

// Asymptotic Kolmogorov distribution Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 101; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12 * std::fabs(sum) || term < 1e-300) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample KS test of the PIT series against U(0,1), with Stephens'
// finite-sample scaling of the asymptotic Kolmogorov p-value.
inline KsResult pit_uniformity_test(std::span<const double> pit_series) {
  const std::size_t n = pit_series.size();
  if (n < 10) throw data_error("pit_uniformity_test: need at least 10 observations");
  std::vector<double> sorted(pit_series.begin(), pit_series.end());
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = sorted[i];
    d = std::max(d, std::max(u - static_cast<double>(i) / dn,
                             static_cast<double>(i + 1) / dn - u));
  }
  const double sn = std::sqrt(dn);
  KsResult res;
  res.statistic = d;
  res.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
  return res;
}

struct ScoreSummary {
  double mean_lps = 0.0;
  double mean_crps = 0.0;
  std::vector<double> pit;
  double pit_statistic = 0.0;
  double pit_p_value = 1.0;
  std::size_t count = 0;
};

inline ScoreSummary score_forecasts(std::span<const DistributionSpec> forecasts,
                                    std::span<const double> realized) {
  if (forecasts.size() != realized.size())
    throw data_error("score_forecasts: forecast/realized length mismatch");
  if (forecasts.empty()) throw data_error("score_forecasts: empty input");
  ScoreSummary s;
  s.count = forecasts.size();
  s.pit.reserve(s.count);
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    s.mean_lps += lps(forecasts[i], realized[i]);
    s.mean_crps += crps(forecasts[i], realized[i]);
    s.pit.push_back(pit(forecasts[i], realized[i]));
  }
  s.mean_lps /= static_cast<double>(s.count);
  s.mean_crps /= static_cast<double>(s.count);
  const KsResult ks = pit_uniformity_test(s.pit);
  s.pit_statistic = ks.statistic;
  s.pit_p_value = ks.p_value;
  return s;
}

}  // namespace probcast
