#pragma once

// Shared test utilities: finite-difference oracles, Monte Carlo score
// estimators, and small statistics helpers. Everything here is independent
// of the implementation paths it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "probcast/rng.hpp"

namespace testsupport {

// central difference d/dx f at x
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct GradCheck {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
};

// Compares an analytic gradient against central differences component-wise
// with a relative tolerance and an absolute floor.
inline GradCheck compare_gradients(std::span<const double> analytic,
                                   std::span<const double> numeric, double abs_floor = 1e-8) {
  GradCheck out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), abs_floor});
    const double rel = std::fabs(analytic[i] - numeric[i]) / denom;
    if (rel > out.max_rel_err) {
      out.max_rel_err = rel;
      out.worst_index = i;
    }
  }
  return out;
}

// numeric gradient of a scalar function of a flat vector
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = f(x);
    x[i] = keep - h;
    const double fm = f(x);
    x[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double stddev(std::span<const double> v) { return std::sqrt(variance(v)); }

// CRPS sample estimator E|X - x| - 0.5 E|X - X'| from paired draws.
struct CrpsEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline CrpsEstimate crps_monte_carlo(std::span<const double> draws, double x) {
  const std::size_t pairs = draws.size() / 2;
  std::vector<double> per_pair(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    const double a = draws[2 * i];
    const double b = draws[2 * i + 1];
    per_pair[i] = 0.5 * (std::fabs(a - x) + std::fabs(b - x)) - 0.5 * std::fabs(a - b);
  }
  CrpsEstimate est;
  est.value = mean(per_pair);
  est.std_error = stddev(per_pair) / std::sqrt(static_cast<double>(pairs));
  return est;
}

inline double spearman_rank_correlation(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace testsupport
