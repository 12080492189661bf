#pragma once

// Derivative-free Nelder-Mead simplex minimizer with the standard
// reflection/expansion/contraction/shrink coefficients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace probcast {

struct NelderMeadResult {
  std::vector<double> x;
  double fx = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, double initial_step = 0.25,
                                    double ftol = 1e-10, int max_iter = 4000) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<double>> simplex(dim + 1, x0);
  for (std::size_t i = 0; i < dim; ++i)
    simplex[i + 1][i] += initial_step * (std::fabs(x0[i]) > 1.0 ? std::fabs(x0[i]) : 1.0);
  std::vector<double> fv(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) fv[i] = f(simplex[i]);

  std::vector<std::size_t> order(dim + 1);
  NelderMeadResult res;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fv[a] < fv[b];
    });
    const std::size_t best = order[0], worst = order[dim], second = order[dim - 1];
    if (std::isfinite(fv[best]) && fv[worst] - fv[best] <= ftol * (std::fabs(fv[best]) + ftol)) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    auto along = [&](double coef) {
      std::vector<double> p(dim);
      for (std::size_t j = 0; j < dim; ++j)
        p[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
      return p;
    };
    const std::vector<double> xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fv[best]) {
      const std::vector<double> xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      const std::vector<double> xc = along(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = xc;
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= dim; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < dim; ++j)
            simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= dim; ++i)
    if (fv[i] < fv[best]) best = i;
  res.x = simplex[best];
  res.fx = fv[best];
  res.iterations = iter;
  return res;
}

}  // namespace probcast
