#pragma once

// Adaptive quadrature and bracketed root finding shared by the
// distribution, scoring, and risk layers.

#include <cmath>
#include <functional>
#include <limits>

#include "probcast/errors.hpp"

namespace probcast {

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth, double& unresolved) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // accept on tolerance, or once the estimate sits at rounding-noise level
  if (std::fabs(delta) <= 15.0 * tol ||
      std::fabs(delta) <= 8e-15 * (std::fabs(left) + std::fabs(right)))
    return left + right + delta / 15.0;
  if (depth <= 0) {
    // out of depth; book the leftover estimate so the caller can decide
    // whether the accumulated error still meets the contract
    unresolved += std::fabs(delta);
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, unresolved) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, unresolved);
}

}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
// Throws numeric_error when the accumulated unresolved error of
// depth-exhausted subintervals exceeds tol.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 48) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double unresolved = 0.0;
  const double result =
      detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, unresolved);
  if (unresolved > tol)
    throw numeric_error("adaptive_simpson: unresolved error " + std::to_string(unresolved) +
                        " exceeds tolerance");
  return result;
}

// Bisection on a bracketing interval [lo, hi] with f(lo), f(hi) of opposite
// sign. Stops when the interval width drops below xtol.
template <typename F>
double bisect(const F& f, double lo, double hi, double xtol, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw numeric_error("bisect: endpoints do not bracket a root");
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid == 0.0 || hi - lo < xtol) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Newton iteration safeguarded by a bracket: any step leaving [lo, hi]
// falls back to bisection. f must be monotone increasing on the bracket.
template <typename F, typename DF>
double bracketed_newton(const F& f, const DF& df, double x0, double lo, double hi, double ftol,
                        int max_iter = 100) {
  double x = x0;
  if (x < lo || x > hi) x = 0.5 * (lo + hi);
  for (int i = 0; i < max_iter; ++i) {
    const double fx = f(x);
    if (std::fabs(fx) < ftol) return x;
    if (fx > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double d = df(x);
    double next = d > 0.0 ? x - fx / d : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15 * (std::fabs(x) + 1.0)) return next;
    x = next;
  }
  throw numeric_error("bracketed_newton: failed to converge");
}

}  // namespace probcast
