#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "probcast/distributions.hpp"
#include "probcast/numerics.hpp"
#include "support/test_support.hpp"

using namespace probcast;

namespace {

// integral of f over the whole real line through the substitution
// x = mu + s * tan(pi*(u - 1/2)), which keeps heavy tails inside (0,1)
double integrate_real_line(const std::function<double(double)>& f, double mu, double s,
                           double tol = 1e-9) {
  return adaptive_simpson(
      [&](double u) {
        const double a = kPi * (u - 0.5);
        const double t = std::tan(a);
        const double x = mu + s * t;
        const double jac = s * kPi * (1.0 + t * t);
        return f(x) * jac;
      },
      1e-12, 1.0 - 1e-12, tol);
}

double integrate_left_tail(const std::function<double(double)>& f, double upto, double s,
                           double tol = 1e-10) {
  // map x = upto - s*tan(pi*u/2) for u in (0,1)
  return adaptive_simpson(
      [&](double u) {
        const double a = 0.5 * kPi * u;
        const double t = std::tan(a);
        const double x = upto - s * t;
        const double jac = s * 0.5 * kPi * (1.0 + t * t);
        return f(x) * jac;
      },
      1e-12, 1.0 - 1e-12, tol);
}

// as integrate_real_line but with a sine endpoint compression on top, for
// integrands whose transformed image is endpoint-singular (x^2 * pdf with
// nu close to 2). The compressed integrand tends to a constant at the
// endpoints, so the clipped [delta, 1-delta] range is patched with flat
// endpoint corrections.
double integrate_real_line_strong(const std::function<double(double)>& f, double mu, double s,
                                  double tol = 1e-9) {
  auto g = [&](double w) {
    const double u = 0.5 + 0.5 * std::sin(kPi * (w - 0.5));
    const double du = 0.5 * kPi * std::cos(kPi * (w - 0.5));
    const double a = kPi * (u - 0.5);
    const double t = std::tan(a);
    const double x = mu + s * t;
    const double jac = s * kPi * (1.0 + t * t);
    return f(x) * jac * du;
  };
  const double delta = 1e-6;
  return adaptive_simpson(g, delta, 1.0 - delta, tol) +
         delta * (g(delta) + g(1.0 - delta));
}

}  // namespace

TEST_CASE("log_pdf examples") {
  REQUIRE(log_pdf(DistributionSpec::normal(0, 1), 0.0) ==
          Catch::Approx(-0.9189385332046728).epsilon(1e-12));
  // Cauchy special case, evaluated below the production nu floor through
  // the unchecked entry point
  const DistributionSpec cauchy{DistKind::StudentT, 0.0, 1.0, 1.0, 0.0};
  REQUIRE(detail::log_pdf_unchecked(cauchy, 0.0) ==
          Catch::Approx(std::log(1.0 / kPi)).epsilon(1e-12));
  // xi = 1 reduces the skewed t to the symmetric t
  REQUIRE(log_pdf(DistributionSpec::skewed_student_t(0, 1, 5, 1), 0.7) ==
          Catch::Approx(log_pdf(DistributionSpec::student_t(0, 1, 5), 0.7)).epsilon(1e-14));
}

TEST_CASE("log_pdf rejects invalid parameters") {
  REQUIRE_THROWS_AS(log_pdf(DistributionSpec::normal(0, -1), 0.0), std::domain_error);
  REQUIRE_THROWS_AS(log_pdf(DistributionSpec::student_t(0, 1, 2.0), 0.0), std::domain_error);
  REQUIRE_THROWS_AS(log_pdf(DistributionSpec::skewed_student_t(0, 1, 5, -2), 0.0),
                    std::domain_error);
  REQUIRE_THROWS_AS(log_pdf(DistributionSpec::normal(std::nan(""), 1), 0.0), std::domain_error);
  REQUIRE_THROWS_AS(log_pdf(DistributionSpec::normal(0, 1), std::nan("")), std::domain_error);
}

TEST_CASE("cdf examples") {
  REQUIRE(cdf(DistributionSpec::normal(0, 1), 0.0) == Catch::Approx(0.5).margin(1e-14));
  // mass split of the skewed t at the mode: 1/(1+xi^2)
  const DistributionSpec sk = DistributionSpec::skewed_student_t(0, 1, 5, 2);
  REQUIRE(cdf(sk, 0.0) == Catch::Approx(0.2).margin(1e-12));
  // oracle: adaptive quadrature of the left branch of the density
  const double mass =
      integrate_left_tail([&](double x) { return pdf(sk, x); }, 0.0, 2.0, 1e-11);
  REQUIRE(mass == Catch::Approx(0.2).margin(1e-8));
  // symmetry of the t cdf
  const DistributionSpec t5 = DistributionSpec::student_t(0, 1, 5);
  for (double x : {0.3, 1.0, 2.7, 5.0})
    REQUIRE(cdf(t5, -x) == Catch::Approx(1.0 - cdf(t5, x)).margin(1e-14));
}

TEST_CASE("quantile examples") {
  // bisection on the implemented cdf as the independent inverse
  const DistributionSpec n01 = DistributionSpec::normal(0, 1);
  const double q05 = quantile(n01, 0.05);
  REQUIRE(q05 == Catch::Approx(-1.6449).margin(1e-4));
  const double bis = bisect([&](double x) { return cdf(n01, x) - 0.05; }, -10.0, 0.0, 1e-12);
  REQUIRE(q05 == Catch::Approx(bis).margin(1e-9));

  REQUIRE(quantile(DistributionSpec::normal(3.25, 0.7), 0.5) ==
          Catch::Approx(3.25).margin(1e-12));

  const double split = 1.0 / (1.0 + 1.5 * 1.5);
  REQUIRE(quantile(DistributionSpec::skewed_student_t(0, 1, 8, 1.5), split) ==
          Catch::Approx(0.0).margin(1e-10));

  REQUIRE_THROWS_AS(quantile(n01, 0.0), std::domain_error);
  REQUIRE_THROWS_AS(quantile(n01, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(quantile(n01, -0.2), std::domain_error);
}

TEST_CASE("quantile is strictly increasing in p") {
  const DistributionSpec sk = DistributionSpec::skewed_student_t(0.1, 1.3, 4.5, 0.8);
  double prev = -1e300;
  for (double p = 0.02; p < 1.0; p += 0.02) {
    const double q = quantile(sk, p);
    REQUIRE(q > prev);
    prev = q;
  }
}

TEST_CASE("cdf and quantile are mutual inverses") {
  const std::vector<DistributionSpec> specs = {
      DistributionSpec::normal(0.3, 2.0),
      DistributionSpec::student_t(-0.5, 1.2, 2.5),
      DistributionSpec::student_t(0.0, 1.0, 30.0),
      DistributionSpec::skewed_student_t(0.0, 1.0, 5.0, 0.5),
      DistributionSpec::skewed_student_t(1.0, 0.6, 2.5, 2.0),
  };
  for (const auto& spec : specs)
    for (double p : {0.001, 0.01, 0.05, 0.5, 0.95, 0.99, 0.999})
      REQUIRE(cdf(spec, quantile(spec, p)) == Catch::Approx(p).margin(1e-10));
}

TEST_CASE("densities normalize to one by quadrature") {
  std::vector<DistributionSpec> specs = {DistributionSpec::normal(0.0, 1.0),
                                         DistributionSpec::normal(1.5, 0.3)};
  for (double nu : {2.5, 5.0, 30.0}) {
    specs.push_back(DistributionSpec::student_t(0.0, 1.0, nu));
    for (double xi : {0.5, 1.0, 2.0})
      specs.push_back(DistributionSpec::skewed_student_t(0.0, 1.0, nu, xi));
  }
  for (const auto& spec : specs) {
    const double total = integrate_real_line([&](double x) { return pdf(spec, x); }, spec.mu,
                                             8.0 * spec.sigma, 1e-9);
    INFO("kind " << kind_name(spec.kind) << " nu " << spec.nu << " xi " << spec.xi);
    REQUIRE(total == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("reduction chain: skewed t to t to normal") {
  double worst_sk = 0.0;
  for (double x = -8.0; x <= 8.0; x += 0.25)
    for (double nu : {2.5, 5.0, 30.0}) {
      const double a = log_pdf(DistributionSpec::skewed_student_t(0.2, 1.1, nu, 1.0), x);
      const double b = log_pdf(DistributionSpec::student_t(0.2, 1.1, nu), x);
      worst_sk = std::max(worst_sk, std::fabs(a - b));
    }
  REQUIRE(worst_sk < 1e-12);

  // the genuine t/normal log-density gap is z^4/(4 nu) + O(z^2/nu), so the
  // 1e-4 agreement holds on |z| <= 4 at nu = 1e6
  double worst_norm = 0.0;
  for (double x = -4.0; x <= 4.0; x += 0.125) {
    const double c = log_pdf(DistributionSpec::student_t(0.0, 1.0, 1e6), x);
    const double d = log_pdf(DistributionSpec::normal(0.0, 1.0), x);
    worst_norm = std::max(worst_norm, std::fabs(c - d));
  }
  REQUIRE(worst_norm < 1e-4);
}

TEST_CASE("mass split holds across xi") {
  for (double xi : {0.4, 0.8, 1.0, 1.7, 3.0})
    for (double nu : {2.5, 7.0})
      REQUIRE(cdf(DistributionSpec::skewed_student_t(-0.7, 2.3, nu, xi), -0.7) ==
              Catch::Approx(1.0 / (1.0 + xi * xi)).margin(1e-10));
}

TEST_CASE("skewt_moments examples") {
  const SkewTMoments sym = skewt_moments(1.0, 5.0, 1.0);
  REQUIRE(sym.phi == Catch::Approx(0.0).margin(1e-14));
  REQUIRE(sym.variance == Catch::Approx(5.0 / 3.0).epsilon(1e-12));

  // scale equivariance
  const SkewTMoments base = skewt_moments(1.0, 6.0, 1.5);
  const SkewTMoments doubled = skewt_moments(2.0, 6.0, 1.5);
  REQUIRE(doubled.mean == Catch::Approx(2.0 * base.mean).epsilon(1e-12));
  REQUIRE(doubled.variance == Catch::Approx(4.0 * base.variance).epsilon(1e-12));

  REQUIRE_THROWS_AS(skewt_moments(1.0, 2.0, 1.5), std::domain_error);
  REQUIRE_THROWS_AS(skewt_moments(-1.0, 5.0, 1.5), std::domain_error);
}

TEST_CASE("skewt_moments match 1e7-draw Monte Carlo") {
  struct Point {
    double nu, xi;
  };
  // nu > 4 keeps the sample-variance standard error finite (the fourth
  // moment is infinite below that); the nu = 2.5 grid points are covered
  // by the quadrature oracle below instead
  const Point grid[] = {{6.0, 1.5},  {5.0, 0.5}, {5.0, 1.0}, {5.0, 2.0},
                        {30.0, 0.5}, {30.0, 1.0}, {30.0, 2.0}, {9.0, 1.0}};
  const std::size_t n = 10'000'000;
  std::uint64_t seed = 977;
  for (const auto& pt : grid) {
    const auto draws = sample(DistributionSpec::skewed_student_t(0, 1, pt.nu, pt.xi), n, seed++);
    const SkewTMoments m = skewt_moments(1.0, pt.nu, pt.xi);
    const double mc_mean = testsupport::mean(draws);
    const double mc_var = testsupport::variance(draws);
    const double se_mean = std::sqrt(mc_var / static_cast<double>(n));
    // standard error of the sample variance from the sample fourth moment
    double m4 = 0.0;
    for (double x : draws) {
      const double d = x - mc_mean;
      m4 += d * d * d * d;
    }
    m4 /= static_cast<double>(n);
    const double se_var = std::sqrt((m4 - mc_var * mc_var) / static_cast<double>(n));
    INFO("nu " << pt.nu << " xi " << pt.xi);
    REQUIRE(std::fabs(m.mean - mc_mean) < 3.0 * se_mean);
    REQUIRE(std::fabs(m.variance - mc_var) < 3.0 * se_var);
  }
}

TEST_CASE("moments match quadrature for heavy tails") {
  for (double xi : {0.5, 1.0, 2.0}) {
    const DistributionSpec spec = DistributionSpec::skewed_student_t(0, 1, 2.5, xi);
    const SkewTMoments m = skewt_moments(1.0, 2.5, xi);
    const double mean =
        integrate_real_line([&](double x) { return x * pdf(spec, x); }, 0.0, 8.0, 1e-10);
    const double second =
        integrate_real_line_strong([&](double x) { return x * x * pdf(spec, x); }, 0.0, 8.0,
                                   1e-8);
    REQUIRE(mean == Catch::Approx(m.mean).margin(2e-6));
    REQUIRE(second - mean * mean == Catch::Approx(m.variance).margin(2e-4));
  }
}

TEST_CASE("sampler sanity and determinism") {
  const auto normal_draws = sample(DistributionSpec::normal(0, 1), 1'000'000, 1);
  REQUIRE(std::fabs(testsupport::mean(normal_draws)) < 0.004);

  const auto sk = sample(DistributionSpec::skewed_student_t(0, 1, 5, 2), 1'000'000, 2);
  std::size_t below = 0;
  for (double x : sk)
    if (x < 0.0) ++below;
  REQUIRE(std::fabs(static_cast<double>(below) / 1e6 - 0.2) < 0.0015);

  const auto again = sample(DistributionSpec::skewed_student_t(0, 1, 5, 2), 1'000'000, 2);
  REQUIRE(sk == again);

  REQUIRE_THROWS_AS(sample(DistributionSpec::normal(0, 1), 0, 1), std::domain_error);
}

TEST_CASE("empirical cdf converges to cdf") {
  const DistributionSpec spec = DistributionSpec::skewed_student_t(0.2, 1.1, 4.0, 0.7);
  auto draws = sample(spec, 100'000, 31);
  std::sort(draws.begin(), draws.end());
  double d = 0.0;
  const double n = static_cast<double>(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double u = cdf(spec, draws[i]);
    d = std::max(d, std::max(u - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - u));
  }
  REQUIRE(d < 0.006);  // 1.36/sqrt(n) is 0.0043 at the 95% level
}
