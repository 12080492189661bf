#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "probcast/distributions.hpp"
#include "probcast/nll_losses.hpp"
#include "probcast/rng.hpp"
#include "support/test_support.hpp"

using namespace probcast;

namespace {

// raw batch generator on a moderate range so links stay well-conditioned
std::vector<double> random_raw(std::size_t n, int width, Rng& rng) {
  std::vector<double> raw(n * width);
  for (auto& v : raw) v = 2.0 * rng.uniform() - 1.0;
  return raw;
}

std::vector<double> random_returns(std::size_t n, Rng& rng) {
  std::vector<double> r(n);
  for (auto& v : r) v = 3.0 * (2.0 * rng.uniform() - 1.0);
  return r;
}

double loss_of(DistKind kind, const std::vector<double>& raw, const std::vector<double>& ret) {
  return nll_loss(kind, raw, ret).loss;
}

void gradient_check(DistKind kind, std::uint64_t seed, std::size_t n, double rel_tol) {
  Rng rng(seed);
  const int width = param_count(kind);
  std::vector<double> raw = random_raw(n, width, rng);
  const std::vector<double> ret = random_returns(n, rng);
  const NllResult res = nll_loss(kind, raw, ret);
  const auto numeric = testsupport::numeric_gradient(
      [&](const std::vector<double>& x) { return loss_of(kind, x, ret); }, raw, 1e-6);
  const auto cmp = testsupport::compare_gradients(res.grad, numeric);
  INFO("kind " << param_count(kind) << " seed " << seed << " worst at " << cmp.worst_index);
  REQUIRE(cmp.max_rel_err < rel_tol);
}

}  // namespace

TEST_CASE("link_transform fixed points") {
  const LinkedParams p = link_transform({0.0, 0.0, 0.0, 0.0}, DistKind::SkewedStudentT);
  REQUIRE(p.sigma == Catch::Approx(std::log(2.0) + 1e-6).epsilon(1e-12));
  REQUIRE(p.nu == Catch::Approx(2.0 + std::log(2.0)).epsilon(1e-12));
  REQUIRE(p.xi == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(p.mu == 0.0);
}

TEST_CASE("link_transform is monotone and invertible on a grid") {
  double prev_sigma = 0.0, prev_nu = 2.0, prev_xi = 0.0;
  for (double v = -6.0; v <= 6.0; v += 0.5) {
    const LinkedParams p = link_transform({v, v, v, v}, DistKind::SkewedStudentT);
    REQUIRE(p.sigma > prev_sigma);
    REQUIRE(p.nu > prev_nu);
    REQUIRE(p.xi > prev_xi);
    prev_sigma = p.sigma;
    prev_nu = p.nu;
    prev_xi = p.xi;
  }
}

TEST_CASE("link_transform clamps extreme skew outputs and counts them") {
  const auto before = link_clamp_count();
  const LinkedParams p = link_transform({0.0, 0.0, 0.0, 90.0}, DistKind::SkewedStudentT);
  REQUIRE(p.xi == Catch::Approx(std::exp(30.0)).epsilon(1e-12));
  REQUIRE(link_clamp_count() == before + 1);
}

TEST_CASE("normal loss at the mode") {
  // raw chosen so that mu = 0, sigma = 1
  const double s_for_unit = std::log(std::expm1(1.0 - 1e-6));
  const std::vector<double> raw = {0.0, s_for_unit};
  const std::vector<double> ret = {0.0};
  const NllResult res = nll_normal(raw, ret);
  REQUIRE(res.loss == Catch::Approx(0.9189385332046728).epsilon(1e-10));
}

TEST_CASE("normal loss gradient vanishes at the scale stationary point") {
  // at r - mu = sigma the d(loss)/d(sigma) term is zero
  const double s_for_unit = std::log(std::expm1(1.0 - 1e-6));
  std::vector<double> raw = {0.0, s_for_unit};
  const std::vector<double> ret = {1.0};
  const NllResult res = nll_normal(raw, ret);
  const double numeric = testsupport::central_diff(
      [&](double s) {
        std::vector<double> r2 = {0.0, s};
        return nll_normal(r2, ret).loss;
      },
      s_for_unit, 1e-6);
  REQUIRE(numeric == Catch::Approx(0.0).margin(1e-6));
  REQUIRE(res.grad[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("losses equal minus mean log_pdf at the linked parameters") {
  Rng rng(123);
  for (DistKind kind : {DistKind::Normal, DistKind::StudentT, DistKind::SkewedStudentT}) {
    const int width = param_count(kind);
    const std::size_t n = 40;
    const auto raw = random_raw(n, width, rng);
    const auto ret = random_returns(n, rng);
    const NllResult res = nll_loss(kind, raw, ret);
    double expect = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      RawParamVector rv{raw[i * width], raw[i * width + 1], width > 2 ? raw[i * width + 2] : 0.0,
                        width > 3 ? raw[i * width + 3] : 0.0};
      expect -= log_pdf(to_spec(link_transform(rv, kind), kind), ret[i]);
    }
    expect /= static_cast<double>(n);
    REQUIRE(res.loss == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("student loss approaches normal loss as nu grows") {
  // d raw ~ 34 puts nu near 2 + 1e6... softplus(d) = d for large d
  const double d_big = 1.0e6;
  Rng rng(7);
  const std::size_t n = 32;
  std::vector<double> raw_n = random_raw(n, 2, rng);
  const auto ret = random_returns(n, rng);
  std::vector<double> raw_t(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    raw_t[i * 3 + 0] = raw_n[i * 2 + 0];
    raw_t[i * 3 + 1] = raw_n[i * 2 + 1];
    raw_t[i * 3 + 2] = d_big;
  }
  REQUIRE(nll_student(raw_t, ret).loss ==
          Catch::Approx(nll_normal(raw_n, ret).loss).margin(1e-4));
}

TEST_CASE("student loss location gradient vanishes at r = mu") {
  const std::vector<double> raw = {0.4, 0.1, 0.3};
  const std::vector<double> ret = {0.4};
  const NllResult res = nll_student(raw, ret);
  REQUIRE(res.grad[0] == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("skewed loss reduces to student at xi = 1") {
  Rng rng(99);
  const std::size_t n = 48;
  const auto raw_t = random_raw(n, 3, rng);
  const auto ret = random_returns(n, rng);
  std::vector<double> raw_sk(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    raw_sk[i * 4 + 0] = raw_t[i * 3 + 0];
    raw_sk[i * 4 + 1] = raw_t[i * 3 + 1];
    raw_sk[i * 4 + 2] = raw_t[i * 3 + 2];
    raw_sk[i * 4 + 3] = 0.0;
  }
  REQUIRE(nll_skewt(raw_sk, ret).loss ==
          Catch::Approx(nll_student(raw_t, ret).loss).margin(1e-12));
}

TEST_CASE("gradients match central finite differences (seeded batches)") {
  gradient_check(DistKind::Normal, 7, 64, 1e-5);
  gradient_check(DistKind::StudentT, 7, 64, 1e-5);
  gradient_check(DistKind::SkewedStudentT, 11, 64, 1e-5);
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const DistKind kind = static_cast<DistKind>(seed % 3);
    gradient_check(kind, seed, 16, 1e-5);
  }
}

TEST_CASE("left-skewed data drives xi downward from 1") {
  // all returns below mu: descending the loss must lower xi, so the raw
  // skew gradient at xi = 1 is positive (finite difference confirms)
  const std::size_t n = 16;
  std::vector<double> raw(n * 4, 0.0);
  std::vector<double> ret(n);
  for (std::size_t i = 0; i < n; ++i) ret[i] = -0.3 - 0.1 * static_cast<double>(i % 5);
  const NllResult res = nll_skewt(raw, ret);
  double grad_k_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) grad_k_total += res.grad[i * 4 + 3];
  const double numeric = testsupport::central_diff(
      [&](double k) {
        std::vector<double> r2 = raw;
        for (std::size_t i = 0; i < n; ++i) r2[i * 4 + 3] = k;
        return nll_skewt(r2, ret).loss;
      },
      0.0, 1e-6);
  REQUIRE(numeric > 0.0);
  REQUIRE(grad_k_total == Catch::Approx(numeric).epsilon(1e-5));
}

TEST_CASE("loss is invariant under batch permutation and concatenation") {
  Rng rng(2024);
  const std::size_t n = 30;
  const auto raw = random_raw(n, 4, rng);
  const auto ret = random_returns(n, rng);
  const double full = nll_skewt(raw, ret).loss;

  // permuted
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng shuffle_rng(5);
  shuffle_rng.shuffle(order.data(), order.size());
  std::vector<double> raw_p(raw.size());
  std::vector<double> ret_p(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(raw.data() + order[i] * 4, 4, raw_p.data() + i * 4);
    ret_p[i] = ret[order[i]];
  }
  REQUIRE(nll_skewt(raw_p, ret_p).loss == Catch::Approx(full).margin(1e-12));

  // size-weighted mean of sub-batch losses
  const std::size_t cut = 12;
  const double a =
      nll_skewt(std::span(raw.data(), cut * 4), std::span(ret.data(), cut)).loss;
  const double b = nll_skewt(std::span(raw.data() + cut * 4, (n - cut) * 4),
                             std::span(ret.data() + cut, n - cut))
                       .loss;
  const double weighted =
      (a * static_cast<double>(cut) + b * static_cast<double>(n - cut)) / static_cast<double>(n);
  REQUIRE(weighted == Catch::Approx(full).margin(1e-12));
}

TEST_CASE("batch size mismatch and empty batches are rejected") {
  const std::vector<double> raw = {0.0, 0.0};
  const std::vector<double> two = {0.1, 0.2};
  REQUIRE_THROWS_AS(nll_normal(raw, two), std::domain_error);
  REQUIRE_THROWS_AS(nll_normal({}, {}), std::domain_error);
}
