#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "eqd/fit.hpp"
#include "eqd/gpd.hpp"
#include "eqd/rng.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using eqd::GpdParams;

namespace {

std::vector<double> draw(std::size_t n, double sigma, double xi, std::uint64_t seed) {
  eqd::Stream rng(seed);
  return eqd::gpd_sample(n, GpdParams(sigma, xi), rng);
}

}  // namespace

TEST_CASE("negative log-likelihood reference values", "[fit]") {
  CHECK_THAT(eqd::neg_log_likelihood(GpdParams(1.0, 0.0), std::vector<double>{1.0}), WithinAbs(1.0, 1e-15));
  CHECK(eqd::neg_log_likelihood(GpdParams(0.5, -0.3), std::vector<double>{2.0}) ==
        std::numeric_limits<double>::infinity());
  const std::vector<double> y{0.2, 0.7, 1.5};
  const GpdParams p(0.5, 0.1);
  double sum = 0.0;
  for (double v : y) sum -= eqd::gpd_log_density(v, p);
  CHECK_THAT(eqd::neg_log_likelihood(p, y), WithinRel(sum, 1e-14));
  CHECK_THAT(eqd::neg_log_likelihood(p, y), WithinAbs(2.6793040986191049237, 1e-13));
  CHECK_THROWS_AS(eqd::neg_log_likelihood(p, std::vector<double>{0.0}), eqd::InputError);
}

TEST_CASE("maximum likelihood recovers the generating parameters", "[fit]") {
  const auto y = draw(10000, 0.5, 0.1, 11);
  for (auto opt : {eqd::Optimizer::profile, eqd::Optimizer::simplex}) {
    eqd::FitOptions fo;
    fo.optimizer = opt;
    const auto fit = eqd::fit_gpd(y, fo);
    REQUIRE(fit.usable());
    CHECK_THAT(fit.params.scale(), WithinAbs(0.5, 0.05));
    CHECK_THAT(fit.params.shape(), WithinAbs(0.1, 0.05));
    CHECK_THAT(fit.neg_log_lik, WithinRel(eqd::neg_log_likelihood(fit.params, y), 1e-10));
  }
}

TEST_CASE("score vanishes at the optimum", "[fit][property]") {
  for (double xi : {-0.3, -0.1, 0.0, 0.2, 0.5}) {
    const auto y = draw(800, 1.3, xi, 100 + static_cast<std::uint64_t>(10 * (xi + 1)));
    const auto fit = eqd::fit_gpd(y);
    REQUIRE(fit.usable());
    const double s = fit.params.scale(), k = fit.params.shape();
    const double h = 1e-5;
    auto f = [&](double a, double b) { return eqd::neg_log_likelihood(GpdParams(a, b), y); };
    const double gs = (f(s * (1 + h), k) - f(s * (1 - h), k)) / (2 * s * h);
    const double gk = (f(s, k + h) - f(s, k - h)) / (2 * h);
    CHECK(std::hypot(gs * s, gk) < 1e-3 * (1.0 + std::abs(fit.neg_log_lik)));
  }
}

TEST_CASE("fits are scale equivariant", "[fit][property]") {
  const auto y = draw(2000, 0.8, 0.15, 5);
  const auto base = eqd::fit_gpd(y);
  for (double c : {0.01, 3.0, 250.0}) {
    std::vector<double> z(y);
    for (auto& v : z) v *= c;
    const auto fit = eqd::fit_gpd(z);
    CHECK_THAT(fit.params.scale(), WithinRel(c * base.params.scale(), 1e-6));
    CHECK_THAT(fit.params.shape(), WithinAbs(base.params.shape(), 1e-6));
  }
}

TEST_CASE("profile and simplex routes agree", "[fit]") {
  eqd::FitOptions simplex;
  simplex.optimizer = eqd::Optimizer::simplex;
  std::uint64_t seed = 1;
  for (double xi : {-0.45, -0.2, 0.0, 0.1, 0.6}) {
    for (std::size_t n : {15u, 60u, 500u}) {
      const auto y = draw(n, 2.0, xi, seed++);
      const auto a = eqd::fit_gpd(y);
      const auto b = eqd::fit_gpd(y, simplex);
      REQUIRE(a.usable());
      REQUIRE(b.usable());
      // Same optimum; the profile route is never worse.
      CHECK(a.neg_log_lik <= b.neg_log_lik + 1e-7 * (1 + std::abs(b.neg_log_lik)));
      if (!a.at_boundary && !b.at_boundary) {
        CHECK_THAT(a.params.shape(), WithinAbs(b.params.shape(), 1e-4));
        CHECK_THAT(a.params.scale(), WithinRel(b.params.scale(), 1e-4));
      }
    }
  }
}

TEST_CASE("weighted fit equals the fit to the expanded sample", "[fit]") {
  const std::vector<double> v{0.1, 0.3, 0.35, 0.9, 1.7, 2.4, 4.0};
  const std::vector<double> w{2, 1, 3, 1, 2, 1, 2};
  std::vector<double> expanded;
  for (std::size_t i = 0; i < v.size(); ++i) expanded.insert(expanded.end(), static_cast<std::size_t>(w[i]), v[i]);
  const auto a = eqd::fit_gpd_weighted(v, w);
  const auto b = eqd::fit_gpd(expanded);
  CHECK_THAT(a.params.shape(), WithinAbs(b.params.shape(), 1e-12));
  CHECK_THAT(a.params.scale(), WithinRel(b.params.scale(), 1e-12));
  CHECK_THAT(a.neg_log_lik, WithinRel(b.neg_log_lik, 1e-12));
}

TEST_CASE("degenerate and short samples do not crash", "[fit]") {
  const std::vector<double> same(30, 2.5);
  const auto fit = eqd::fit_gpd(same);
  CHECK((fit.at_boundary || !fit.converged));
  CHECK_THROWS_AS(eqd::fit_gpd(std::vector<double>(5, 1.0)), eqd::InfeasibleError);
  CHECK_THROWS_AS(eqd::fit_gpd(std::vector<double>{1.0, -1.0, 2.0}), eqd::InputError);
}

TEST_CASE("uniform-like excesses fit near the lower shape edge", "[fit]") {
  std::vector<double> y(200);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i + 0.5) / y.size();
  const auto fit = eqd::fit_gpd(y);
  REQUIRE(fit.usable());
  CHECK(fit.params.shape() < -0.8);
  CHECK(fit.params.shape() > eqd::kShapeLower);
  CHECK(fit.params.upper_endpoint() >= y.back());
}

TEST_CASE("threshold model", "[fit]") {
  std::vector<double> data;
  for (int i = 0; i < 40; ++i) data.push_back(1.0 + 0.1 * i);
  const auto all = eqd::fit_threshold_model(data, 0.5);
  CHECK(all.exceed_prob == 1.0);
  CHECK(all.n_excess == 40);
  const auto half = eqd::fit_threshold_model(data, 2.95);
  CHECK(half.n_excess == 20);
  CHECK(half.exceed_prob == 0.5);
  CHECK_THROWS_AS(eqd::fit_threshold_model(data, 100.0), eqd::InfeasibleError);
  CHECK_THROWS_AS(eqd::fit_threshold_model(std::vector<double>{}, 0.0), eqd::InputError);
  // Values equal to the threshold are not excesses.
  CHECK(eqd::excesses_over(std::vector<double>{1.0, 2.0, 3.0}, 2.0) == std::vector<double>{1.0});
}

TEST_CASE("unconditional quantile", "[fit]") {
  eqd::ThresholdModel m;
  m.threshold = 1.0;
  m.exceed_prob = 5.0 / 6.0;
  m.params = GpdParams(0.5, 0.1);
  CHECK_THAT(eqd::unconditional_quantile(m, 1.0 / 1200), WithinAbs(5.9763115748443980068, 1e-12));
  CHECK_THAT(eqd::unconditional_quantile(m, m.exceed_prob * (1 - 1e-12)), WithinAbs(1.0, 1e-9));
  double prev = std::numeric_limits<double>::infinity();
  for (double p = 1e-6; p < 0.8; p *= 1.5) {
    const double q = eqd::unconditional_quantile(m, p);
    CHECK(q < prev);
    prev = q;
  }
  CHECK_THROWS_AS(eqd::unconditional_quantile(m, 0.9), eqd::InfeasibleError);
  CHECK_THROWS_AS(eqd::unconditional_quantile(m, 0.0), eqd::InputError);
}
