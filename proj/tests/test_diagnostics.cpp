#include "catch_amalgamated.hpp"

#include <cmath>
#include <vector>

#include "eqd/diagnostics.hpp"
#include "eqd/simcases.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> case_sample(eqd::CaseId id, std::uint64_t seed) {
  eqd::Stream rng(seed);
  return eqd::simulate_case(eqd::CaseSpec::make(id), rng);
}

}  // namespace

TEST_CASE("parameter stability rows", "[diagnostics]") {
  const auto x = case_sample(eqd::CaseId::case1, 41);
  const auto grid = eqd::quantile_grid(x, eqd::GridSpec::parse("0(10)90"));
  eqd::BootstrapOptions o;
  o.seed = 3;
  const auto c = eqd::parameter_stability(x, grid, 30, 0.95, o);
  CHECK(c.rows.size() + c.skipped.size() == grid.size());
  CHECK(c.rows.size() == grid.size());
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    const auto& r = c.rows[i];
    CHECK(r.threshold == grid[i]);
    CHECK(r.ci_lo <= r.xi_hat);
    CHECK(r.xi_hat <= r.ci_hi);
    const auto m = eqd::fit_threshold_model(x, grid[i]);
    CHECK(r.n_excess == m.n_excess);
    CHECK_THAT(r.xi_hat, WithinAbs(m.params.shape(), 1e-12));
  }
  for (std::size_t i = 1; i < c.rows.size(); ++i) CHECK(c.rows[i].n_excess < c.rows[i - 1].n_excess);

  // Too-high candidates are reported as skipped.
  const auto s = eqd::parameter_stability(x, eqd::CandidateGrid({1.0, 1e6}), 10, 0.9, o);
  CHECK(s.rows.size() == 1);
  REQUIRE(s.skipped.size() == 1);
  CHECK(s.skipped[0].threshold == 1e6);

  const auto again = eqd::parameter_stability(x, grid, 30, 0.95, o);
  for (std::size_t i = 0; i < c.rows.size(); ++i) CHECK(again.rows[i].ci_lo == c.rows[i].ci_lo);
}

TEST_CASE("qq data", "[diagnostics]") {
  eqd::Stream rng(5);
  const eqd::GpdParams p(0.5, 0.1);
  const auto y = eqd::gpd_sample(150, p, rng);
  const auto rows = eqd::qq_data(p, y, 200, 0.95, 11, 1);
  REQUIRE(rows.size() == 150);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    CHECK_THAT(r.plotting_prob, WithinRel((i + 1) / 151.0, 1e-15));
    CHECK(r.tol_lo <= r.tol_hi);
    if (i > 0) {
      CHECK(r.model_q > rows[i - 1].model_q);
      CHECK(r.empirical_q >= rows[i - 1].empirical_q);
      CHECK(r.tol_lo >= rows[i - 1].tol_lo);
      CHECK(r.tol_hi >= rows[i - 1].tol_hi);
    }
    if (r.tol_lo <= r.empirical_q && r.empirical_q <= r.tol_hi) ++inside;
  }
  // Data from the model sit inside pointwise 95% bounds most of the time.
  CHECK(inside > 120);

  const auto two = eqd::qq_data(p, std::vector<double>{0.3, 0.1}, 20, 0.9, 1, 1);
  REQUIRE(two.size() == 2);
  CHECK(two[0].empirical_q == 0.1);
  CHECK_THAT(two[1].model_q, WithinAbs(eqd::gpd_quantile(2.0 / 3.0, p), 1e-14));

  CHECK_THROWS_AS(eqd::qq_data(p, y, 19, 0.95, 1), eqd::InputError);
  CHECK_THROWS_AS(eqd::qq_data(p, std::vector<double>{0.3}, 50, 0.95, 1), eqd::InputError);

  const auto threaded = eqd::qq_data(p, y, 200, 0.95, 11, 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(threaded[i].tol_lo == rows[i].tol_lo);
    CHECK(threaded[i].tol_hi == rows[i].tol_hi);
  }
}

TEST_CASE("return period ranges", "[diagnostics]") {
  eqd::ReturnLevelRange r;
  r.t_min = 10;
  r.t_max = 1000;
  r.n_points = 3;
  const auto t = r.periods();
  REQUIRE(t.size() == 3);
  CHECK(t[0] == 10.0);
  CHECK_THAT(t[1], WithinRel(100.0, 1e-12));
  CHECK(t[2] == 1000.0);
  r.t_min = 0;
  CHECK_THROWS_AS(r.periods(), eqd::InputError);
}

TEST_CASE("return level curve", "[diagnostics]") {
  const auto x = case_sample(eqd::CaseId::case1, 42);
  const auto grid = eqd::GridSpec::parse("0(10)90");
  eqd::EqdConfig cfg;
  cfg.n_boot = 10;
  cfg.seed = 2;
  eqd::ReturnLevelRange range;
  range.n_points = 6;
  range.obs_per_year = 100;
  eqd::BootstrapOptions o;
  o.seed = 4;
  const auto c = eqd::return_level_curve(x, grid, cfg, range, 6, 20, 0.9, o);
  REQUIRE(c.rows.size() == 6);
  const auto& m = c.selection.model;
  for (std::size_t k = 0; k < c.rows.size(); ++k) {
    const auto& r = c.rows[k];
    const double p = 1.0 / (r.period * range.obs_per_year);
    CHECK_THAT(r.point, WithinRel(eqd::unconditional_quantile(m, p), 1e-12));
    CHECK(r.alg1_lo <= r.alg1_hi);
    CHECK(r.alg2_lo <= r.alg2_hi);
    if (k > 0) CHECK(r.point > c.rows[k - 1].point);
  }
  o.threads = 3;
  const auto d = eqd::return_level_curve(x, grid, cfg, range, 6, 20, 0.9, o);
  for (std::size_t k = 0; k < c.rows.size(); ++k) {
    CHECK(d.rows[k].alg1_hi == c.rows[k].alg1_hi);
    CHECK(d.rows[k].alg2_lo == c.rows[k].alg2_lo);
  }
  CHECK_THROWS_AS(eqd::return_levels(x, grid, cfg, std::vector<double>{}, 1.0, 2, 2, 0.9, o),
                  eqd::InputError);
}
