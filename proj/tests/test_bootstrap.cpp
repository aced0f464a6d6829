#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "eqd/bootstrap.hpp"
#include "eqd/simcases.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> case_sample(eqd::CaseId id, std::uint64_t seed) {
  eqd::Stream rng(seed);
  return eqd::simulate_case(eqd::CaseSpec::make(id), rng);
}

}  // namespace

TEST_CASE("percentile intervals", "[bootalg]") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  const auto ci = eqd::percentile_ci(v, 0.8);
  CHECK_THAT(ci.lo, WithinAbs(10.9, 1e-12));
  CHECK_THAT(ci.hi, WithinAbs(90.1, 1e-12));
  const auto wide = eqd::percentile_ci(v, 1.0 - 1e-12);
  CHECK_THAT(wide.lo, WithinAbs(1.0, 1e-9));
  CHECK_THAT(wide.hi, WithinAbs(100.0, 1e-9));
  const auto flat = eqd::percentile_ci(std::vector<double>(7, 2.5), 0.95);
  CHECK(flat.lo == 2.5);
  CHECK(flat.hi == 2.5);
  CHECK_THROWS_AS(eqd::percentile_ci(std::vector<double>{}, 0.9), eqd::InputError);
  CHECK_THROWS_AS(eqd::percentile_ci(v, 1.0), eqd::InputError);

  const auto c50 = eqd::percentile_ci(v, 0.5), c80 = eqd::percentile_ci(v, 0.8), c95 = eqd::percentile_ci(v, 0.95);
  CHECK((c95.lo <= c80.lo && c80.lo <= c50.lo && c50.hi <= c80.hi && c80.hi <= c95.hi));
}

TEST_CASE("summary specs", "[bootalg]") {
  const eqd::GpdParams p(0.5, 0.1);
  CHECK(eqd::SummarySpec::threshold().evaluate(1.0, 0.3, p) == 1.0);
  CHECK(eqd::SummarySpec::exceed_prob().evaluate(1.0, 0.3, p) == 0.3);
  CHECK(eqd::SummarySpec::shape().evaluate(1.0, 0.3, p) == 0.1);
  CHECK(eqd::SummarySpec::scale().evaluate(1.0, 0.3, p) == 0.5);
  const auto rl = eqd::SummarySpec::return_level(100, 4.4);
  CHECK_THAT(rl.probability(), WithinRel(1.0 / 440, 1e-15));
  CHECK_THAT(eqd::SummarySpec::quantile(1.0 / 1200).evaluate(1.0, 5.0 / 6.0, p),
             WithinAbs(5.9763115748443980068, 1e-12));
  CHECK(std::isnan(eqd::SummarySpec::quantile(0.5).evaluate(1.0, 0.3, p)));
  CHECK_THROWS_AS(eqd::SummarySpec::quantile(0.0), eqd::InputError);
  CHECK_THROWS_AS(eqd::SummarySpec::return_level(-1, 1), eqd::InputError);
}

TEST_CASE("algorithm 1 basics", "[bootalg]") {
  const auto x = case_sample(eqd::CaseId::case1, 21);
  eqd::BootstrapOptions o;
  o.seed = 5;
  const auto one = eqd::alg1(x, 1.0, 1, eqd::SummarySpec::shape(), o);
  CHECK(one.values.size() == 1);
  const auto u = eqd::alg1(x, 1.0, 30, eqd::SummarySpec::threshold(), o);
  CHECK(std::all_of(u.values.begin(), u.values.end(), [](double v) { return v == 1.0; }));
  const auto lam = eqd::alg1(x, 1.0, 30, eqd::SummarySpec::exceed_prob(), o);
  CHECK(std::all_of(lam.values.begin(), lam.values.end(), [](double v) { return v == 1000.0 / 1200.0; }));
  CHECK_THROWS_AS(eqd::alg1(x, 1.0, 0, eqd::SummarySpec::shape(), o), eqd::InputError);
  CHECK_THROWS_AS(eqd::alg1(x, 100.0, 10, eqd::SummarySpec::shape(), o), eqd::InfeasibleError);
}

TEST_CASE("algorithm 1b varies the exceedance rate", "[bootalg]") {
  const auto x = case_sample(eqd::CaseId::case1, 22);
  eqd::BootstrapOptions o;
  o.seed = 6;
  const auto lam = eqd::alg1b(x, 1.0, 50, eqd::SummarySpec::exceed_prob(), o);
  REQUIRE(lam.values.size() == 50);
  const auto [lo, hi] = std::minmax_element(lam.values.begin(), lam.values.end());
  CHECK(*lo < *hi);
  const double mean = std::accumulate(lam.values.begin(), lam.values.end(), 0.0) / 50;
  CHECK_THAT(mean, WithinAbs(1000.0 / 1200.0, 0.01));

  // Every value above the threshold: the binomial draw is always n.
  const auto all = eqd::alg1b(x, 0.4, 20, eqd::SummarySpec::exceed_prob(), o);
  CHECK(std::all_of(all.values.begin(), all.values.end(), [](double v) { return v == 1.0; }));
}

TEST_CASE("bootstrap results do not depend on the worker count", "[bootalg]") {
  const auto x = case_sample(eqd::CaseId::case2, 23);
  const std::vector<eqd::SummarySpec> specs{eqd::SummarySpec::quantile(1e-3), eqd::SummarySpec::shape()};
  eqd::BootstrapOptions o;
  o.seed = 9;
  o.threads = 1;
  const auto a1 = eqd::alg1(x, 1.0, 40, specs, o);
  const auto b1 = eqd::alg1b(x, 1.0, 40, specs, o);
  eqd::EqdConfig cfg;
  cfg.n_boot = 10;
  const auto grid = eqd::GridSpec::parse("0(10)90");
  const auto c1 = eqd::alg2(x, grid, cfg, 6, 10, specs, o);
  o.threads = 3;
  CHECK(eqd::alg1(x, 1.0, 40, specs, o)[0].values == a1[0].values);
  CHECK(eqd::alg1b(x, 1.0, 40, specs, o)[1].values == b1[1].values);
  const auto c3 = eqd::alg2(x, grid, cfg, 6, 10, specs, o);
  CHECK(c3[0].values == c1[0].values);
  CHECK(c3[1].values == c1[1].values);
  CHECK(c1[0].values.size() + c1[0].n_failed == 60);
}

TEST_CASE("algorithm 2 without outer resampling is algorithm 1 at the selection", "[bootalg]") {
  const auto x = case_sample(eqd::CaseId::case1, 24);
  eqd::EqdConfig cfg;
  cfg.n_boot = 15;
  const auto grid = eqd::GridSpec::parse("0(10)90");
  eqd::BootstrapOptions o;
  o.seed = 31;
  o.resample_outer = false;
  const auto two = eqd::alg2(x, grid, cfg, 1, 25, eqd::SummarySpec::quantile(1e-3), o);

  eqd::EqdConfig inner = cfg;
  inner.seed = eqd::derive_seed(o.seed, eqd::StreamTag::alg2_select, {0});
  const auto sel = eqd::select_threshold(x, eqd::quantile_grid(x, grid), inner);
  eqd::BootstrapOptions o1 = o;
  o1.seed = eqd::alg2_inner_seed(o.seed, 0);
  const auto one = eqd::alg1(x, sel.chosen, 25, eqd::SummarySpec::quantile(1e-3), o1);
  CHECK(two.values == one.values);
}

TEST_CASE("algorithm 2 varies the threshold", "[bootalg]") {
  const auto x = case_sample(eqd::CaseId::case4, 25);
  eqd::EqdConfig cfg;
  cfg.n_boot = 10;
  eqd::BootstrapOptions o;
  o.seed = 2;
  const auto u = eqd::alg2(x, eqd::GridSpec::parse("0(5)95"), cfg, 12, 2, eqd::SummarySpec::threshold(), o);
  REQUIRE(!u.values.empty());
  const auto [lo, hi] = std::minmax_element(u.values.begin(), u.values.end());
  CHECK(*lo < *hi);
}

TEST_CASE("algorithm 1 shape interval coverage", "[bootalg][slow]") {
  // Coverage of the 95% percentile interval for xi over repeated samples.
  const eqd::GpdParams truth(0.5, 0.1);
  const int outer = 100;
  int hit = 0;
  eqd::BootstrapOptions o;
  for (int r = 0; r < outer; ++r) {
    eqd::Stream rng(5000 + r);
    const auto y = eqd::gpd_sample(10000, truth, rng);
    o.seed = r;
    const auto s = eqd::alg1(y, 0.0, 200, eqd::SummarySpec::shape(), o);
    if (eqd::percentile_ci(s, 0.95).contains(0.1)) ++hit;
  }
  CHECK_THAT(hit / static_cast<double>(outer), WithinAbs(0.95, 0.07));
}
