#include <chrono>
#include <random>

#include "doctest.h"
#include "h2_fixtures.hpp"

#include "h2atlas/error.hpp"
#include "h2atlas/h2opt.hpp"

using namespace h2atlas::h2opt;
using h2atlas::res::annual_fixed_cost;
using h2atlas::res::TechnoEconomics;

namespace {

double unit_cost(const NodeModel& n, Component c) {
  return annual_fixed_cost(n.te.at(c, n.year), n.te.discount_rate) * 1000.0;
}

void check_invariants(const NodeModel& n, const SolveResult& r) {
  CHECK(r.balance_residual < 1e-6);
  CHECK(r.battery_residual < 1e-6);
  CHECK(r.shares.sum() == doctest::Approx(1.0).epsilon(1e-9));
  for (double s : {r.shares.pv, r.shares.wind, r.shares.hydro, r.shares.electrolyzer, r.shares.battery, r.shares.water})
    CHECK(s >= -1e-12);
  const double water = n.water_m3_per_kg * r.demand_t * 1000.0;
  CHECK(r.groundwater_m3 + r.desal_m3 == doctest::Approx(water).epsilon(1e-9));
  CHECK(r.groundwater_m3 <= n.water.groundwater_m3 * (1 + 1e-9) + 1e-9);
  CHECK(r.lcoh == doctest::Approx(r.annual_cost / (r.demand_t * 1000.0)).epsilon(1e-12));
  CHECK(r.electrolyzer_mw >= electrolyzer_power_mw(r.demand_t, n.e_spec_kwh_per_kg) * (1 - 1e-9));
  for (const auto& [id, cap] : r.capacity_mw) CHECK(cap >= -1e-9);
  CHECK(r.battery_mwh >= -1e-9);
}

}  // namespace

TEST_CASE("one flat source: closed-form annuity cost") {
  NodeModel n;
  n.region_id = "flat";
  n.year = 2030;
  n.sources.push_back({"pv", Component::pv, 1e4, fixture::flat(1.0)});
  n.water.groundwater_m3 = 1e8;
  const double d = 5000.0;
  auto r = solve_node(n, d, {24});
  REQUIRE(r);
  const double p = d * 47.6 / 8760.0;
  const double expect = unit_cost(n, Component::pv) * p + unit_cost(n, Component::electrolyzer) * p + 0.10 * 9.0 * d;
  CHECK(r->annual_cost == doctest::Approx(expect).epsilon(1e-6));
  CHECK(r->capacity_mw.at("pv") == doctest::Approx(p).epsilon(1e-6));
  CHECK(r->battery_mwh == doctest::Approx(0).scale(1).epsilon(1e-6));
  check_invariants(n, *r);

  // hourly resolution gives the same answer
  auto h = solve_node(n, d, {1});
  REQUIRE(h);
  CHECK(h->annual_cost == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("water availability") {
  NodeModel n;
  n.region_id = "dry";
  n.sources.push_back({"pv", Component::pv, 1e4, fixture::flat(1.0)});
  n.water.groundwater_m3 = 0.0;
  CHECK_FALSE(solve_node(n, 1000.0, {24}));

  // desalination covers the gap at its price
  n.water.groundwater_m3 = 4000.0;
  n.water.desal_cost = 1.5;
  auto r = solve_node(n, 1000.0, {24});
  REQUIRE(r);
  CHECK(r->groundwater_m3 == doctest::Approx(4000.0).epsilon(1e-8));
  CHECK(r->desal_m3 == doctest::Approx(5000.0).epsilon(1e-8));
  check_invariants(n, *r);

  // relaxing the binding groundwater budget never raises cost
  auto relaxed = n;
  relaxed.water.groundwater_m3 = 1e6;
  auto r2 = solve_node(relaxed, 1000.0, {24});
  REQUIRE(r2);
  CHECK(r2->annual_cost <= r->annual_cost * (1 + 1e-9));
  CHECK(r2->desal_m3 == doctest::Approx(0).scale(1).epsilon(1e-6));
}

TEST_CASE("cheaper of two sufficient sources wins") {
  NodeModel n;
  n.region_id = "two";
  n.year = 2030;
  // equal availability; wind costs more per MW than PV in every year
  n.sources.push_back({"pv", Component::pv, 1e4, fixture::flat(0.5)});
  n.sources.push_back({"wind", Component::wind, 1e4, fixture::flat(0.5)});
  n.water.groundwater_m3 = 1e8;
  auto r = solve_node(n, 2000.0, {24});
  REQUIRE(r);
  const double p = 2000.0 * 47.6 / 8760.0;
  // enumeration of the two single-source solutions
  const double only_pv = unit_cost(n, Component::pv) * 2 * p, only_wind = unit_cost(n, Component::wind) * 2 * p;
  CHECK(only_pv < only_wind);
  CHECK(r->capacity_mw.at("wind") == doctest::Approx(0).scale(1).epsilon(1e-6));
  CHECK(r->capacity_mw.at("pv") == doctest::Approx(2 * p).epsilon(1e-6));
  CHECK(r->annual_cost == doctest::Approx(only_pv + unit_cost(n, Component::electrolyzer) * p + 0.1 * 9 * 2000)
                              .epsilon(1e-6));
}

TEST_CASE("grid search oracle over two capacities without storage") {
  for (unsigned seed : {3u, 4u, 5u}) {
    NodeModel n;
    n.region_id = "grid";
    n.year = 2040;
    n.battery_enabled = false;
    n.sources.push_back({"pv", Component::pv, 60.0, fixture::daily_blocks(0.15, 0.6, seed)});
    n.sources.push_back({"wind", Component::wind, 60.0, fixture::daily_blocks(0.05, 0.7, seed + 100)});
    n.water.groundwater_m3 = 1e8;
    const double d = 1500.0, p = d * 47.6 / 8760.0;
    auto r = solve_node(n, d, {24});
    REQUIRE(r);

    // without storage the load must be covered in every period, so for each
    // PV capacity on a fine grid the least wind capacity is explicit
    const Series f1 = downsample(n.sources[0].cf, 24), f2 = downsample(n.sources[1].cf, 24);
    const double a1 = unit_cost(n, Component::pv), a2 = unit_cost(n, Component::wind);
    const double fixed = unit_cost(n, Component::electrolyzer) * p + 0.1 * 9 * d;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20000; ++i) {
      const double c1 = 60.0 * i / 20000;
      const double c2 = std::max(0.0, ((p - c1 * f1) / f2).maxCoeff());
      if (c2 <= 60.0) best = std::min(best, a1 * c1 + a2 * c2 + fixed);
    }
    REQUIRE(std::isfinite(best));
    CHECK(r->annual_cost <= best * (1 + 1e-7));
    CHECK(r->annual_cost >= best * (1 - 1e-4));
    check_invariants(n, *r);
  }
}

TEST_CASE("battery shifts solar into the night") {
  NodeModel n;
  n.region_id = "solar";
  n.year = 2050;
  n.sources.push_back({"pv", Component::pv, 1e5, fixture::solar(0.22, 7)});
  n.water.groundwater_m3 = 1e9;
  auto r = solve_node(n, 10000.0, {1});
  REQUIRE(r);
  CHECK(r->battery_mwh > 0);
  CHECK(r->discharge.maxCoeff() > 0);
  check_invariants(n, *r);
  // SOC never exceeds the installed energy
  CHECK(r->soc.maxCoeff() <= r->battery_mwh * (1 + 1e-6) + 1e-6);
}

TEST_CASE("hydro var O&M is charged on dispatched energy") {
  NodeModel n;
  n.region_id = "hydro";
  n.year = 2030;
  n.sources.push_back({"hydro_ror", Component::hydro_ror, 100.0, fixture::flat(0.8)});
  n.water.groundwater_m3 = 1e8;
  const double d = 5000.0, p = d * 47.6 / 8760.0;
  auto r = solve_node(n, d, {24});
  REQUIRE(r);
  // capacity p/0.8 with full dispatch of p every hour
  const double expect = unit_cost(n, Component::hydro_ror) * p / 0.8 + 0.005 * 1000 * p * 8760 +
                        unit_cost(n, Component::electrolyzer) * p + 0.1 * 9 * d;
  CHECK(r->annual_cost == doctest::Approx(expect).epsilon(1e-6));
  CHECK(r->shares.hydro > 0.5);
}

TEST_CASE("representative days") {
  auto days = representative_day_indices(24);
  CHECK(days.size() == 24);
  CHECK(days.front() == 7);
  CHECK(days.back() == 357);
  CHECK(std::is_sorted(days.begin(), days.end()));

  // with day-constant availability the sampled days reproduce the hourly
  // var-O&M energy scaled by 365/k, and capacity costs are unchanged
  NodeModel n;
  n.region_id = "rep";
  n.year = 2030;
  n.sources.push_back({"hydro_ror", Component::hydro_ror, 100.0, fixture::flat(0.8)});
  n.water.groundwater_m3 = 1e8;
  auto full = solve_node(n, 5000.0, {1});
  auto rep = solve_node(n, 5000.0, {1, 24});
  REQUIRE(full);
  REQUIRE(rep);
  CHECK(rep->annual_cost == doctest::Approx(full->annual_cost).epsilon(1e-7));

  // desk-scale instance: 24 days × 24 h = 576 periods
  auto hi = fixture::high_resource_2050();
  const auto m = build_lp(hi, 100000.0, {1, 24});
  CHECK(m.periods == 576);
  const auto t0 = std::chrono::steady_clock::now();
  auto r = solve_lp(m);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(r);
  CHECK(secs < 60.0);
  check_invariants(hi, *r);
  CHECK_THROWS_AS(build_lp(hi, 1.0, {6, 24}), h2atlas::InvalidArgument);
}

TEST_CASE("cost-potential curve") {
  SUBCASE("potential exactly covering the fourth step") {
    NodeModel n;
    n.region_id = "cap";
    n.sources.push_back({"pv", Component::pv, 1.0, fixture::flat(1.0)});
    n.water.groundwater_m3 = 1e9;
    RunConfig cfg;
    cfg.base_demand_t = 1000.0;
    cfg.hours_per_period = 24;
    n.sources[0].potential_mw = 1.01 * electrolyzer_power_mw(1000.0 * std::pow(1.06, 3), 47.6);
    auto c = cost_potential_curve(n, cfg);
    CHECK(c.steps.size() == 4);
    CHECK(c.terminal == Terminal::infeasible_at_next_step);
    for (std::size_t k = 0; k < c.steps.size(); ++k)
      CHECK(c.steps[k].demand_t == doctest::Approx(1000.0 * std::pow(1.06, static_cast<double>(k))).epsilon(1e-12));
  }
  SUBCASE("base step infeasible") {
    NodeModel n;
    n.region_id = "tiny";
    n.sources.push_back({"pv", Component::pv, 0.1, fixture::flat(1.0)});
    n.water.groundwater_m3 = 1e9;
    auto c = cost_potential_curve(n, RunConfig{1000.0, 1.06, 10, 24});
    CHECK(c.steps.empty());
    CHECK(c.terminal == Terminal::infeasible_at_base);
    CHECK_FALSE(c.diagnostic.empty());
  }
  SUBCASE("multi-cluster curve is nondecreasing and convex in demand") {
    NodeModel n;
    n.region_id = "multi";
    n.year = 2050;
    n.sources.push_back({"pv_0", Component::pv, 300.0, fixture::solar(0.24, 11)});
    n.sources.push_back({"pv_1", Component::pv, 400.0, fixture::solar(0.18, 12)});
    n.sources.push_back({"wind_0", Component::wind, 300.0, fixture::wind(0.30, 13)});
    n.water.groundwater_m3 = 2e5;  // binding after a few steps
    n.water.desal_cost = 0.9;
    RunConfig cfg{2000.0, 1.06, 80, 24};
    auto c = cost_potential_curve(n, cfg);
    REQUIRE(c.steps.size() >= 5);
    CHECK(c.terminal == Terminal::infeasible_at_next_step);
    for (std::size_t k = 1; k < c.steps.size(); ++k) {
      CHECK(c.steps[k].result.annual_cost >= c.steps[k - 1].result.annual_cost);
      CHECK(c.steps[k].result.lcoh >= c.steps[k - 1].result.lcoh * (1 - 1e-7));
    }
    // convexity: slopes between consecutive steps do not decrease
    for (std::size_t k = 2; k < c.steps.size(); ++k) {
      const auto& a = c.steps[k - 2];
      const auto& b = c.steps[k - 1];
      const auto& e = c.steps[k];
      const double s1 = (b.result.annual_cost - a.result.annual_cost) / (b.demand_t - a.demand_t);
      const double s2 = (e.result.annual_cost - b.result.annual_cost) / (e.demand_t - b.demand_t);
      CHECK(s2 >= s1 * (1 - 1e-6) - 1e-6);
    }
    for (const auto& s : c.steps) check_invariants(n, s.result);
  }
}

TEST_CASE("local demand deduction") {
  NodeModel n;
  n.region_id = "loc";
  n.sources.push_back({"pv", Component::pv, 1e4, fixture::flat(1.0)});
  n.water.groundwater_m3 = 1e9;
  auto c = cost_potential_curve(n, RunConfig{1000.0, 1.06, 6, 24});
  REQUIRE(c.steps.size() == 6);

  auto same = deduct_local_demand(c, 0, 0);
  for (std::size_t k = 0; k < c.steps.size(); ++k) CHECK(same.steps[k].exportable_t == c.steps[k].demand_t);

  auto none = deduct_local_demand(c, 1e6, 0);
  for (const auto& s : none.steps) CHECK(s.exportable_t == 0.0);

  // 1100 t of H2 plus 4760 MWh of electricity (= 100 t at 47.6 kWh/kg)
  auto mid = deduct_local_demand(c, 1100.0, 4760.0);
  for (std::size_t k = 0; k < c.steps.size(); ++k) {
    CHECK(mid.steps[k].exportable_t == doctest::Approx(std::max(0.0, c.steps[k].demand_t - 1200.0)));
    CHECK(mid.steps[k].result.lcoh == c.steps[k].result.lcoh);
  }
  CHECK_THROWS(deduct_local_demand(c, -1, 0));
}

TEST_CASE("high-resource 2050 region is bounded below by its cheapest energy") {
  auto n = fixture::high_resource_2050();
  const double d = 100000.0;
  auto r = solve_node(n, d, {1});
  REQUIRE(r);
  MESSAGE("hourly LCOH " << r->lcoh << " EUR/kg");
  // every kWh costs at least the cheapest source's LCOE; the electrolyzer is sized at least to the load
  double cheapest = std::numeric_limits<double>::infinity();
  for (const auto& s : n.sources)
    cheapest = std::min(cheapest, h2atlas::res::lcoe(1.0, s.cf.sum(), n.te, s.component, n.year));
  const double bound = cheapest * 47.6 + unit_cost(n, Component::electrolyzer) * r->electrolyzer_mw / (d * 1000.0);
  CHECK(r->lcoh >= bound * (1 - 1e-9));
  CHECK(r->shares.battery > 0);
  check_invariants(n, *r);
}

TEST_CASE("JSON and CSV output") {
  NodeModel n;
  n.region_id = "io";
  n.sources.push_back({"pv", Component::pv, 1e4, fixture::flat(0.9)});
  n.water.groundwater_m3 = 1e9;
  auto back = node_from_json(to_json(n));
  CHECK(back.sources.size() == 1);
  CHECK(back.sources[0].cf[5] == 0.9);
  CHECK_FALSE(back.water.desal_cost);

  auto c = cost_potential_curve(n, RunConfig{1000.0, 1.06, 3, 24});
  const auto csv = curve_csv(c);
  CHECK(csv.rfind("step,demand_t,lcoh,share_pv,share_wind,share_hydro,share_ely,share_batt,share_water\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  auto j = to_json(c);
  CHECK(j["steps"].size() == 3);
  CHECK(j["terminal"] == "max-steps");

  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"growth", 1.0}}), h2atlas::InvalidArgument);
  CHECK_THROWS_AS(build_lp(n, 0.0), h2atlas::InvalidArgument);
}
