#include <numeric>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"

#include "h2atlas/eligibility.hpp"
#include "h2atlas/geo/raster.hpp"

using namespace h2atlas::eligibility;
using h2atlas::geo::Mask;

namespace {

std::vector<PreferenceSet> corpus_for_12(std::vector<std::pair<std::string, double>> vals) {
  std::vector<PreferenceSet> out;
  for (auto& [country, v] : vals) {
    PreferenceSet p{country, Tech::wind, {}};
    for (int id = 1; id <= 33; ++id) p.buffers_m[id] = 100.0 * id;
    p.buffers_m[12] = v;
    out.push_back(p);
  }
  return out;
}

double ledger_sum(const EligibilityResult& r) {
  double s = r.eligible_fraction;
  for (const auto& e : r.ledger) s += e.fraction;
  return s;
}

}  // namespace

TEST_CASE("catalog has the 33 criteria") {
  const auto& cat = default_catalog();
  CHECK(cat.size() == 33);
  CHECK_NOTHROW(validate_catalog(cat));
  CHECK(cat[3].name == "Primary Roadways");
  CHECK(cat[16].name == "National Borders");
  CHECK(cat[32].name == "Natural Monuments");
  auto dup = cat;
  dup[1].id = 1;
  CHECK_THROWS(validate_catalog(dup));
  CHECK(catalog_from_json(catalog_to_json(cat)).size() == 33);
}

TEST_CASE("resolve_buffers: own value, odd and even medians") {
  auto corpus = corpus_for_12({{"BEN", 500.0}, {"GHA", 100.0}, {"TGO", 200.0}, {"NGA", 1000.0}});
  CHECK(resolve_buffers(corpus, "BEN", Tech::wind).at(12) == 500.0);

  // country missing criterion 12, corpus {100, 200, 1000}
  auto odd = corpus_for_12({{"GHA", 100.0}, {"TGO", 200.0}, {"NGA", 1000.0}});
  odd.push_back({"BEN", Tech::wind, {{1, 50.0}}});
  auto b = resolve_buffers(odd, "BEN", Tech::wind);
  CHECK(b.at(12) == 200.0);
  CHECK(b.at(1) == 50.0);
  CHECK(b.size() == 33);

  auto even = corpus_for_12({{"GHA", 100.0}, {"TGO", 200.0}, {"SEN", 400.0}, {"NGA", 1000.0}});
  CHECK(resolve_buffers(even, "BEN", Tech::wind).at(12) == 300.0);
}

TEST_CASE("resolve_buffers: medians are per technology and missing data errors") {
  auto corpus = corpus_for_12({{"GHA", 100.0}, {"TGO", 300.0}});
  auto pv = corpus_for_12({{"GHA", 1000.0}, {"TGO", 3000.0}});
  for (auto& p : pv) p.tech = Tech::pv;
  corpus.insert(corpus.end(), pv.begin(), pv.end());
  CHECK(resolve_buffers(corpus, "BEN", Tech::wind).at(12) == 200.0);
  CHECK(resolve_buffers(corpus, "BEN", Tech::pv).at(12) == 2000.0);

  std::vector<PreferenceSet> sparse{{"GHA", Tech::wind, {{1, 100.0}}}};
  CHECK_THROWS_WITH_AS(resolve_buffers(sparse, "BEN", Tech::wind), doctest::Contains("no preference data"),
                       h2atlas::Error);
}

TEST_CASE("zero criteria leaves the whole region eligible") {
  auto c = fixture::three_criteria_238();
  auto r = compute_eligibility(c.region, {}, {}, {}, c.grid);
  CHECK(r.eligible_fraction == 1.0);
  CHECK(r.ledger.empty());
}

TEST_CASE("road with 200 m buffer excludes five rows") {
  auto c = fixture::three_criteria_238();
  std::vector<CriterionSpec> crit{{4, "Primary Roadways", "roads_primary"}};
  auto r = compute_eligibility(c.region, crit, c.layers, {{4, 200.0}}, c.grid);
  CHECK(r.eligible_fraction == doctest::Approx(0.95).epsilon(1e-15));
  for (Eigen::Index row = 0; row < 100; ++row) CHECK(r.mask(row, 10) == !(row >= 48 && row <= 52));
}

TEST_CASE("three-criterion fixture reproduces 23.8 percent against the oracle") {
  auto c = fixture::three_criteria_238();
  auto r = compute_eligibility(c.region, c.criteria, c.layers, c.buffers, c.grid);
  auto expected = fixture::oracle_mask(c);
  CHECK(r.mask == expected);
  CHECK(oracle::count(expected) == 2380);
  CHECK(r.eligible_fraction == 0.238);
  CHECK(ledger_sum(r) == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(r.ledger.size() == 3);
  CHECK(r.ledger[0].criterion_id == 1);
  CHECK(r.ledger[2].criterion_id == 22);
}

TEST_CASE("region below resolution") {
  auto c = fixture::three_criteria_238();
  h2atlas::geo::VectorFeature tiny;
  tiny.polygons.push_back(oracle::rect(10.0, 10.0, 20.0, 20.0));
  CHECK_THROWS_WITH(compute_eligibility(tiny, {}, {}, {}, c.grid), "region below resolution");
}

TEST_CASE("eligibility invariants on random fixtures") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 12; ++t) {
    auto c = fixture::random_case(rng);
    c.grid.ncols = std::min<Eigen::Index>(c.grid.ncols, 96);
    c.grid.nrows = std::min<Eigen::Index>(c.grid.nrows, 96);
    auto rasters = rasterize_criteria(c.region, c.criteria, c.layers, c.grid);
    if (h2atlas::geo::popcount(rasters.region) == 0) continue;
    auto base = compose(rasters, c.buffers);
    CHECK(ledger_sum(base) == doctest::Approx(1.0).epsilon(1e-12));

    // order independence: permuted criteria list gives the same mask
    auto perm = c.criteria;
    std::reverse(perm.begin(), perm.end());
    CHECK(compute_eligibility(c.region, perm, c.layers, c.buffers, c.grid).mask == base.mask);

    // idempotence: listing a criterion twice changes nothing
    auto twice = c.criteria;
    twice.push_back(c.criteria.front());
    CHECK(compute_eligibility(c.region, twice, c.layers, c.buffers, c.grid).mask == base.mask);

    // monotonicity in every buffer
    for (const auto& crit : c.criteria) {
      auto bigger = c.buffers;
      bigger[crit.id] += 150.0;
      CHECK(compose(rasters, bigger).eligible_fraction <= base.eligible_fraction);
    }
  }
}

TEST_CASE("sensitivity table") {
  auto flat = corpus_for_12({{"A", 100.0}, {"B", 100.0}, {"C", 100.0}});
  for (const auto& d : sensitivity_table(flat, 12, Tech::wind)) CHECK(d.deviation == 0.0);

  auto spread = corpus_for_12({{"A", 0.0}, {"B", 100.0}, {"C", 1100.0}});
  auto t = sensitivity_table(spread, 12, Tech::wind);
  CHECK(t[0].deviation == doctest::Approx(-100.0));
  CHECK(t[1].deviation == 0.0);
  CHECK(t[2].deviation == doctest::Approx(1000.0));

  auto zero = corpus_for_12({{"A", 0.0}, {"B", 0.0}, {"C", 300.0}});
  auto z = sensitivity_table(zero, 12, Tech::wind);
  CHECK(z[2].absolute);
  CHECK(z[2].deviation == 300.0);

  CHECK_THROWS(sensitivity_table(corpus_for_12({{"A", 1.0}}), 12, Tech::wind));
}

TEST_CASE("preference corpus JSON") {
  auto doc = nlohmann::json::parse(R"([{"country":"BEN","tech":"pv","buffers":{"4":200,"12":50.5}}])");
  auto prefs = preferences_from_json(doc);
  REQUIRE(prefs.size() == 1);
  CHECK(prefs[0].tech == Tech::pv);
  CHECK(prefs[0].buffers_m.at(12) == 50.5);
  CHECK_THROWS_AS(preferences_from_json(nlohmann::json::parse(R"([{"country":"BEN","tech":"hydro","buffers":{}}])")),
                  h2atlas::Error);
  CHECK_THROWS_AS(buffers_from_json(nlohmann::json::parse(R"({"x":1})")), h2atlas::ParseError);
  CHECK_THROWS_AS(buffers_from_json(nlohmann::json::parse(R"({"3":-1})")), h2atlas::InvalidArgument);
}
