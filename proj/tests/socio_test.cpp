#include <random>

#include "doctest.h"

#include "h2atlas/error.hpp"
#include "h2atlas/socio.hpp"

using namespace h2atlas::socio;

namespace {

RegionDemographics region(std::string gid, double area, double urban, double rural, double eu, double er) {
  RegionDemographics d;
  d.gid = std::move(gid);
  d.area_km2 = area;
  d.urban_pop = urban;
  d.rural_pop = rural;
  d.labor_share = 0.55;
  d.unemployment = 0.05;
  d.poverty = 0.4;
  d.no_access = {eu, er, eu, er};
  return d;
}

}  // namespace

TEST_CASE("energy access indicator") {
  CHECK(energy_access_indicator(region("a", 100, 6000, 4000, 0, 0)) == 0.0);
  CHECK(energy_access_indicator(region("a", 100, 6000, 4000, 1, 1)) == doctest::Approx(100.0));
  CHECK(energy_access_indicator(region("a", 50, 6000, 4000, 0.3, 0.7)) == doctest::Approx(92.0));
  // clean-fuel indicator coincides when the rates do
  auto d = region("a", 50, 6000, 4000, 0.3, 0.7);
  CHECK(clean_fuel_indicator(d) == energy_access_indicator(d));
  d.area_km2 = 0;
  CHECK_THROWS_AS(energy_access_indicator(d), h2atlas::InvalidArgument);
}

TEST_CASE("employment indicator") {
  auto d = region("ouem", 1200.0, 300000.0, 500000.0, 0.3, 0.7);
  d.labor_share = 0.55;
  d.unemployment = 0.016;
  const EmploymentParams p;
  // independent arithmetic: mean EF (5.1 + 3.2 + 5.9)/3 = 4.7333…, plus 1.7
  const double expect = 1.0 * (14.2 / 3.0 + 1.7) * 0.016 * 0.55 * 800000.0 / 1200.0;
  CHECK(employment_indicator(d, p) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(37.742222222222225).epsilon(1e-12));

  auto d2 = d;
  d2.area_km2 *= 2;
  CHECK(employment_indicator(d2, p) == doctest::Approx(employment_indicator(d, p) / 2));
  d2.unemployment = 0;
  CHECK(employment_indicator(d2, p) == 0.0);
  EmploymentParams bad;
  bad.ef_pv = -1;
  CHECK_THROWS_AS(employment_indicator(d, bad), h2atlas::InvalidArgument);
}

TEST_CASE("z-scores") {
  Eigen::VectorXd x(3);
  x << 1, 2, 3;
  auto z = zscore(x);
  CHECK_FALSE(z.degenerate);
  CHECK(z.z[0] == doctest::Approx(-1.224744871391589));
  CHECK(z.z[1] == doctest::Approx(0).scale(1));
  CHECK(z.z[2] == doctest::Approx(1.224744871391589));

  auto c = zscore(Eigen::VectorXd::Constant(4, 0.7));
  CHECK(c.degenerate);
  CHECK(c.z.isZero());

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(3, 2);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd v(17);
    for (auto& e : v) e = n(rng);
    const auto a = zscore(v).z;
    CHECK(std::abs(a.mean()) < 1e-12);
    CHECK(std::sqrt(a.squaredNorm() / 17.0) == doctest::Approx(1.0).epsilon(1e-12));
    const auto b = zscore((v.array() * 3.7 + 11.0).matrix()).z;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(zscore(Eigen::VectorXd::Ones(1)), h2atlas::InvalidArgument);
}

TEST_CASE("quintile classes") {
  Eigen::VectorXd v(10);
  v << 9, 8, 7, 6, 5, 4, 3, 2, 1, 0;
  auto c = quintile_classes(v);
  CHECK(c[9] == ImpactClass::very_low);
  CHECK(c[0] == ImpactClass::very_high);
  CHECK(c[5] == ImpactClass::medium);
  CHECK(to_string(c[5]) == "medium");

  for (int n = 2; n <= 40; ++n) {
    Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    auto q = quintile_classes(r);
    int counts[5] = {};
    for (auto k : q) ++counts[static_cast<int>(k)];
    if (n >= 5) {
      CHECK(*std::max_element(counts, counts + 5) - *std::min_element(counts, counts + 5) <= 1);
    }
  }
  CHECK(quintile_classes(Eigen::VectorXd::Zero(7))[3] == ImpactClass::medium);
}

TEST_CASE("composite index") {
  CHECK(kDefaultWeights[0] + kDefaultWeights[1] + kDefaultWeights[2] + kDefaultWeights[3] == doctest::Approx(1.0));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 100);
  Eigen::MatrixXd raw(12, 4);
  for (auto& e : raw.reshaped()) e = u(rng);
  std::vector<std::string> gids;
  for (int i = 0; i < 12; ++i) gids.push_back("R" + std::to_string(i));
  auto c = composite(gids, raw);
  // oracle: weighted sum of per-column standardized values
  for (Eigen::Index i = 0; i < 12; ++i) {
    double s = 0;
    for (int k = 0; k < 4; ++k) {
      const auto col = raw.col(k);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());
      s += kDefaultWeights[static_cast<std::size_t>(k)] * (raw(i, k) - mean) / sd;
    }
    CHECK(c.composite[i] == doctest::Approx(s).epsilon(1e-12));
  }

  // permutation: composites follow the regions
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd shuffled(12, 4);
  std::vector<std::string> sg;
  for (int i = 0; i < 12; ++i) {
    shuffled.row(i) = raw.row(perm[static_cast<std::size_t>(i)]);
    sg.push_back(gids[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
  }
  auto cs = composite(sg, shuffled);
  for (int i = 0; i < 12; ++i) {
    CHECK(cs.composite[i] == doctest::Approx(c.composite[perm[static_cast<std::size_t>(i)]]).epsilon(1e-12));
    CHECK(cs.classes[static_cast<std::size_t>(i)] == c.classes[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
  }

  // affine transform of one indicator leaves the ranking unchanged
  Eigen::MatrixXd moved = raw;
  moved.col(2) = moved.col(2) * 1000.0 + Eigen::VectorXd::Constant(12, -5.0);
  auto cm = composite(gids, moved);
  CHECK((cm.composite - c.composite).cwiseAbs().maxCoeff() < 1e-10);

  // monotone in each raw indicator (raising one region's value)
  Eigen::MatrixXd up = raw;
  up(3, 1) += 10.0;
  CHECK(composite(gids, up).composite[3] > c.composite[3]);

  // constant indicator
  Eigen::MatrixXd flat = raw;
  flat.col(3).setConstant(42.0);
  auto cf = composite(gids, flat);
  CHECK(cf.warnings.size() == 1);
  CHECK(cf.z.col(3).isZero());

  CHECK_THROWS_AS(composite(gids, raw, {0.5, 0.5, 0.5, 0.0}), h2atlas::InvalidArgument);
  CHECK_THROWS_AS(composite(gids, raw.leftCols(3)), h2atlas::InvalidArgument);
  gids.pop_back();
  CHECK_THROWS_AS(composite(gids, raw), h2atlas::InvalidArgument);
}

TEST_CASE("demographics CSV with national fallback") {
  const char* text =
      "gid,area_km2,urban_pop,rural_pop,labor_share,unemployment,poverty,no_access_elec_u,no_access_elec_r,"
      "no_access_fuel_u,no_access_fuel_r\n"
      "BEN.10_1,1281,400000,700000,0.55,0.016,0.52,0.2,0.8,0.7,0.95\n"
      "BEN.10_2,800,100000,300000,0.52,0.02,0.48,,,0.6,\n";
  auto rs = parse_demographics_csv(text);
  REQUIRE(rs.size() == 2);
  CHECK_FALSE(rs[1].no_access.elec_urban);
  CHECK_THROWS_AS(rs[1].validate(), h2atlas::InvalidArgument);
  apply_national_rates(rs, {0.3, 0.85, 0.9, 0.97});
  CHECK(*rs[1].no_access.elec_urban == 0.3);
  CHECK(*rs[1].no_access.fuel_urban == 0.6);  // regional value kept
  CHECK(*rs[1].no_access.fuel_rural == 0.97);
  CHECK(*rs[0].no_access.elec_rural == 0.8);

  auto c = composite(rs);
  CHECK(c.composite[0] == doctest::Approx(-c.composite[1]));  // two regions: z = ±1
  auto j = to_json(c);
  CHECK(j["regions"][0]["gid"] == "BEN.10_1");
  CHECK(j["regions"][0]["raw"]["poverty_pct"] == doctest::Approx(52.0));

  CHECK_THROWS_AS(parse_demographics_csv("gid,area_km2\nA,1\n"), h2atlas::ParseError);
  auto bad = parse_demographics_csv(
      "gid,area_km2,urban_pop,rural_pop,labor_share,unemployment,poverty,no_access_elec_u,no_access_elec_r,"
      "no_access_fuel_u,no_access_fuel_r\nX,10,1,1,1.5,0,0,0,0,0,0\n");
  CHECK_THROWS_AS(bad[0].validate(), h2atlas::InvalidArgument);
}
