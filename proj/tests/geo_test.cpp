#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "h2atlas/geo/projection.hpp"
#include "h2atlas/geo/raster.hpp"
#include "h2atlas/geo/vector.hpp"

using namespace h2atlas::geo;

namespace {

GridGeometry square_grid(Eigen::Index n, double cs = 100.0) {
  return GridGeometry{0.0, 0.0, cs, n, n};
}

Mask random_mask(std::mt19937_64& rng, const GridGeometry& g, double p) {
  std::bernoulli_distribution b(p);
  Mask m(g, false);
  for (Eigen::Index r = 0; r < g.nrows; ++r)
    for (Eigen::Index c = 0; c < g.ncols; ++c) m(r, c) = b(rng);
  return m;
}

}  // namespace

TEST_CASE("projection centre maps to origin") {
  Projection p(0.0, 0.0);
  auto q = p.forward({0.0, 0.0});
  CHECK(q.x == 0.0);
  CHECK(q.y == 0.0);
}

TEST_CASE("projection matches textbook LAEA values") {
  // frozen from an independent evaluation of the spherical LAEA equations
  Projection p(0.0, 0.0);
  auto q = p.forward({0.0, 1.0});
  CHECK(q.x == doctest::Approx(0.0));
  CHECK(q.y == doctest::Approx(111193.66890730544).epsilon(1e-12));

  Projection b(2.4, 6.6);
  auto q1 = b.forward({2.5, 7.0});
  CHECK(q1.x == doctest::Approx(11036.690676292113).epsilon(1e-11));
  CHECK(q1.y == doctest::Approx(44479.065464613435).epsilon(1e-11));
  auto q2 = b.forward({3.0, 8.0});
  CHECK(q2.x == doctest::Approx(66072.37691296873).epsilon(1e-11));
  CHECK(q2.y == doctest::Approx(155711.10245632075).epsilon(1e-11));
}

TEST_CASE("projection round trip within 500 km") {
  Projection p(2.4, 6.6);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-500e3 / std::sqrt(2.0), 500e3 / std::sqrt(2.0));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Point a{u(rng), u(rng)};
    Point b = p.forward(p.inverse(a));
    worst = std::max(worst, std::hypot(a.x - b.x, a.y - b.y));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("projection antipode is singular") {
  Projection p(0.0, 0.0);
  CHECK_THROWS_WITH_AS(p.forward({180.0, 0.0}), "projection singularity", h2atlas::Error);
  CHECK_THROWS(p.forward({0.0, 91.0}));
}

TEST_CASE("rasterized area of a lon/lat box matches spherical area") {
  const double lon0 = 2.0, lon1 = 3.0, lat0 = 6.0, lat1 = 7.0;
  Projection p(2.5, 6.5);
  Ring ring;
  const int n = 200;  // densify edges so the projected outline follows the graticule
  for (int i = 0; i < n; ++i) ring.push_back(p.forward({lon0 + (lon1 - lon0) * i / n, lat0}));
  for (int i = 0; i < n; ++i) ring.push_back(p.forward({lon1, lat0 + (lat1 - lat0) * i / n}));
  for (int i = 0; i < n; ++i) ring.push_back(p.forward({lon1 - (lon1 - lon0) * i / n, lat1}));
  for (int i = 0; i < n; ++i) ring.push_back(p.forward({lon0, lat1 - (lat1 - lat0) * i / n}));
  ring.push_back(ring.front());
  VectorFeature f;
  f.polygons.push_back({{ring}});
  std::vector<VectorFeature> fs{f};
  auto g = grid_covering(bounds(fs), 250.0);
  const double raster_km2 = area_of(rasterize(fs, g));
  const double d2r = M_PI / 180.0;
  const double sphere_km2 =
      kEarthRadius * kEarthRadius * (lon1 - lon0) * d2r * (std::sin(lat1 * d2r) - std::sin(lat0 * d2r)) * 1e-6;
  CHECK(std::abs(raster_km2 - sphere_km2) / sphere_km2 < 0.005);
}

TEST_CASE("rasterize square polygon covering k x k centres") {
  auto g = square_grid(20);
  VectorFeature f;
  f.polygons.push_back(oracle::rect(300.0, 500.0, 1000.0, 1200.0));  // 7 x 7 centres
  std::vector<VectorFeature> fs{f};
  auto m = rasterize(fs, g);
  CHECK(popcount(m) == 49);
  CHECK(m == oracle::rasterize(fs, g));
}

TEST_CASE("rasterize empty list gives all false") {
  auto g = square_grid(10);
  auto m = rasterize(std::vector<VectorFeature>{}, g);
  CHECK(popcount(m) == 0);
}

TEST_CASE("rasterize polyline along a row") {
  auto g = square_grid(16);
  VectorFeature f;
  const double y = g.center_y(5);
  f.lines.push_back({{-50.0, y}, {2000.0, y}});
  auto m = rasterize(std::vector<VectorFeature>{f}, g);
  for (Eigen::Index r = 0; r < 16; ++r)
    for (Eigen::Index c = 0; c < 16; ++c) CHECK(m(r, c) == (r == 5));
}

TEST_CASE("rasterize polygon with hole") {
  auto g = square_grid(20);
  VectorFeature f;
  auto poly = oracle::rect(0.0, 0.0, 2000.0, 2000.0);
  poly.rings.push_back(oracle::rect(500.0, 500.0, 1500.0, 1500.0).rings[0]);
  f.polygons.push_back(poly);
  auto m = rasterize(std::vector<VectorFeature>{f}, g);
  CHECK(popcount(m) == 400 - 100);
}

TEST_CASE("rasterize equals per-pixel oracle on random features") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    GridGeometry g{1234.5, -987.25, 100.0, 48 + trial, 40};
    std::vector<VectorFeature> fs;
    for (int i = 0; i < 4; ++i) fs.push_back(oracle::random_feature(rng, g));
    CHECK(rasterize(fs, g) == oracle::rasterize(fs, g));
  }
}

TEST_CASE("dilate single cell by two cells gives a disc") {
  auto g = square_grid(15);
  Mask m(g, false);
  m(7, 7) = true;
  auto d = dilate(m, 200.0);
  CHECK(d == oracle::dilate(m, 200.0));
  CHECK(popcount(d) == 13);  // integer points with dx^2+dy^2 <= 4
}

TEST_CASE("dilate radius zero is identity and saturation holds") {
  std::mt19937_64 rng(3);
  auto g = square_grid(32);
  auto m = random_mask(rng, g, 0.1);
  CHECK(dilate(m, 0.0) == m);
  Mask full(g, true);
  CHECK(dilate(full, 730.0) == full);
  CHECK_THROWS_AS(dilate(m, -1.0), h2atlas::InvalidArgument);
}

TEST_CASE("dilate equals brute-force oracle on 64x64 grids, r <= 5 cells") {
  std::mt19937_64 rng(5);
  auto g = square_grid(64);
  for (double r : {50.0, 100.0, 141.43, 200.0, 250.0, 300.0, 360.5, 424.3, 500.0}) {
    auto m = random_mask(rng, g, 0.01);
    CHECK(dilate(m, r) == oracle::dilate(m, r));
  }
}

TEST_CASE("dilate properties: monotone, extensive, composition") {
  std::mt19937_64 rng(9);
  auto g = square_grid(64);
  for (int t = 0; t < 10; ++t) {
    auto a = random_mask(rng, g, 0.02);
    auto b = a | random_mask(rng, g, 0.02);
    std::uniform_real_distribution<double> ur(0.0, 500.0);
    const double r1 = ur(rng), r2 = ur(rng);
    auto da = dilate(a, r1), db = dilate(b, r1);
    CHECK(((da.values() && !db.values()).count()) == 0);
    CHECK(area_of(da) >= area_of(a));
    // on a lattice the Minkowski sum of two discs sits inside the disc of the
    // summed radius; the two agree up to one cell at the boundary
    auto twice = dilate(dilate(a, r1), r2);
    auto once = dilate(a, r1 + r2);
    CHECK(((twice.values() && !once.values()).count()) == 0);
    auto grown = dilate(twice, g.cell_size * 1.5);
    CHECK(((once.values() && !grown.values()).count()) == 0);
  }
}

TEST_CASE("area_of") {
  auto g = square_grid(20);
  Mask m(g, false);
  for (int i = 0; i < 100; ++i) m(i / 20, i % 20) = true;
  CHECK(area_of(m) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(area_of(Mask(g, false)) == 0.0);
  std::mt19937_64 rng(1);
  auto r = random_mask(rng, g, 0.3);
  CHECK(area_of(r) == doctest::Approx(oracle::count(r) * 0.01));
}

TEST_CASE("ascii grid round trip and errors") {
  GridGeometry g{-1000.125, 2500.5, 100.0, 4, 3};
  FloatGrid grid(g, 0.0);
  grid.set_nodata(-9999.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (Eigen::Index r = 0; r < 3; ++r)
    for (Eigen::Index c = 0; c < 4; ++c) grid(r, c) = nd(rng) * 1e3;
  grid(1, 2) = -9999.0;
  auto path = (std::filesystem::temp_directory_path() / "h2atlas_geo_test.asc").string();
  write_grid(path, grid);
  auto back = read_grid(path);
  CHECK(back == grid);
  CHECK(back.nodata() == -9999.0);
  CHECK(back(1, 2) == -9999.0);
  CHECK(to_mask(back)(1, 2) == false);
  std::filesystem::remove(path);

  std::string text = format_grid(grid);
  CHECK(parse_grid(text) == grid);
  auto bad = text;
  bad.replace(bad.find("ncols 4"), 7, "ncols 5");
  CHECK_THROWS_AS(parse_grid(bad), h2atlas::ParseError);
  CHECK_THROWS_AS(parse_grid("ncols 2\nnrows 1\n"), h2atlas::ParseError);
  CHECK_THROWS_AS(parse_grid("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nnodata_value 0\n1 2\n"),
                  h2atlas::ParseError);
}

TEST_CASE("geojson parsing closes rings and rejects bad input") {
  auto doc = nlohmann::json::parse(R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"name":"a","n":3},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}},
    {"type":"Feature","properties":{},
     "geometry":{"type":"MultiLineString","coordinates":[[[0,0],[1,1]],[[2,2],[3,3]]]}}]})");
  auto fs = parse_geojson(doc);
  REQUIRE(fs.size() == 2);
  CHECK(fs[0].polygons[0].rings[0].size() == 5);
  CHECK(fs[0].properties.at("name") == "a");
  CHECK(fs[0].properties.at("n") == "3");
  CHECK(fs[1].lines.size() == 2);
  CHECK_THROWS_AS(parse_geojson(nlohmann::json::parse(R"({"type":"Point","coordinates":[200,0]})")),
                  h2atlas::ParseError);
  CHECK_THROWS_AS(parse_geojson(nlohmann::json::parse(R"({"type":"Polygon","coordinates":[[[0,0],[1,1]]]})")),
                  h2atlas::ParseError);
}
