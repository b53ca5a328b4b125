#pragma once
// Synthetic fixtures shared between unit and acceptance tests.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "h2atlas/eligibility.hpp"

namespace fixture {

using h2atlas::geo::GridGeometry;
using h2atlas::geo::VectorFeature;

struct EligibilityCase {
  GridGeometry grid;
  VectorFeature region;
  std::vector<h2atlas::eligibility::CriterionSpec> criteria;
  std::map<std::string, std::vector<VectorFeature>> layers;
  h2atlas::eligibility::BufferMap buffers;
};

inline double cx(int col) { return (col + 0.5) * 100.0; }
inline double cy(int row, int nrows = 100) { return (nrows - row - 0.5) * 100.0; }

/// 100 x 100 cell region with roads, settlements and forests whose buffered
/// union leaves exactly 2380 of 10000 cells (23.8 %).
inline EligibilityCase three_criteria_238() {
  EligibilityCase c;
  c.grid = GridGeometry{0.0, 0.0, 100.0, 100, 100};
  c.region.polygons.push_back(oracle::rect(0.0, 0.0, 10000.0, 10000.0));
  c.criteria = {{1, "Settlements (connected)", "settlements_connected"},
                {4, "Primary Roadways", "roads_primary"},
                {22, "Woodlands (All Forests)", "forests"}};
  VectorFeature settlements;
  for (auto [col, row] : std::vector<std::pair<int, int>>{
           {61, 11}, {83, 11}, {61, 37}, {83, 37}, {61, 64}, {83, 64}, {61, 87}, {99, 71}})
    settlements.points.push_back({cx(col), cy(row)});
  VectorFeature road;
  road.lines.push_back({{0.0, cy(50)}, {10000.0, cy(50)}});
  VectorFeature forest;
  forest.polygons.push_back(oracle::rect(0.0, 0.0, 5000.0, 10000.0));
  c.layers["settlements_connected"] = {settlements};
  c.layers["roads_primary"] = {road};
  c.layers["forests"] = {forest};
  c.buffers = {{1, 1000.0}, {4, 200.0}, {22, 0.0}};
  return c;
}

/// Random fixture: up to 256 x 256 cells, up to 5 criteria.
inline EligibilityCase random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(32, 256), ncrit(1, 5), nfeat(1, 4);
  std::uniform_real_distribution<double> buf(0.0, 600.0);
  EligibilityCase c;
  c.grid = GridGeometry{0.0, 0.0, 100.0, dim(rng), dim(rng)};
  // region: random convex-ish polygon covering most of the grid
  const double w = c.grid.right(), h = c.grid.top();
  std::uniform_real_distribution<double> jitter(0.0, 0.2);
  c.region.polygons.push_back({{{{w * jitter(rng), h * jitter(rng)},
                                 {w * (1 - jitter(rng)), h * jitter(rng)},
                                 {w * (1 - jitter(rng)), h * (1 - jitter(rng))},
                                 {w * jitter(rng), h * (1 - jitter(rng))},
                                 {0, 0}}}});
  c.region.polygons[0].rings[0].back() = c.region.polygons[0].rings[0].front();
  const auto& cat = h2atlas::eligibility::default_catalog();
  std::vector<int> ids(33);
  for (int i = 0; i < 33; ++i) ids[i] = i + 1;
  std::shuffle(ids.begin(), ids.end(), rng);
  const int k = ncrit(rng);
  for (int i = 0; i < k; ++i) {
    const auto& spec = cat[ids[i] - 1];
    c.criteria.push_back(spec);
    std::vector<VectorFeature> fs;
    const int nf = nfeat(rng);
    for (int j = 0; j < nf; ++j) fs.push_back(oracle::random_feature(rng, c.grid));
    c.layers[spec.source_layer] = fs;
    c.buffers[spec.id] = buf(rng);
  }
  return c;
}

/// Brute-force eligibility mask: per-pixel rasterization and all-pairs
/// dilation, composed cell by cell.
inline h2atlas::geo::Mask oracle_mask(const EligibilityCase& c) {
  auto region = oracle::rasterize({c.region}, c.grid);
  for (const auto& crit : c.criteria) {
    auto it = c.layers.find(crit.source_layer);
    if (it == c.layers.end()) continue;
    auto excl = oracle::dilate(oracle::rasterize(it->second, c.grid), c.buffers.at(crit.id));
    for (Eigen::Index r = 0; r < c.grid.nrows; ++r)
      for (Eigen::Index col = 0; col < c.grid.ncols; ++col)
        if (excl(r, col)) region(r, col) = false;
  }
  return region;
}

}  // namespace fixture
