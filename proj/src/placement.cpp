#include "h2atlas/placement.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <unordered_map>

namespace h2atlas::placement {
namespace {

using Eigen::Index;
using Cell = std::pair<Index, Index>;

struct Bounds {
  Index rmin, rmax, cmin, cmax;
};

std::optional<Bounds> eligible_bounds(const geo::Mask& m) {
  Bounds b{m.rows(), -1, m.cols(), -1};
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      if (m(r, c)) {
        b.rmin = std::min(b.rmin, r);
        b.rmax = std::max(b.rmax, r);
        b.cmin = std::min(b.cmin, c);
        b.cmax = std::max(b.cmax, c);
      }
  if (b.rmax < 0) return std::nullopt;
  return b;
}

geo::Point bounds_center(const geo::GridGeometry& g, const Bounds& b) {
  const double x0 = g.origin_x + static_cast<double>(b.cmin) * g.cell_size;
  const double x1 = g.origin_x + static_cast<double>(b.cmax + 1) * g.cell_size;
  const double y1 = g.top() - static_cast<double>(b.rmin) * g.cell_size;
  const double y0 = g.top() - static_cast<double>(b.rmax + 1) * g.cell_size;
  return {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
}

geo::Point bounds_half(const geo::GridGeometry& g, const Bounds& b) {
  return {0.5 * static_cast<double>(b.cmax - b.cmin + 1) * g.cell_size,
          0.5 * static_cast<double>(b.rmax - b.rmin + 1) * g.cell_size};
}

// 4-connected components over cells where `in(r, c)` holds; label -1 elsewhere.
template <typename Pred>
Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> components(Index nr, Index nc,
                                                                                         Pred&& in,
                                                                                         std::int32_t& count) {
  Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> lab;
  lab.setConstant(nr, nc, -1);
  count = 0;
  std::deque<Cell> q;
  for (Index r = 0; r < nr; ++r)
    for (Index c = 0; c < nc; ++c) {
      if (lab(r, c) >= 0 || !in(r, c)) continue;
      const std::int32_t id = count++;
      lab(r, c) = id;
      q.push_back({r, c});
      while (!q.empty()) {
        auto [cr, cc] = q.front();
        q.pop_front();
        const Cell nb[4] = {{cr - 1, cc}, {cr + 1, cc}, {cr, cc - 1}, {cr, cc + 1}};
        for (auto [nr2, nc2] : nb) {
          if (nr2 < 0 || nc2 < 0 || nr2 >= nr || nc2 >= nc) continue;
          if (lab(nr2, nc2) >= 0 || !in(nr2, nc2) || !in.same(cr, cc, nr2, nc2)) continue;
          lab(nr2, nc2) = id;
          q.push_back({nr2, nc2});
        }
      }
    }
  return lab;
}

struct MaskPred {
  const geo::Mask& m;
  bool operator()(Index r, Index c) const { return m(r, c); }
  bool same(Index, Index, Index, Index) const { return true; }
};

template <typename Label>
struct LabelPred {
  const Label& lab;
  bool operator()(Index r, Index c) const { return lab(r, c) >= 0; }
  bool same(Index r0, Index c0, Index r1, Index c1) const { return lab(r0, c0) == lab(r1, c1); }
};

}  // namespace

void TurbineSpec::validate() const {
  if (!(rated_power_mw > 0 && rotor_diameter_m > 0 && hub_height_m > 0))
    throw InvalidArgument("turbine rated power, rotor diameter and hub height must be positive");
}

void PvParams::validate() const {
  if (!(land_use_m2_per_kwp > 0)) throw InvalidArgument("PV land use must be > 0");
  if (!(seed_spacing_m > 0)) throw InvalidArgument("PV seed spacing must be > 0");
}

PlacementSet place_wind(const geo::Mask& mask, const TurbineSpec& spec, double main_direction_deg) {
  spec.validate();
  if (!(main_direction_deg >= 0.0 && main_direction_deg < 360.0))
    throw InvalidArgument("main wind direction must be in [0, 360)");
  PlacementSet out;
  out.tech = Tech::wind;
  const auto bounds = eligible_bounds(mask);
  if (!bounds) return out;

  const auto& g = mask.geometry();
  const geo::Point c = bounds_center(g, *bounds);
  const geo::Point h = bounds_half(g, *bounds);
  const double th = main_direction_deg * std::numbers::pi / 180.0;
  const double s = std::sin(th), co = std::cos(th);
  const double pitch_along = 8.0 * spec.rotor_diameter_m, pitch_across = 4.0 * spec.rotor_diameter_m;
  const double umax = h.x * std::abs(s) + h.y * std::abs(co);
  const double vmax = h.x * std::abs(co) + h.y * std::abs(s);
  // as many nodes as fit in [-umax, umax], centred on the box
  const auto ni = static_cast<Index>(std::floor(2.0 * umax / pitch_along + 1e-9)) + 1;
  const auto nj = static_cast<Index>(std::floor(2.0 * vmax / pitch_across + 1e-9)) + 1;

  for (Index i = 0; i < ni; ++i)
    for (Index j = 0; j < nj; ++j) {
      const double u = (static_cast<double>(i) - 0.5 * static_cast<double>(ni - 1)) * pitch_along;
      const double v = (static_cast<double>(j) - 0.5 * static_cast<double>(nj - 1)) * pitch_across;
      // along = (sin, cos), across = (cos, -sin)
      const geo::Point p{c.x + u * s + v * co, c.y + u * co - v * s};
      const auto cell = g.cell_of(p);
      if (!cell || !mask(cell->first, cell->second)) continue;
      out.items.push_back({p, spec.rated_power_mw, 0.0, {}});
    }
  out.total_capacity_mw = static_cast<double>(out.items.size()) * spec.rated_power_mw;
  return out;
}

bool wind_spacing_ok(const PlacementSet& set, const TurbineSpec& spec, double main_direction_deg) {
  const double th = main_direction_deg * std::numbers::pi / 180.0;
  const double s = std::sin(th), co = std::cos(th);
  const double a = 8.0 * spec.rotor_diameter_m, b = 4.0 * spec.rotor_diameter_m;
  for (std::size_t i = 0; i < set.items.size(); ++i)
    for (std::size_t k = i + 1; k < set.items.size(); ++k) {
      const double dx = set.items[k].location.x - set.items[i].location.x;
      const double dy = set.items[k].location.y - set.items[i].location.y;
      const double u = dx * s + dy * co, v = dx * co - dy * s;
      if ((u / a) * (u / a) + (v / b) * (v / b) < 1.0 - 1e-9) return false;
    }
  return true;
}

PvLayout pv_layout(const geo::Mask& mask, const PvParams& params) {
  params.validate();
  const auto& g = mask.geometry();
  PvLayout lay;
  lay.label.setConstant(mask.rows(), mask.cols(), -1);
  const auto bounds = eligible_bounds(mask);
  if (!bounds) return lay;

  // lattice seeds on eligible cells
  const geo::Point c = bounds_center(g, *bounds);
  const geo::Point h = bounds_half(g, *bounds);
  const double sp = params.seed_spacing_m;
  const auto imax = static_cast<Index>(std::floor(h.x / sp)), jmax = static_cast<Index>(std::floor(h.y / sp));
  for (Index j = jmax; j >= -jmax; --j)
    for (Index i = -imax; i <= imax; ++i) {
      const geo::Point p{c.x + static_cast<double>(i) * sp, c.y + static_cast<double>(j) * sp};
      if (auto cell = g.cell_of(p); cell && mask(cell->first, cell->second)) lay.seeds.push_back(p);
    }

  // components the lattice missed get a seed at their first cell
  std::int32_t ncomp = 0;
  const auto comp = components(mask.rows(), mask.cols(), MaskPred{mask}, ncomp);
  std::vector<bool> seeded(static_cast<std::size_t>(ncomp), false);
  for (const auto& p : lay.seeds) {
    auto cell = g.cell_of(p);
    seeded[static_cast<std::size_t>(comp(cell->first, cell->second))] = true;
  }
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index col = 0; col < mask.cols(); ++col) {
      const auto id = comp(r, col);
      if (id >= 0 && !seeded[static_cast<std::size_t>(id)]) {
        seeded[static_cast<std::size_t>(id)] = true;
        lay.seeds.push_back(g.cell_center(r, col));
      }
    }

  // nearest seed via a bucket grid of seed_spacing; ties -> lowest index
  auto key = [&](double x, double y) {
    return std::pair{static_cast<std::int64_t>(std::floor((x - g.origin_x) / sp)),
                     static_cast<std::int64_t>(std::floor((y - g.origin_y) / sp))};
  };
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::int32_t>> buckets;
  std::int64_t bx0 = std::numeric_limits<std::int64_t>::max(), bx1 = std::numeric_limits<std::int64_t>::min();
  std::int64_t by0 = bx0, by1 = bx1;
  for (std::size_t k = 0; k < lay.seeds.size(); ++k) {
    auto kk = key(lay.seeds[k].x, lay.seeds[k].y);
    buckets[kk].push_back(static_cast<std::int32_t>(k));
    bx0 = std::min(bx0, kk.first), bx1 = std::max(bx1, kk.first);
    by0 = std::min(by0, kk.second), by1 = std::max(by1, kk.second);
  }

  for (Index r = 0; r < mask.rows(); ++r)
    for (Index col = 0; col < mask.cols(); ++col) {
      if (!mask(r, col)) continue;
      const geo::Point p = g.cell_center(r, col);
      const auto [kx, ky] = key(p.x, p.y);
      double best = std::numeric_limits<double>::infinity();
      std::int32_t best_id = -1;
      const std::int64_t ring_max =
          std::max({std::abs(kx - bx0), std::abs(kx - bx1), std::abs(ky - by0), std::abs(ky - by1)});
      for (std::int64_t ring = 0; ring <= ring_max; ++ring) {
        if (best_id >= 0 && static_cast<double>(ring - 1) * sp > std::sqrt(best)) break;
        for (std::int64_t dx = -ring; dx <= ring; ++dx)
          for (std::int64_t dy = -ring; dy <= ring; ++dy) {
            if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
            auto it = buckets.find({kx + dx, ky + dy});
            if (it == buckets.end()) continue;
            for (auto id : it->second) {
              const double ex = lay.seeds[id].x - p.x, ey = lay.seeds[id].y - p.y;
              const double d2 = ex * ex + ey * ey;
              if (d2 < best || (d2 == best && id < best_id)) {
                best = d2;
                best_id = id;
              }
            }
          }
      }
      lay.label(r, col) = best_id;
    }
  return lay;
}

PlacementSet place_pv(const geo::Mask& mask, const PvParams& params) {
  const auto lay = pv_layout(mask, params);
  const auto& g = mask.geometry();
  PlacementSet out;
  out.tech = Tech::pv;
  std::int32_t nparks = 0;
  const auto parks = components(mask.rows(), mask.cols(), LabelPred<decltype(lay.label)>{lay.label}, nparks);
  std::vector<std::vector<Cell>> cells(static_cast<std::size_t>(nparks));
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index c = 0; c < mask.cols(); ++c)
      if (parks(r, c) >= 0) cells[static_cast<std::size_t>(parks(r, c))].push_back({r, c});

  const double cell_area = g.cell_size * g.cell_size;
  for (const auto& park : cells) {
    PlacementItem item;
    double sx = 0, sy = 0;
    for (auto [r, c] : park) {
      sx += g.center_x(c);
      sy += g.center_y(r);
    }
    const double n = static_cast<double>(park.size());
    item.location = {sx / n, sy / n};
    item.area_m2 = n * cell_area;
    item.capacity_mw = item.area_m2 / params.land_use_m2_per_kwp / 1000.0;
    item.footprint = trace_cells(g, park);
    out.total_capacity_mw += item.capacity_mw;
    out.items.push_back(std::move(item));
  }
  return out;
}

double capacity_from_area(double area_km2, double land_use_m2_per_kwp) {
  if (!(area_km2 > 0) || !(land_use_m2_per_kwp > 0))
    throw InvalidArgument("area and land use must be positive");
  return area_km2 * 1e6 / land_use_m2_per_kwp / 1e6;
}

double circular_mean_deg(std::span<const double> bearings) {
  if (bearings.empty()) throw InvalidArgument("circular mean of empty series");
  double s = 0, c = 0;
  for (double b : bearings) {
    s += std::sin(b * std::numbers::pi / 180.0);
    c += std::cos(b * std::numbers::pi / 180.0);
  }
  double deg = std::atan2(s, c) * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

std::vector<geo::Polygon> trace_cells(const geo::GridGeometry& g, std::span<const Cell> cells) {
  // vertices on the cell-corner lattice: (col, row) with row growing south
  using V = std::pair<Index, Index>;
  struct Hasher {
    std::size_t operator()(const Cell& c) const { return std::hash<Index>()(c.first * 1000003 + c.second); }
  };
  std::unordered_map<Cell, bool, Hasher> in;
  for (const auto& c : cells) in[c] = true;
  auto has = [&](Index r, Index c) { return in.count({r, c}) > 0; };

  std::map<V, std::vector<std::pair<V, bool>>> out_edges;  // start -> (end, used)
  for (auto [r, c] : cells) {
    // counter-clockwise in planar coordinates: bottom, right, top, left
    if (!has(r + 1, c)) out_edges[{c, r + 1}].push_back({{c + 1, r + 1}, false});
    if (!has(r, c + 1)) out_edges[{c + 1, r + 1}].push_back({{c + 1, r}, false});
    if (!has(r - 1, c)) out_edges[{c + 1, r}].push_back({{c, r}, false});
    if (!has(r, c - 1)) out_edges[{c, r}].push_back({{c, r + 1}, false});
  }

  auto to_point = [&](V v) {
    return geo::Point{g.origin_x + static_cast<double>(v.first) * g.cell_size,
                      g.top() - static_cast<double>(v.second) * g.cell_size};
  };

  std::vector<geo::Ring> rings;
  for (auto& [start, edges] : out_edges) {
    for (std::size_t e0 = 0; e0 < edges.size(); ++e0) {
      if (edges[e0].second) continue;
      geo::Ring ring{to_point(start)};
      V prev = start;
      V cur = edges[e0].first;
      edges[e0].second = true;
      while (cur != start) {
        ring.push_back(to_point(cur));
        auto& cand = out_edges.at(cur);
        // planar direction of the incoming edge (row axis points south)
        const Index dxi = cur.first - prev.first, dyi = -(cur.second - prev.second);
        std::size_t pick = cand.size();
        Index best_turn = std::numeric_limits<Index>::min();
        for (std::size_t k = 0; k < cand.size(); ++k) {
          if (cand[k].second) continue;
          const Index dxo = cand[k].first.first - cur.first, dyo = -(cand[k].first.second - cur.second);
          const Index turn = dxi * dyo - dyi * dxo;  // > 0 left, 0 straight, < 0 right
          if (turn > best_turn) {
            best_turn = turn;
            pick = k;
          }
        }
        if (pick == cand.size()) throw Error("cell outline tracing failed");
        cand[pick].second = true;
        prev = cur;
        cur = cand[pick].first;
      }
      ring.push_back(ring.front());
      // drop collinear vertices
      geo::Ring simple;
      for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
        const auto& a = ring[k == 0 ? ring.size() - 2 : k - 1];
        const auto& b = ring[k];
        const auto& c = ring[k + 1];
        if ((b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) != 0.0) simple.push_back(b);
      }
      simple.push_back(simple.front());
      rings.push_back(std::move(simple));
    }
  }

  std::vector<geo::Polygon> polys;
  std::vector<const geo::Ring*> holes;
  for (const auto& r : rings) {
    if (geo::ring_signed_area(r) > 0) polys.push_back({{r}});
    else holes.push_back(&r);
  }
  for (const auto* hole : holes) {
    // a point just right of the first hole edge lies in the hole
    const auto& a = (*hole)[0];
    const auto& b = (*hole)[1];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double eps = 1e-3 * g.cell_size;
    const geo::Point probe{0.5 * (a.x + b.x) + eps * (b.y - a.y) / len, 0.5 * (a.y + b.y) - eps * (b.x - a.x) / len};
    for (auto& poly : polys) {
      bool inside = false;
      const auto& shell = poly.rings.front();
      for (std::size_t i = 1; i < shell.size(); ++i) {
        const auto& p = shell[i];
        const auto& q = shell[i - 1];
        if (((p.y > probe.y) != (q.y > probe.y)) && (probe.x < (q.x - p.x) * (probe.y - p.y) / (q.y - p.y) + p.x))
          inside = !inside;
      }
      if (inside) {
        poly.rings.push_back(*hole);
        break;
      }
    }
  }
  return polys;
}

nlohmann::json to_geojson(const PlacementSet& set, const geo::Projection& proj) {
  auto ll = [&](geo::Point p) {
    auto q = proj.inverse(p);
    return nlohmann::json::array({q.lon, q.lat});
  };
  auto features = nlohmann::json::array();
  for (const auto& item : set.items) {
    nlohmann::json f{{"type", "Feature"}};
    if (set.tech == Tech::wind) {
      f["geometry"] = {{"type", "Point"}, {"coordinates", ll(item.location)}};
      f["properties"] = {{"capacity_mw", item.capacity_mw}};
    } else {
      auto polys = nlohmann::json::array();
      for (const auto& poly : item.footprint) {
        auto rings = nlohmann::json::array();
        for (const auto& ring : poly.rings) {
          auto coords = nlohmann::json::array();
          for (const auto& p : ring) coords.push_back(ll(p));
          rings.push_back(coords);
        }
        polys.push_back(rings);
      }
      f["geometry"] = {{"type", "MultiPolygon"}, {"coordinates", polys}};
      f["properties"] = {{"area_m2", item.area_m2}, {"capacity_kwp", item.capacity_mw * 1000.0}};
    }
    features.push_back(std::move(f));
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace h2atlas::placement
