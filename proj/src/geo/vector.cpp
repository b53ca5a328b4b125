#include "h2atlas/geo/vector.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace h2atlas::geo {
namespace {

using nlohmann::json;

Point parse_position(const json& pos) {
  if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
    throw ParseError("GeoJSON position must be [lon, lat]");
  const double lon = pos[0].get<double>(), lat = pos[1].get<double>();
  if (!std::isfinite(lon) || !std::isfinite(lat) || lon < -180.0 || lon > 180.0 || lat < -90.0 ||
      lat > 90.0)
    throw ParseError("GeoJSON coordinate out of range");
  return {lon, lat};
}

Ring parse_ring(const json& coords) {
  if (!coords.is_array()) throw ParseError("GeoJSON ring must be an array");
  Ring ring;
  ring.reserve(coords.size() + 1);
  for (const auto& p : coords) ring.push_back(parse_position(p));
  if (ring.empty()) throw ParseError("empty GeoJSON ring");
  if (ring.front().x != ring.back().x || ring.front().y != ring.back().y) ring.push_back(ring.front());
  if (ring.size() < 4) throw ParseError("GeoJSON ring needs at least 3 distinct vertices");
  if (ring_signed_area(ring) == 0.0) throw ParseError("degenerate GeoJSON ring (zero area)");
  return ring;
}

Polygon parse_polygon(const json& coords) {
  if (!coords.is_array() || coords.empty()) throw ParseError("GeoJSON polygon needs a shell ring");
  Polygon poly;
  for (const auto& r : coords) poly.rings.push_back(parse_ring(r));
  return poly;
}

Polyline parse_line(const json& coords) {
  if (!coords.is_array() || coords.empty()) throw ParseError("GeoJSON line needs vertices");
  Polyline line;
  for (const auto& p : coords) line.push_back(parse_position(p));
  return line;
}

void add_geometry(VectorFeature& f, const json& g) {
  if (g.is_null()) return;
  const auto type = g.at("type").get<std::string>();
  if (type == "GeometryCollection") {
    for (const auto& sub : g.at("geometries")) add_geometry(f, sub);
    return;
  }
  const auto& c = g.at("coordinates");
  if (type == "Point") {
    f.points.push_back(parse_position(c));
  } else if (type == "MultiPoint") {
    for (const auto& p : c) f.points.push_back(parse_position(p));
  } else if (type == "LineString") {
    f.lines.push_back(parse_line(c));
  } else if (type == "MultiLineString") {
    for (const auto& l : c) f.lines.push_back(parse_line(l));
  } else if (type == "Polygon") {
    f.polygons.push_back(parse_polygon(c));
  } else if (type == "MultiPolygon") {
    for (const auto& p : c) f.polygons.push_back(parse_polygon(p));
  } else {
    throw ParseError("unsupported GeoJSON geometry type: " + type);
  }
}

VectorFeature parse_feature(const json& feat) {
  VectorFeature f;
  add_geometry(f, feat.at("geometry"));
  if (auto it = feat.find("properties"); it != feat.end() && it->is_object()) {
    for (const auto& [k, v] : it->items()) f.properties[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return f;
}

template <typename Fn>
void for_each_point(const VectorFeature& f, Fn&& fn) {
  for (const auto& p : f.points) fn(p);
  for (const auto& l : f.lines)
    for (const auto& p : l) fn(p);
  for (const auto& poly : f.polygons)
    for (const auto& r : poly.rings)
      for (const auto& p : r) fn(p);
}

}  // namespace

std::vector<VectorFeature> parse_geojson(const nlohmann::json& doc) {
  try {
    std::vector<VectorFeature> out;
    const auto type = doc.at("type").get<std::string>();
    if (type == "FeatureCollection") {
      for (const auto& feat : doc.at("features")) out.push_back(parse_feature(feat));
    } else if (type == "Feature") {
      out.push_back(parse_feature(doc));
    } else {
      VectorFeature f;
      add_geometry(f, doc);
      out.push_back(std::move(f));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed GeoJSON: ") + e.what());
  }
}

std::vector<VectorFeature> read_geojson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_geojson(doc);
}

VectorFeature project(const VectorFeature& f, const Projection& proj) {
  auto fwd = [&](Point p) { return proj.forward({p.x, p.y}); };
  VectorFeature out;
  out.properties = f.properties;
  for (const auto& p : f.points) out.points.push_back(fwd(p));
  for (const auto& l : f.lines) {
    auto& dst = out.lines.emplace_back();
    for (const auto& p : l) dst.push_back(fwd(p));
  }
  for (const auto& poly : f.polygons) {
    auto& dst = out.polygons.emplace_back();
    for (const auto& r : poly.rings) {
      auto& ring = dst.rings.emplace_back();
      for (const auto& p : r) ring.push_back(fwd(p));
    }
  }
  return out;
}

std::vector<VectorFeature> project(const std::vector<VectorFeature>& fs, const Projection& proj) {
  std::vector<VectorFeature> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(project(f, proj));
  return out;
}

double ring_signed_area(const Ring& ring) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    a += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  return 0.5 * a;
}

double polygon_area(const Polygon& poly) {
  if (poly.rings.empty()) return 0.0;
  double a = std::abs(ring_signed_area(poly.rings.front()));
  for (std::size_t i = 1; i < poly.rings.size(); ++i) a -= std::abs(ring_signed_area(poly.rings[i]));
  return a;
}

LonLat centroid_lonlat(const std::vector<VectorFeature>& fs) {
  double ax = 0, ay = 0, aw = 0;
  for (const auto& f : fs)
    for (const auto& poly : f.polygons)
      for (std::size_t k = 0; k < poly.rings.size(); ++k) {
        const auto& r = poly.rings[k];
        // holes subtract regardless of their winding
        const double sign = (ring_signed_area(r) >= 0) == (k == 0) ? 1.0 : -1.0;
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
          const double cross = r[i].x * r[i + 1].y - r[i + 1].x * r[i].y;
          ax += sign * (r[i].x + r[i + 1].x) * cross;
          ay += sign * (r[i].y + r[i + 1].y) * cross;
          aw += sign * cross;
        }
      }
  if (aw == 0.0) {
    // no polygons: mean of all vertices
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (const auto& f : fs) for_each_point(f, [&](Point p) { sx += p.x; sy += p.y; ++n; });
    if (n == 0) throw InvalidArgument("centroid of empty geometry");
    return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
  }
  return {ax / (3.0 * aw), ay / (3.0 * aw)};
}

Box bounds(const std::vector<VectorFeature>& fs) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box b{inf, inf, -inf, -inf};
  for (const auto& f : fs)
    for_each_point(f, [&](Point p) {
      b.min_x = std::min(b.min_x, p.x);
      b.min_y = std::min(b.min_y, p.y);
      b.max_x = std::max(b.max_x, p.x);
      b.max_y = std::max(b.max_y, p.y);
    });
  if (b.min_x > b.max_x) throw InvalidArgument("bounds of empty geometry");
  return b;
}

GridGeometry grid_covering(const Box& box, double cell_size) {
  if (!(cell_size > 0)) throw InvalidArgument("cell_size must be > 0");
  GridGeometry g;
  g.cell_size = cell_size;
  g.origin_x = std::floor(box.min_x / cell_size) * cell_size;
  g.origin_y = std::floor(box.min_y / cell_size) * cell_size;
  g.ncols = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil((box.max_x - g.origin_x) / cell_size)));
  g.nrows = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil((box.max_y - g.origin_y) / cell_size)));
  return g;
}

}  // namespace h2atlas::geo
