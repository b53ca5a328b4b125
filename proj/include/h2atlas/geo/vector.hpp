#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "h2atlas/geo/grid.hpp"
#include "h2atlas/geo/projection.hpp"

namespace h2atlas::geo {

using Ring = std::vector<Point>;

/// First ring is the shell, the rest are holes. Rings are stored closed
/// (last vertex repeats the first).
struct Polygon {
  std::vector<Ring> rings;
};

using Polyline = std::vector<Point>;

/// A feature with its geometry flattened into points, lines and polygons.
/// Coordinates are lon/lat degrees on input and metres after projection.
struct VectorFeature {
  std::vector<Point> points;
  std::vector<Polyline> lines;
  std::vector<Polygon> polygons;
  std::map<std::string, std::string> properties;

  bool empty() const { return points.empty() && lines.empty() && polygons.empty(); }
};

/// Parse a GeoJSON FeatureCollection (or single Feature / bare geometry).
/// Rings are closed if open; out-of-range coordinates and degenerate rings
/// are rejected.
std::vector<VectorFeature> parse_geojson(const nlohmann::json& doc);
std::vector<VectorFeature> read_geojson(const std::string& path);

VectorFeature project(const VectorFeature& f, const Projection& proj);
std::vector<VectorFeature> project(const std::vector<VectorFeature>& fs, const Projection& proj);

/// Area-weighted centroid of all polygons in lon/lat (planar shoelace on
/// degrees; adequate for choosing a projection centre).
LonLat centroid_lonlat(const std::vector<VectorFeature>& fs);

/// Bounding box of all coordinates of the features.
struct Box {
  double min_x, min_y, max_x, max_y;
};
Box bounds(const std::vector<VectorFeature>& fs);

/// Grid covering `box` with edges snapped outward to multiples of cell_size.
GridGeometry grid_covering(const Box& box, double cell_size);

double ring_signed_area(const Ring& ring);
double polygon_area(const Polygon& poly);

}  // namespace h2atlas::geo
