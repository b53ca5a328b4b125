#include "h2atlas/geo/raster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace h2atlas::geo {
namespace {

using Eigen::Index;

// Smallest column whose centre x is >= s.
Index first_col_at_or_after(const GridGeometry& g, double s) {
  Index c = static_cast<Index>(std::ceil((s - g.origin_x) / g.cell_size - 0.5));
  c = std::clamp<Index>(c, 0, g.ncols);
  while (c > 0 && g.center_x(c - 1) >= s) --c;
  while (c < g.ncols && g.center_x(c) < s) ++c;
  return c;
}

void burn_polygon(const Polygon& poly, const GridGeometry& g, Mask::ArrayType& out) {
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& r : poly.rings)
    for (const auto& p : r) {
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  std::vector<double> xs;
  for (Index row = 0; row < g.nrows; ++row) {
    const double y = g.center_y(row);
    if (y < ymin || y > ymax) continue;
    xs.clear();
    for (const auto& ring : poly.rings)
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Point a = ring[i], b = ring[i + 1];
        if ((a.y > y) != (b.y > y)) xs.push_back((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x);
      }
    std::sort(xs.begin(), xs.end());
    // centre x is inside iff an odd number of crossings lie at or left of it
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const Index c0 = first_col_at_or_after(g, xs[k]);
      const Index c1 = first_col_at_or_after(g, xs[k + 1]);
      for (Index c = c0; c < c1; ++c) out(row, c) = true;
    }
  }
}

void burn_segment(Point a, Point b, const GridGeometry& g, Mask::ArrayType& out) {
  const double half = 0.5 * g.cell_size;
  const double h2 = half * half;
  const double minx = std::min(a.x, b.x) - half, maxx = std::max(a.x, b.x) + half;
  const double miny = std::min(a.y, b.y) - half, maxy = std::max(a.y, b.y) + half;
  const Index c0 = first_col_at_or_after(g, minx);
  const Index r0 = std::max<Index>(0, static_cast<Index>(std::floor((g.top() - maxy) / g.cell_size - 0.5)));
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (Index row = r0; row < g.nrows; ++row) {
    const double py = g.center_y(row);
    if (py > maxy) continue;
    if (py < miny) break;
    for (Index col = c0; col < g.ncols; ++col) {
      const double px = g.center_x(col);
      if (px > maxx) break;
      double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = px - (a.x + t * dx), ey = py - (a.y + t * dy);
      if (ex * ex + ey * ey <= h2) out(row, col) = true;
    }
  }
}

std::string fmt17(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view tok) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError("bad number in grid: " + std::string(tok));
  return v;
}

}  // namespace

Mask rasterize(std::span<const VectorFeature> features, const GridGeometry& geometry) {
  Mask out(geometry, false);
  auto& v = out.values();
  for (const auto& f : features) {
    for (const auto& poly : f.polygons) burn_polygon(poly, geometry, v);
    for (const auto& line : f.lines) {
      if (line.size() == 1) burn_segment(line[0], line[0], geometry, v);
      for (std::size_t i = 0; i + 1 < line.size(); ++i) burn_segment(line[i], line[i + 1], geometry, v);
    }
    for (const auto& p : f.points) burn_segment(p, p, geometry, v);
  }
  return out;
}

std::vector<Index> disc_half_widths(double radius_m, double cell_size) {
  if (radius_m < 0.0 || !std::isfinite(radius_m)) throw InvalidArgument("dilation radius must be >= 0");
  const double rc = radius_m / cell_size;
  const double rc2 = rc * rc + 1e-9;
  std::vector<Index> w;
  for (Index dy = 0; static_cast<double>(dy * dy) <= rc2; ++dy) {
    Index x = static_cast<Index>(std::sqrt(std::max(0.0, rc2 - static_cast<double>(dy * dy))));
    while (static_cast<double>((x + 1) * (x + 1) + dy * dy) <= rc2) ++x;
    while (x > 0 && static_cast<double>(x * x + dy * dy) > rc2) --x;
    w.push_back(x);
  }
  return w;
}

Mask dilate(const Mask& mask, double radius_m) {
  const auto hw = disc_half_widths(radius_m, mask.cell_size());
  const Index radius_cells = static_cast<Index>(hw.size()) - 1;
  if (radius_cells == 0 && hw[0] == 0) return mask;

  const Index nr = mask.rows(), nc = mask.cols();
  const auto& in = mask.values();

  // prefix[r][c] = number of set cells in row r left of column c
  std::vector<std::vector<std::int32_t>> prefix(static_cast<std::size_t>(nr));
  for (Index r = 0; r < nr; ++r) {
    if (!in.row(r).any()) continue;
    auto& p = prefix[static_cast<std::size_t>(r)];
    p.assign(static_cast<std::size_t>(nc + 1), 0);
    for (Index c = 0; c < nc; ++c) p[static_cast<std::size_t>(c + 1)] = p[static_cast<std::size_t>(c)] + (in(r, c) ? 1 : 0);
  }

  Mask out(mask.geometry(), false);
  auto& o = out.values();
  for (Index r = 0; r < nr; ++r) {
    for (Index dy = -radius_cells; dy <= radius_cells; ++dy) {
      const Index src = r + dy;
      if (src < 0 || src >= nr) continue;
      const auto& p = prefix[static_cast<std::size_t>(src)];
      if (p.empty()) continue;
      const Index w = hw[static_cast<std::size_t>(dy < 0 ? -dy : dy)];
      for (Index c = 0; c < nc; ++c) {
        if (o(r, c)) continue;
        const Index lo = std::max<Index>(0, c - w), hi = std::min<Index>(nc - 1, c + w);
        if (p[static_cast<std::size_t>(hi + 1)] - p[static_cast<std::size_t>(lo)] > 0) o(r, c) = true;
      }
    }
  }
  return out;
}

std::string format_grid(const FloatGrid& grid) {
  const auto& g = grid.geometry();
  std::string s;
  s.reserve(static_cast<std::size_t>(g.size()) * 8 + 128);
  s += "ncols " + std::to_string(g.ncols) + "\n";
  s += "nrows " + std::to_string(g.nrows) + "\n";
  s += "xllcorner " + fmt17(g.origin_x) + "\n";
  s += "yllcorner " + fmt17(g.origin_y) + "\n";
  s += "cellsize " + fmt17(g.cell_size) + "\n";
  s += "nodata_value " + fmt17(grid.nodata().value_or(-9999.0)) + "\n";
  for (Index r = 0; r < g.nrows; ++r) {
    for (Index c = 0; c < g.ncols; ++c) {
      if (c) s += ' ';
      s += fmt17(grid(r, c));
    }
    s += '\n';
  }
  return s;
}

FloatGrid parse_grid(const std::string& text) {
  std::istringstream in(text);
  GridGeometry g;
  double nodata = -9999.0;
  const char* keys[] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};
  for (const char* key : keys) {
    std::string k, v;
    if (!(in >> k >> v)) throw ParseError(std::string("grid header missing ") + key);
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (k != key) throw ParseError("grid header: expected " + std::string(key) + ", got " + k);
    const double d = parse_double(v);
    if (k == "ncols") g.ncols = static_cast<Index>(d);
    else if (k == "nrows") g.nrows = static_cast<Index>(d);
    else if (k == "xllcorner") g.origin_x = d;
    else if (k == "yllcorner") g.origin_y = d;
    else if (k == "cellsize") g.cell_size = d;
    else nodata = d;
  }
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("grid header: ") + e.what());
  }
  FloatGrid grid(g, 0.0);
  grid.set_nodata(nodata);
  std::string line;
  std::getline(in, line);  // rest of header line
  Index row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (row >= g.nrows) throw ParseError("grid has more data rows than nrows");
    std::istringstream ls(line);
    std::string tok;
    Index col = 0;
    while (ls >> tok) {
      if (col >= g.ncols) throw ParseError("grid row " + std::to_string(row) + " has more values than ncols");
      grid(row, col++) = parse_double(tok);
    }
    if (col != g.ncols) throw ParseError("grid row " + std::to_string(row) + " has fewer values than ncols");
    ++row;
  }
  if (row != g.nrows) throw ParseError("grid has " + std::to_string(row) + " rows, header says " + std::to_string(g.nrows));
  return grid;
}

void write_grid(const std::string& path, const FloatGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << format_grid(grid);
}

void write_grid(const std::string& path, const Mask& mask) { write_grid(path, to_float(mask)); }

FloatGrid read_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str());
}

Mask to_mask(const FloatGrid& grid) {
  const double nd = grid.nodata().value_or(std::numeric_limits<double>::quiet_NaN());
  return Mask(grid.geometry(), (grid.values() != 0.0) && (grid.values() != nd));
}

FloatGrid to_float(const Mask& mask) {
  FloatGrid g(mask.geometry(), mask.values().cast<double>());
  g.set_nodata(-9999.0);
  return g;
}

}  // namespace h2atlas::geo
