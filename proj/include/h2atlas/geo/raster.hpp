#pragma once

#include <span>
#include <string>

#include "h2atlas/geo/grid.hpp"
#include "h2atlas/geo/vector.hpp"

namespace h2atlas::geo {

/// Burns planar features into a boolean mask. A cell is set when its
/// centre lies inside a polygon (even-odd over the polygon's rings) or
/// within cell_size/2 of a polyline or point.
Mask rasterize(std::span<const VectorFeature> features, const GridGeometry& geometry);

/// Morphological dilation by a Euclidean disc of `radius_m` metres.
/// Output cell is set iff some input cell centre lies within radius_m of
/// its centre. Distances are compared on cell offsets with a 1e-9 cell²
/// tolerance so that exact-radius neighbours are included.
Mask dilate(const Mask& mask, double radius_m);

/// Largest horizontal half-width w with dx² + dy² <= (radius/cell)² for
/// each row offset dy = 0..R; exposed for tests.
std::vector<Eigen::Index> disc_half_widths(double radius_m, double cell_size);

/// ASCII grid I/O (ncols/nrows/xllcorner/yllcorner/cellsize/nodata_value
/// header, then rows north to south). Floats are written with 17
/// significant digits.
void write_grid(const std::string& path, const FloatGrid& grid);
void write_grid(const std::string& path, const Mask& mask);
FloatGrid read_grid(const std::string& path);
std::string format_grid(const FloatGrid& grid);
FloatGrid parse_grid(const std::string& text);

/// Cells that are neither nodata nor zero.
Mask to_mask(const FloatGrid& grid);
FloatGrid to_float(const Mask& mask);

}  // namespace h2atlas::geo
