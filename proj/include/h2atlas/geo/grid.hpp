#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>

#include "h2atlas/error.hpp"

namespace h2atlas::geo {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Placement of a raster in a planar (projected) coordinate system.
/// Origin is the lower-left corner; row 0 is the northernmost row.
struct GridGeometry {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 100.0;
  Eigen::Index ncols = 0;
  Eigen::Index nrows = 0;

  void validate() const {
    if (ncols <= 0 || nrows <= 0) throw InvalidArgument("grid must have ncols > 0 and nrows > 0");
    if (!(cell_size > 0.0)) throw InvalidArgument("grid cell_size must be > 0");
  }

  Eigen::Index size() const { return ncols * nrows; }

  double center_x(Eigen::Index col) const {
    return origin_x + (static_cast<double>(col) + 0.5) * cell_size;
  }
  double center_y(Eigen::Index row) const {
    return origin_y + (static_cast<double>(nrows - row) - 0.5) * cell_size;
  }
  Point cell_center(Eigen::Index row, Eigen::Index col) const {
    return {center_x(col), center_y(row)};
  }

  double top() const { return origin_y + static_cast<double>(nrows) * cell_size; }
  double right() const { return origin_x + static_cast<double>(ncols) * cell_size; }

  /// Cell containing p, or nullopt when p lies outside the grid.
  std::optional<std::pair<Eigen::Index, Eigen::Index>> cell_of(Point p) const {
    const double fc = std::floor((p.x - origin_x) / cell_size);
    const double fr = std::floor((top() - p.y) / cell_size);
    if (fc < 0 || fr < 0 || fc >= static_cast<double>(ncols) || fr >= static_cast<double>(nrows))
      return std::nullopt;
    return std::pair{static_cast<Eigen::Index>(fr), static_cast<Eigen::Index>(fc)};
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Dense raster over a GridGeometry. Values are stored row-major so that a
/// row is contiguous, matching the on-disk order of the ASCII grid format.
template <typename Scalar>
class Grid {
public:
  using ArrayType = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Grid() = default;
  explicit Grid(const GridGeometry& geometry, Scalar fill = Scalar{})
      : geometry_(geometry) {
    geometry_.validate();
    values_.setConstant(geometry_.nrows, geometry_.ncols, fill);
  }
  Grid(const GridGeometry& geometry, ArrayType values)
      : geometry_(geometry), values_(std::move(values)) {
    geometry_.validate();
    if (values_.rows() != geometry_.nrows || values_.cols() != geometry_.ncols)
      throw InvalidArgument("grid values do not match geometry dimensions");
  }

  const GridGeometry& geometry() const { return geometry_; }
  Eigen::Index rows() const { return geometry_.nrows; }
  Eigen::Index cols() const { return geometry_.ncols; }
  double cell_size() const { return geometry_.cell_size; }

  ArrayType& values() { return values_; }
  const ArrayType& values() const { return values_; }

  Scalar& operator()(Eigen::Index r, Eigen::Index c) { return values_(r, c); }
  Scalar operator()(Eigen::Index r, Eigen::Index c) const { return values_(r, c); }

  std::optional<double> nodata() const { return nodata_; }
  void set_nodata(std::optional<double> v) { nodata_ = v; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.geometry_ == b.geometry_ && (a.values_ == b.values_).all();
  }

private:
  GridGeometry geometry_;
  ArrayType values_;
  std::optional<double> nodata_;
};

using Mask = Grid<bool>;
using FloatGrid = Grid<double>;

inline Eigen::Index popcount(const Mask& m) { return m.values().count(); }

/// Area of the true cells in km².
inline double area_of(const Mask& m) {
  const double cs = m.cell_size();
  return static_cast<double>(popcount(m)) * cs * cs * 1e-6;
}

inline Mask operator&(const Mask& a, const Mask& b) {
  if (!(a.geometry() == b.geometry())) throw InvalidArgument("mask geometries differ");
  return Mask(a.geometry(), a.values() && b.values());
}

inline Mask operator|(const Mask& a, const Mask& b) {
  if (!(a.geometry() == b.geometry())) throw InvalidArgument("mask geometries differ");
  return Mask(a.geometry(), a.values() || b.values());
}

inline Mask operator!(const Mask& a) { return Mask(a.geometry(), !a.values()); }

}  // namespace h2atlas::geo
