#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "h2atlas/eligibility.hpp"
#include "h2atlas/geo/grid.hpp"
#include "h2atlas/geo/projection.hpp"
#include "h2atlas/geo/vector.hpp"

namespace h2atlas::placement {

using eligibility::Tech;

/// Reference onshore turbine.
struct TurbineSpec {
  double rated_power_mw = 4.2;
  double rotor_diameter_m = 136.0;
  double hub_height_m = 120.0;

  void validate() const;
};

struct PvParams {
  double land_use_m2_per_kwp = 20.0;
  double seed_spacing_m = 1000.0;
  std::string module_name = "Winaico WSx-240P6";

  void validate() const;
};

struct PlacementItem {
  geo::Point location;
  double capacity_mw = 0.0;
  double area_m2 = 0.0;                 ///< PV footprint area; 0 for turbines
  std::vector<geo::Polygon> footprint;  ///< PV only, planar metres
};

struct PlacementSet {
  Tech tech = Tech::wind;
  std::vector<PlacementItem> items;
  double total_capacity_mw = 0.0;
};

/// Rotated lattice placement: pitch 8D along `main_direction_deg` (compass
/// bearing) and 4D across, anchored at the centre of the eligible bounding
/// box. A turbine sits on every node whose cell is eligible.
PlacementSet place_wind(const geo::Mask& mask, const TurbineSpec& spec, double main_direction_deg);

/// True when (d_along / 8D)² + (d_across / 4D)² >= 1 for every pair.
bool wind_spacing_ok(const PlacementSet& set, const TurbineSpec& spec, double main_direction_deg);

/// Seeds and cell-to-seed labels behind a PV placement; exposed so the
/// nearest-seed assignment can be checked independently.
struct PvLayout {
  std::vector<geo::Point> seeds;
  Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label;  ///< -1 = ineligible
};

PvLayout pv_layout(const geo::Mask& mask, const PvParams& params);

/// Nearest-seed partition of the eligible cells, split into 4-connected
/// parks; capacity = footprint area / land use.
PlacementSet place_pv(const geo::Mask& mask, const PvParams& params);

/// GWp installable on `area_km2` at `land_use_m2_per_kwp`.
double capacity_from_area(double area_km2, double land_use_m2_per_kwp);

/// Circular mean of compass bearings in degrees, result in [0, 360).
double circular_mean_deg(std::span<const double> bearings);

/// Outline of a set of cells as polygons (shells counter-clockwise, holes
/// clockwise), in planar metres.
std::vector<geo::Polygon> trace_cells(const geo::GridGeometry& g,
                                      std::span<const std::pair<Eigen::Index, Eigen::Index>> cells);

/// GeoJSON FeatureCollection in lon/lat: points with capacity_mw for
/// turbines, polygons with area_m2 and capacity_kwp for PV parks.
nlohmann::json to_geojson(const PlacementSet& set, const geo::Projection& proj);

}  // namespace h2atlas::placement
