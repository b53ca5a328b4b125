#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "h2atlas/geo/grid.hpp"
#include "h2atlas/geo/projection.hpp"
#include "h2atlas/geo/vector.hpp"

namespace h2atlas::water {

using geo::FloatGrid;
using geo::Mask;

/// Environmental-flow cases: share of recharge left to ecosystems.
enum class Case { conservative, medium, extreme };

double env_flow_fraction(Case c);
std::string to_string(Case c);
Case parse_case(const std::string& s);

enum class Rcp { rcp26, rcp85 };

std::string to_string(Rcp r);  ///< "rcp26" / "rcp85"
Rcp parse_rcp(const std::string& s);  ///< accepts "rcp26", "2.6", "26" and the 8.5 forms

inline constexpr int kCombos = 6;

/// Years averaged for a target year, inclusive.
std::pair<int, int> averaging_window(int target_year);

struct ScenarioSpec {
  Rcp rcp = Rcp::rcp26;
  Case water_case = Case::conservative;
  int target_year = 2030;

  std::pair<int, int> window() const { return averaging_window(target_year); }
};

double recharge(double p, double i, double et, double q);
double sustainable_yield(double r, double swu, Case c);

/// One cell-year of water-balance grids (mm/yr); any may be missing.
struct BalanceInputs {
  std::optional<FloatGrid> precipitation, irrigation, evapotranspiration, runoff;
};

/// R = P + I − ET − Q, signed. NaN marks nodata cells.
FloatGrid recharge(const BalanceInputs& in);

/// SY = (1 − f)·R − SWU.
FloatGrid sustainable_yield(const FloatGrid& r, const FloatGrid& swu, Case c);

/// SY grids indexed by year, then model combination (1..6).
using SyStack = std::map<int, std::map<int, FloatGrid>>;

/// Mean over the six combinations, then over the window years.
FloatGrid scenario_average(const SyStack& stack, const ScenarioSpec& spec);

/// Cell areas in m² of a grid whose coordinates are degrees lon/lat.
FloatGrid geographic_cell_areas(const geo::GridGeometry& g);

/// Σ max(SY, 0)·area over region cells (mm/yr · m² → m³/yr); nodata
/// cells contribute nothing.
double region_volume_m3(const FloatGrid& sy_mm, const Mask& region, const FloatGrid& cell_area_m2);

/// Mean signed SY over region cells with data; NaN when there are none.
double region_mean(const FloatGrid& sy_mm, const Mask& region);

/// `{dir}/{var}_{year}_{combo}_{rcp}.asc`; var ∈ P, I, ET, Q, SWU.
std::filesystem::path grid_path(const std::filesystem::path& dir, const std::string& var, int year, int combo,
                                Rcp rcp);

/// Reads all window years and combinations and computes SY for one case.
/// Missing files are reported together.
SyStack load_sy_stack(const std::filesystem::path& dir, const ScenarioSpec& spec);

struct RegionWater {
  std::string gid;
  ScenarioSpec spec;
  double sy_mm = 0.0;
  double volume_m3 = 0.0;
};

/// Regions are lon/lat features; the SY grid is geographic.
std::vector<RegionWater> region_water(const FloatGrid& sy, const ScenarioSpec& spec,
                                      std::span<const std::pair<std::string, geo::VectorFeature>> regions);

nlohmann::json to_json(const RegionWater& r);

/// Replaces NaN with the nodata value for writing.
FloatGrid with_nodata(const FloatGrid& g, double nodata = -9999.0);

/// Defaults stand in for published desalination cost regressions.
struct DesalParams {
  double specific_energy_kwh_m3 = 3.5;
  double capex_per_m3_day = 1000.0;
  double fix_om = 0.025;
  double lifetime = 25.0;
  double availability = 0.95;
  double reference_plant_m3_h = 367000.0;
  double solar_multiplier = 3.0;  ///< round-the-clock power costs this times solar LCOE
  double detour_factor = 1.3;
  double pipe_capex_per_m3_h_km = 30.0;
  double pipe_lifetime = 40.0;
  double pipe_fix_om = 0.01;
  double pump_efficiency = 0.75;
  double friction_head_m_per_km = 1.0;
  double max_coast_distance_km = 5000.0;
  double discount_rate = 0.08;

  void validate() const;
};

DesalParams desal_params_from_json(const nlohmann::json& j, DesalParams base = {});

struct DesalCost {
  double plant_lcow = 0.0;        ///< €/m³
  double pipe_length_km = 0.0;    ///< detoured
  double pump_kwh_per_m3 = 0.0;
  double transport = 0.0;         ///< €/m³
  double delivered = 0.0;         ///< €/m³
};

/// Delivered cost for a pipe of `pipe_length_km` (already detoured) and a
/// lift of max(elevation, 0).
DesalCost desal_cost(double pipe_length_km, double elevation_m, double solar_lcoe, const DesalParams& p);

/// Great-circle distance in km from `from` to the nearest point of the
/// lon/lat polylines, or nullopt when there are no coast vertices.
std::optional<double> distance_to_coast_km(geo::LonLat from, std::span<const geo::Polyline> coast_lonlat);

/// Desalinated water delivered to a region centroid.
DesalCost desal_water_cost(geo::LonLat centroid, std::span<const geo::Polyline> coast_lonlat, double elevation_m,
                           double solar_lcoe, const DesalParams& p);

}  // namespace h2atlas::water
