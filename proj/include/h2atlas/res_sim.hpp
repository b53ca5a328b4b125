#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "h2atlas/eligibility.hpp"
#include "h2atlas/geo/projection.hpp"
#include "h2atlas/placement.hpp"

namespace h2atlas::res {

using eligibility::Tech;
using Series = Eigen::ArrayXd;

inline constexpr Eigen::Index kHours = 8760;
inline constexpr std::array<int, 4> kYears = {2020, 2030, 2040, 2050};

struct WeatherSeries {
  geo::LonLat location;
  double h_ref_m = 100.0;  ///< height of wind_speed
  Series wind_speed;       ///< m/s
  Series ghi;              ///< W/m²
  Series air_temp;         ///< °C
  std::optional<Series> wind_dir;  ///< compass bearing, degrees

  void validate() const;
};

/// Weather CSV `timestamp,wind_speed,wind_dir,ghi,temp`: 8760 consecutive
/// hourly ISO-8601 UTC timestamps. `wind_dir` may be left empty.
WeatherSeries parse_weather_csv(std::string_view text);
WeatherSeries read_weather_csv(const std::filesystem::path& path);

struct WindModel {
  double z0_m = 0.1;
  double cut_in = 3.0;
  double cut_out = 25.0;
  double air_density = 1.225;
  double cp_eff = 0.40;
};

/// Wind speed at which the parametric curve reaches rated power.
double rated_speed(const placement::TurbineSpec& spec, const WindModel& model = {});

/// Hourly capacity factors from the log-law hub-height speed and a cubic
/// power curve between cut-in and rated speed.
Series simulate_wind(const WeatherSeries& w, const placement::TurbineSpec& spec, const WindModel& model = {});

/// Mean hourly wind direction (circular), or nullopt if the series has none.
std::optional<double> main_wind_direction(const WeatherSeries& w);

struct PvModel {
  double noct = 45.0;
  double gamma = -0.0045;  ///< power temperature coefficient, 1/K
};

Series simulate_pv(const WeatherSeries& w, const PvModel& model = {});

enum class Component { wind, pv, hydro_ror, hydro_reservoir, electrolyzer, battery };

std::string to_string(Component c);
Component parse_component(const std::string& s);

/// Cost block of one component in one year. Battery capex is per kWh of
/// storage, all others per kW.
struct CostParams {
  double capex = 0.0;     ///< €/kW (€/kWh battery)
  double fix_om = 0.0;    ///< fraction of capex per year
  double var_om = 0.0;    ///< €/kWh
  double lifetime = 0.0;  ///< years
};

struct TechnoEconomics {
  std::map<Component, std::map<int, CostParams>> costs;
  double discount_rate = 0.08;

  /// Table of default assumptions (2020..2050).
  static TechnoEconomics defaults();

  const CostParams& at(Component c, int year) const;
  void validate() const;
};

TechnoEconomics techno_economics_from_json(const nlohmann::json& j, TechnoEconomics base = TechnoEconomics::defaults());
nlohmann::json to_json(const TechnoEconomics& te);

/// Capital recovery factor r(1+r)^n / ((1+r)^n − 1); 1/n as r → 0.
double crf(double r, double n);

/// Annual fixed cost per unit of capacity: (CRF + fix_om)·capex.
double annual_fixed_cost(const CostParams& p, double r);

/// Levelized cost in €/kWh of `annual_energy_mwh` produced by
/// `capacity_mw`.
double lcoe(double capacity_mw, double annual_energy_mwh, const CostParams& p, double discount_rate);
double lcoe(double capacity_mw, double annual_energy_mwh, const TechnoEconomics& te, Component c, int year);

Component component_of(Tech t);

struct GenAsset {
  Tech tech = Tech::wind;
  double capacity_mw = 0.0;
  Series cf;
  double lcoe = 0.0;
  double annual_energy_mwh = 0.0;
};

GenAsset make_asset(Tech tech, double capacity_mw, Series cf, const TechnoEconomics& te, int year);

struct LcoeCluster {
  Tech tech = Tech::wind;
  int bin_index = 0;
  std::size_t members = 0;
  double capacity_mw = 0.0;
  Series cf;
  double lcoe = 0.0;
  double annual_energy_mwh = 0.0;
};

/// Groups assets into `n_bins` evenly spaced LCOE bins; empty bins are
/// dropped, cluster series and LCOE are capacity-weighted.
std::vector<LcoeCluster> cluster_by_lcoe(std::span<const GenAsset> assets, int n_bins);

enum class HydroType { run_of_river, reservoir };

struct HydroPlant {
  std::string id;
  HydroType type = HydroType::run_of_river;
  double capacity_mw = 0.0;
  std::array<double, 12> monthly_mwh{};

  void validate() const;
};

/// Hydropower CSV `id,type,capacity_mw,m01..m12`; plants of 1 MW or less
/// are skipped.
std::vector<HydroPlant> parse_hydro_csv(std::string_view text);
std::vector<HydroPlant> read_hydro_csv(const std::filesystem::path& path);

/// First hour of each month and month lengths for a 365-day year.
const std::array<int, 12>& month_hours();

/// Hourly generation (MWh/h) interpolated linearly between mid-month
/// anchors valued monthly/month_hours, wrapping December to January.
Series hydro_hourly(const HydroPlant& plant);

}  // namespace h2atlas::res
