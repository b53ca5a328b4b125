#pragma once
// Pipeline configuration. The checks in parse_config mirror
// schema/config.schema.json; relative paths resolve against base_dir.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "h2atlas/eligibility.hpp"
#include "h2atlas/h2opt.hpp"
#include "h2atlas/placement.hpp"
#include "h2atlas/res_sim.hpp"
#include "h2atlas/socio.hpp"
#include "h2atlas/water.hpp"

namespace h2atlas::service {

namespace fs = std::filesystem;

struct Scenario {
  int year = 2030;
  water::Rcp rcp = water::Rcp::rcp26;
  water::Case water_case = water::Case::medium;

  water::ScenarioSpec spec() const { return {rcp, water_case, year}; }
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);

struct WeatherPoint {
  fs::path path;
  geo::LonLat location;
};

struct LocalDemand {
  double h2_t = 0.0;
  double elec_mwh = 0.0;
};

struct PipelineConfig {
  nlohmann::json doc;  ///< the validated document; hashed into the run id
  fs::path base_dir;

  std::string name;
  Scenario scenario;
  fs::path regions;  ///< GeoJSON, lon/lat, every feature with a string "gid"
  std::string country;
  fs::path preferences;
  std::map<std::string, fs::path> criteria_layers;  ///< source_layer key → GeoJSON
  double cell_size_m = 100.0;
  std::map<std::string, std::vector<WeatherPoint>> weather;  ///< per gid
  std::map<std::string, fs::path> hydro;                     ///< per gid, optional
  fs::path water_dir;
  std::optional<fs::path> coast;
  fs::path demographics;

  placement::TurbineSpec turbine;
  placement::PvParams pv;
  int lcoe_bins = 5;
  res::TechnoEconomics te = res::TechnoEconomics::defaults();
  water::DesalParams desal;
  double groundwater_cost = 0.10;
  h2opt::RunConfig curve;
  std::map<std::string, LocalDemand> local_demand;
  socio::AccessRates national_access;
  socio::EmploymentParams employment;
  socio::Weights weights = socio::kDefaultWeights;
};

/// Throws InvalidArgument naming the offending field.
PipelineConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir);
/// Relative paths resolve against the file's directory.
PipelineConfig read_config(const fs::path& path);

}  // namespace h2atlas::service
