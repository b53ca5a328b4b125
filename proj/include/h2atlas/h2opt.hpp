#pragma once
// Single-node capacity expansion for hydrogen supply: renewable clusters,
// hydropower, battery and electrolyzer sized against a flat H2 demand.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "h2atlas/lp.hpp"
#include "h2atlas/res_sim.hpp"

namespace h2atlas::h2opt {

using res::Component;
using res::Series;

/// A generation source with a capacity potential and availability series
/// (RES cluster or aggregated hydropower).
struct Source {
  std::string id;
  Component component = Component::pv;
  double potential_mw = 0.0;
  Series cf;  ///< hourly, 8760 values in [0, 1]
};

struct WaterSupply {
  double groundwater_m3 = 0.0;          ///< sustainable volume per year
  double groundwater_cost = 0.10;       ///< €/m³
  std::optional<double> desal_cost;     ///< €/m³ delivered; none without coastal access
};

struct NodeModel {
  std::string region_id;
  int year = 2050;
  std::vector<Source> sources;
  WaterSupply water;
  res::TechnoEconomics te = res::TechnoEconomics::defaults();
  double e_spec_kwh_per_kg = 47.6;
  double water_m3_per_kg = 0.009;
  double battery_efficiency = 0.96;  ///< each way
  double battery_c_rate = 1.0;
  bool battery_enabled = true;

  void validate() const;
};

/// Aggregated hydropower source from plant series (capacity-weighted);
/// availability is clipped at 1.
Source hydro_source(std::span<const res::HydroPlant> plants, res::HydroType type);

/// RES clusters as sources.
Source cluster_source(const res::LcoeCluster& c, std::string id);

struct RunConfig {
  double base_demand_t = 1000.0;  ///< t H2 / yr
  double growth = 1.06;
  int max_steps = 60;
  int hours_per_period = 1;  ///< contiguous down-sampling of the 8760 h year
  int representative_days = 0;  ///< > 0: that many evenly spaced whole days, hourly

  void validate() const;
};

/// Temporal resolution of one LP instance.
struct Resolution {
  int hours_per_period = 1;
  int representative_days = 0;
};

/// Days sampled in representative-day mode: ⌊(i + ½)·365/k⌋.
std::vector<int> representative_day_indices(int k);

/// Contiguous means over blocks of `hours` (8760 must be divisible).
Series downsample(const Series& s, int hours);

/// Electrolyzer power in MW for a flat demand in t/yr.
double electrolyzer_power_mw(double demand_t, double e_spec_kwh_per_kg);

struct LpModel {
  lp::Problem problem;
  double demand_t = 0.0;
  double power_mw = 0.0;
  double water_m3 = 0.0;
  Eigen::Index periods = 0;
  double dt = 1.0;       ///< hours per period
  double weight = 1.0;   ///< year hours represented by one modelled hour
  Eigen::Index cycle = 0;  ///< SOC cycle length in periods
  std::vector<Eigen::Index> cap;          ///< per source
  std::vector<Eigen::Index> gen_first;    ///< per source, -1 when eliminated
  Eigen::Index ely = -1, battery = -1, v_gw = -1, v_ds = -1;
  Eigen::Index charge = -1, discharge = -1, soc = -1, curtail = -1;  ///< first of each period block
  std::vector<Series> cf;  ///< per source, down-sampled
  const NodeModel* node = nullptr;
};

LpModel build_lp(const NodeModel& node, double demand_t, Resolution res = {});

struct CostShares {
  double pv = 0, wind = 0, hydro = 0, electrolyzer = 0, battery = 0, water = 0;
  double sum() const { return pv + wind + hydro + electrolyzer + battery + water; }
};

struct SolveResult {
  double demand_t = 0.0;
  std::map<std::string, double> capacity_mw;  ///< per source id
  double electrolyzer_mw = 0.0;
  double battery_mwh = 0.0;
  Series charge, discharge, soc, curtail;     ///< MW, MW, MWh, MW per period
  double annual_cost = 0.0;  ///< €/yr
  double lcoh = 0.0;         ///< €/kg
  double groundwater_m3 = 0.0, desal_m3 = 0.0;
  CostShares shares;
  double balance_residual = 0.0;  ///< max |balance error| / max(1, power)
  double battery_residual = 0.0;  ///< cyclic energy error / max(1, throughput)
  int iterations = 0;
};

/// nullopt when the instance is infeasible.
std::optional<SolveResult> solve_lp(const LpModel& m);
std::optional<SolveResult> solve_node(const NodeModel& node, double demand_t, Resolution res = {});

enum class Terminal { infeasible_at_next_step, max_steps, infeasible_at_base };

std::string to_string(Terminal t);

struct CurveStep {
  int step = 0;
  double demand_t = 0.0;
  double exportable_t = 0.0;
  SolveResult result;
};

struct CostPotentialCurve {
  std::string region_id;
  int year = 0;
  std::vector<CurveStep> steps;
  Terminal terminal = Terminal::max_steps;
  std::string diagnostic;
};

/// Solves at D_k = base·growth^k until the first infeasible step or
/// max_steps.
CostPotentialCurve cost_potential_curve(const NodeModel& node, const RunConfig& cfg);

/// Exportable quantity per step after local hydrogen and electricity
/// demand (electricity converted at e_spec); LCOH unchanged.
CostPotentialCurve deduct_local_demand(CostPotentialCurve curve, double local_h2_t, double local_elec_mwh,
                                       double e_spec_kwh_per_kg = 47.6);

nlohmann::json to_json(const SolveResult& r, bool with_dispatch = false);
nlohmann::json to_json(const CostPotentialCurve& c);
/// `step,demand_t,lcoh,share_pv,share_wind,share_hydro,share_ely,share_batt,share_water`
std::string curve_csv(const CostPotentialCurve& c);

nlohmann::json to_json(const NodeModel& n);
NodeModel node_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

}  // namespace h2atlas::h2opt
