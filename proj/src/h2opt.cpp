#include "h2atlas/h2opt.hpp"

#include <cmath>
#include <cstdio>

#include "h2atlas/error.hpp"

namespace h2atlas::h2opt {

using Eigen::Index;
using lp::kInf;
using lp::Sense;

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_res(Component c) { return c == Component::wind || c == Component::pv; }
bool is_hydro(Component c) { return c == Component::hydro_ror || c == Component::hydro_reservoir; }

}  // namespace

void NodeModel::validate() const {
  if (sources.size() > 0) {
    int wind = 0, pv = 0;
    for (const auto& s : sources) {
      if (!is_res(s.component) && !is_hydro(s.component))
        throw InvalidArgument("source " + s.id + ": component must be wind, pv or hydro");
      if (!(s.potential_mw > 0)) throw InvalidArgument("source " + s.id + ": potential must be positive");
      if (s.cf.size() != res::kHours) throw InvalidArgument("source " + s.id + ": availability must have 8760 values");
      if ((s.cf < 0).any() || (s.cf > 1).any() || !s.cf.allFinite())
        throw InvalidArgument("source " + s.id + ": availability must lie in [0, 1]");
      wind += s.component == Component::wind;
      pv += s.component == Component::pv;
    }
    if (wind > 20 || pv > 10) throw InvalidArgument("at most 20 wind and 10 PV clusters per node");
  }
  if (!(e_spec_kwh_per_kg > 0) || !(water_m3_per_kg >= 0)) throw InvalidArgument("invalid electrolyzer parameters");
  if (!(battery_efficiency > 0 && battery_efficiency <= 1) || !(battery_c_rate > 0))
    throw InvalidArgument("invalid battery parameters");
  if (!(water.groundwater_m3 >= 0) || !(water.groundwater_cost >= 0)) throw InvalidArgument("invalid groundwater supply");
  if (water.desal_cost && !(*water.desal_cost >= 0)) throw InvalidArgument("invalid desalination cost");
  te.validate();
}

Source hydro_source(std::span<const res::HydroPlant> plants, res::HydroType type) {
  Source s;
  s.component = type == res::HydroType::run_of_river ? Component::hydro_ror : Component::hydro_reservoir;
  s.id = res::to_string(s.component);
  Series gen = Series::Zero(res::kHours);
  for (const auto& p : plants) {
    if (p.type != type) continue;
    s.potential_mw += p.capacity_mw;
    gen += res::hydro_hourly(p);
  }
  s.cf = s.potential_mw > 0 ? Series((gen / s.potential_mw).cwiseMin(1.0)) : Series(Series::Zero(res::kHours));
  return s;
}

Source cluster_source(const res::LcoeCluster& c, std::string id) {
  return {std::move(id), res::component_of(c.tech), c.capacity_mw, c.cf};
}

void RunConfig::validate() const {
  if (!(base_demand_t > 0)) throw InvalidArgument("base demand must be positive");
  if (!(growth > 1)) throw InvalidArgument("demand growth factor must exceed 1");
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (hours_per_period < 1 || res::kHours % hours_per_period != 0)
    throw InvalidArgument("hours per period must divide 8760");
  if (representative_days < 0 || representative_days > 365) throw InvalidArgument("representative days must be in [0, 365]");
  if (representative_days > 0 && hours_per_period != 1)
    throw InvalidArgument("representative days are modelled hourly (hours_per_period must be 1)");
}

std::vector<int> representative_day_indices(int k) {
  if (k < 1 || k > 365) throw InvalidArgument("representative days must be in [1, 365]");
  std::vector<int> d;
  for (int i = 0; i < k; ++i) d.push_back(static_cast<int>(std::floor((i + 0.5) * 365.0 / k)));
  return d;
}

Series downsample(const Series& s, int hours) {
  if (hours < 1 || s.size() % hours != 0) throw InvalidArgument("hours per period must divide the series length");
  if (hours == 1) return s;
  return Eigen::Map<const Eigen::ArrayXXd>(s.data(), hours, s.size() / hours).colwise().mean().transpose();
}

double electrolyzer_power_mw(double demand_t, double e_spec) { return demand_t * e_spec / 8760.0; }

LpModel build_lp(const NodeModel& node, double demand_t, Resolution resolution) {
  if (!(demand_t > 0)) throw InvalidArgument("demand must be positive");
  node.validate();
  RunConfig{1.0, 2.0, 1, resolution.hours_per_period, resolution.representative_days}.validate();
  LpModel m;
  m.node = &node;
  m.demand_t = demand_t;
  m.power_mw = electrolyzer_power_mw(demand_t, node.e_spec_kwh_per_kg);
  m.water_m3 = node.water_m3_per_kg * demand_t * 1000.0;
  const int hours = resolution.hours_per_period;
  std::vector<int> days;
  if (resolution.representative_days > 0) {
    days = representative_day_indices(resolution.representative_days);
    m.periods = 24 * static_cast<Index>(days.size());
    m.dt = 1.0;
    m.weight = 365.0 / static_cast<double>(days.size());
    m.cycle = 24;  // storage cycles within each sampled day
  } else {
    m.periods = res::kHours / hours;
    m.dt = hours;
    m.cycle = m.periods;
  }
  auto sample = [&](const Series& s) -> Series {
    if (days.empty()) return downsample(s, hours);
    Series out(m.periods);
    for (std::size_t i = 0; i < days.size(); ++i) out.segment(static_cast<Index>(24 * i), 24) = s.segment(24 * days[i], 24);
    return out;
  };
  const double r = node.te.discount_rate;
  auto& p = m.problem;
  const Index T = m.periods;

  for (const auto& s : node.sources) {
    const auto& cp = node.te.at(s.component, node.year);
    m.cf.push_back(sample(s.cf));
    m.cap.push_back(p.add_variable(0.0, s.potential_mw, res::annual_fixed_cost(cp, r) * 1000.0));
    m.gen_first.push_back(-1);
    if (cp.var_om > 0) {
      m.gen_first.back() = p.num_variables();
      for (Index t = 0; t < T; ++t) p.add_variable(0.0, kInf, cp.var_om * 1000.0 * m.dt * m.weight);
    }
  }
  m.ely = p.add_variable(m.power_mw, kInf,
                         res::annual_fixed_cost(node.te.at(Component::electrolyzer, node.year), r) * 1000.0);
  m.battery = p.add_variable(0.0, node.battery_enabled ? kInf : 0.0, res::annual_fixed_cost(node.te.at(Component::battery, node.year), r) * 1000.0);
  m.charge = p.num_variables();
  for (Index t = 0; t < T; ++t) p.add_variable(0.0, kInf, 0.0);
  m.discharge = p.num_variables();
  for (Index t = 0; t < T; ++t) p.add_variable(0.0, kInf, 0.0);
  m.soc = p.num_variables();
  for (Index t = 0; t < T; ++t) p.add_variable(0.0, kInf, 0.0);
  m.curtail = p.num_variables();
  for (Index t = 0; t < T; ++t) p.add_variable(0.0, kInf, 0.0);
  m.v_gw = p.add_variable(0.0, node.water.groundwater_m3, node.water.groundwater_cost);
  m.v_ds = node.water.desal_cost ? p.add_variable(0.0, kInf, *node.water.desal_cost) : p.add_variable(0.0, 0.0, 0.0);

  const double eta = node.battery_efficiency;
  for (Index t = 0; t < T; ++t) {
    std::vector<std::pair<Index, double>> bal;
    for (std::size_t k = 0; k < node.sources.size(); ++k) {
      if (m.gen_first[k] >= 0) {
        const Index g = m.gen_first[k] + t;
        bal.emplace_back(g, 1.0);
        p.add_row({{g, 1.0}, {m.cap[k], -m.cf[k][t]}}, Sense::le, 0.0);
      } else if (m.cf[k][t] > 0) {
        bal.emplace_back(m.cap[k], m.cf[k][t]);
      }
    }
    bal.emplace_back(m.discharge + t, 1.0);
    bal.emplace_back(m.charge + t, -1.0);
    bal.emplace_back(m.curtail + t, -1.0);
    p.add_row(bal, Sense::eq, m.power_mw);
    // soc[t+1] = soc[t] + dt·(η·ch − dis/η), cyclic over each storage cycle
    const Index next = t - t % m.cycle + (t + 1) % m.cycle;
    p.add_row({{m.soc + next, 1.0}, {m.soc + t, -1.0}, {m.charge + t, -m.dt * eta}, {m.discharge + t, m.dt / eta}},
              Sense::eq, 0.0);
    p.add_row({{m.soc + t, 1.0}, {m.battery, -1.0}}, Sense::le, 0.0);
    p.add_row({{m.charge + t, 1.0}, {m.battery, -node.battery_c_rate}}, Sense::le, 0.0);
    p.add_row({{m.discharge + t, 1.0}, {m.battery, -node.battery_c_rate}}, Sense::le, 0.0);
  }
  p.add_row({{m.v_gw, 1.0}, {m.v_ds, 1.0}}, Sense::eq, m.water_m3);
  return m;
}

std::optional<SolveResult> solve_lp(const LpModel& m) {
  const auto& node = *m.node;
  const Index T = m.periods;
  // necessary conditions checked before solving
  if (!node.water.desal_cost && node.water.groundwater_m3 < m.water_m3 * (1 - 1e-12)) return std::nullopt;
  double energy = 0;
  for (std::size_t k = 0; k < node.sources.size(); ++k) energy += node.sources[k].potential_mw * m.cf[k].sum() * m.dt * m.weight;
  if (energy < m.power_mw * 8760.0 * (1 - 1e-9)) return std::nullopt;

  const auto sol = lp::solve(m.problem);
  if (sol.status == lp::Status::infeasible) return std::nullopt;
  const auto& x = sol.x;

  SolveResult out;
  out.demand_t = m.demand_t;
  out.iterations = sol.iterations;
  out.electrolyzer_mw = x[m.ely];
  out.battery_mwh = x[m.battery];
  out.charge = x.segment(m.charge, T).array();
  out.discharge = x.segment(m.discharge, T).array();
  out.soc = x.segment(m.soc, T).array();
  out.curtail = x.segment(m.curtail, T).array();
  out.groundwater_m3 = x[m.v_gw];
  out.desal_m3 = x[m.v_ds];

  const double r = node.te.discount_rate;
  Series supply = Series::Zero(T);
  for (std::size_t k = 0; k < node.sources.size(); ++k) {
    const auto& s = node.sources[k];
    const double cap = x[m.cap[k]];
    out.capacity_mw[s.id] = cap;
    const auto& cp = node.te.at(s.component, node.year);
    double cost = res::annual_fixed_cost(cp, r) * 1000.0 * cap;
    if (m.gen_first[k] >= 0) {
      const Series gen = x.segment(m.gen_first[k], T).array();
      supply += gen;
      cost += cp.var_om * 1000.0 * m.dt * m.weight * gen.sum();
    } else {
      supply += m.cf[k] * cap;
    }
    if (s.component == Component::pv) out.shares.pv += cost;
    else if (s.component == Component::wind) out.shares.wind += cost;
    else out.shares.hydro += cost;
  }
  out.shares.electrolyzer =
      res::annual_fixed_cost(node.te.at(Component::electrolyzer, node.year), r) * 1000.0 * out.electrolyzer_mw;
  out.shares.battery = res::annual_fixed_cost(node.te.at(Component::battery, node.year), r) * 1000.0 * out.battery_mwh;
  out.shares.water = node.water.groundwater_cost * out.groundwater_m3 +
                     (node.water.desal_cost ? *node.water.desal_cost * out.desal_m3 : 0.0);
  out.annual_cost = out.shares.sum();
  out.lcoh = out.annual_cost / (m.demand_t * 1000.0);
  if (out.annual_cost > 0) {
    for (double* v : {&out.shares.pv, &out.shares.wind, &out.shares.hydro, &out.shares.electrolyzer,
                      &out.shares.battery, &out.shares.water})
      *v /= out.annual_cost;
  }

  const Series bal = supply + out.discharge - out.charge - out.curtail - m.power_mw;
  out.balance_residual = bal.abs().maxCoeff() / std::max(1.0, m.power_mw);
  const double eta = node.battery_efficiency;
  const double net = m.dt * (eta * out.charge.sum() - out.discharge.sum() / eta);
  out.battery_residual = std::abs(net) / std::max(1.0, m.dt * (out.charge.sum() + out.discharge.sum()));
  return out;
}

std::optional<SolveResult> solve_node(const NodeModel& node, double demand_t, Resolution resolution) {
  return solve_lp(build_lp(node, demand_t, resolution));
}

std::string to_string(Terminal t) {
  switch (t) {
    case Terminal::infeasible_at_next_step: return "infeasible-at-next-step";
    case Terminal::max_steps: return "max-steps";
    case Terminal::infeasible_at_base: return "infeasible-at-base";
  }
  return "?";
}

CostPotentialCurve cost_potential_curve(const NodeModel& node, const RunConfig& cfg) {
  cfg.validate();
  node.validate();
  CostPotentialCurve c;
  c.region_id = node.region_id;
  c.year = node.year;
  c.terminal = Terminal::max_steps;
  for (int k = 0; k < cfg.max_steps; ++k) {
    const double d = cfg.base_demand_t * std::pow(cfg.growth, k);
    auto r = solve_node(node, d, {cfg.hours_per_period, cfg.representative_days});
    if (!r) {
      c.terminal = k == 0 ? Terminal::infeasible_at_base : Terminal::infeasible_at_next_step;
      if (k == 0)
        c.diagnostic = "infeasible at base demand " + fmt17(d) + " t/yr (insufficient renewable potential or water)";
      break;
    }
    c.steps.push_back({k, d, d, std::move(*r)});
  }
  return c;
}

CostPotentialCurve deduct_local_demand(CostPotentialCurve curve, double local_h2_t, double local_elec_mwh,
                                       double e_spec) {
  if (!(local_h2_t >= 0) || !(local_elec_mwh >= 0)) throw InvalidArgument("local demand must be >= 0");
  if (!(e_spec > 0)) throw InvalidArgument("electrolyzer specific energy must be positive");
  // MWh → kWh → kg → t
  const double local = local_h2_t + local_elec_mwh * 1000.0 / e_spec / 1000.0;
  for (auto& s : curve.steps) s.exportable_t = std::max(0.0, s.demand_t - local);
  return curve;
}

nlohmann::json to_json(const SolveResult& r, bool with_dispatch) {
  nlohmann::json j{{"demand_t", r.demand_t},
                   {"capacity_mw", r.capacity_mw},
                   {"electrolyzer_mw", r.electrolyzer_mw},
                   {"battery_mwh", r.battery_mwh},
                   {"annual_cost", r.annual_cost},
                   {"lcoh", r.lcoh},
                   {"water", {{"groundwater_m3", r.groundwater_m3}, {"desal_m3", r.desal_m3}}},
                   {"shares",
                    {{"pv", r.shares.pv},
                     {"wind", r.shares.wind},
                     {"hydro", r.shares.hydro},
                     {"electrolyzer", r.shares.electrolyzer},
                     {"battery", r.shares.battery},
                     {"water", r.shares.water}}}};
  if (with_dispatch) {
    auto vec = [](const Series& s) { return std::vector<double>(s.data(), s.data() + s.size()); };
    j["dispatch"] = {{"charge", vec(r.charge)}, {"discharge", vec(r.discharge)}, {"soc", vec(r.soc)},
                     {"curtail", vec(r.curtail)}};
  }
  return j;
}

nlohmann::json to_json(const CostPotentialCurve& c) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : c.steps) {
    auto j = to_json(s.result);
    j["step"] = s.step;
    j["exportable_t"] = s.exportable_t;
    steps.push_back(std::move(j));
  }
  nlohmann::json out{{"gid", c.region_id}, {"year", c.year}, {"steps", steps}, {"terminal", to_string(c.terminal)}};
  if (!c.diagnostic.empty()) out["diagnostic"] = c.diagnostic;
  return out;
}

std::string curve_csv(const CostPotentialCurve& c) {
  std::string out = "step,demand_t,lcoh,share_pv,share_wind,share_hydro,share_ely,share_batt,share_water\n";
  for (const auto& s : c.steps) {
    const auto& sh = s.result.shares;
    out += std::to_string(s.step);
    for (double v : {s.exportable_t, s.result.lcoh, sh.pv, sh.wind, sh.hydro, sh.electrolyzer, sh.battery, sh.water})
      out += "," + fmt17(v);
    out += "\n";
  }
  return out;
}

nlohmann::json to_json(const NodeModel& n) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : n.sources)
    sources.push_back({{"id", s.id},
                       {"component", res::to_string(s.component)},
                       {"potential_mw", s.potential_mw},
                       {"cf", std::vector<double>(s.cf.data(), s.cf.data() + s.cf.size())}});
  nlohmann::json water{{"groundwater_m3", n.water.groundwater_m3}, {"groundwater_cost", n.water.groundwater_cost}};
  water["desal_cost"] = n.water.desal_cost ? nlohmann::json(*n.water.desal_cost) : nlohmann::json(nullptr);
  return {{"region_id", n.region_id},
          {"year", n.year},
          {"sources", sources},
          {"water", water},
          {"techno_economics", res::to_json(n.te)},
          {"e_spec_kwh_per_kg", n.e_spec_kwh_per_kg},
          {"water_m3_per_kg", n.water_m3_per_kg},
          {"battery_efficiency", n.battery_efficiency},
          {"battery_c_rate", n.battery_c_rate},
          {"battery_enabled", n.battery_enabled}};
}

NodeModel node_from_json(const nlohmann::json& j) {
  NodeModel n;
  try {
    n.region_id = j.at("region_id").get<std::string>();
    n.year = j.value("year", n.year);
    for (const auto& s : j.at("sources")) {
      Source src;
      src.id = s.at("id").get<std::string>();
      src.component = res::parse_component(s.at("component").get<std::string>());
      src.potential_mw = s.at("potential_mw").get<double>();
      const auto cf = s.at("cf").get<std::vector<double>>();
      src.cf = Eigen::Map<const Series>(cf.data(), static_cast<Index>(cf.size()));
      n.sources.push_back(std::move(src));
    }
    if (j.contains("water")) {
      const auto& w = j.at("water");
      n.water.groundwater_m3 = w.value("groundwater_m3", 0.0);
      n.water.groundwater_cost = w.value("groundwater_cost", n.water.groundwater_cost);
      if (w.contains("desal_cost") && !w.at("desal_cost").is_null()) n.water.desal_cost = w.at("desal_cost").get<double>();
    }
    if (j.contains("techno_economics")) n.te = res::techno_economics_from_json(j.at("techno_economics"));
    n.e_spec_kwh_per_kg = j.value("e_spec_kwh_per_kg", n.e_spec_kwh_per_kg);
    n.water_m3_per_kg = j.value("water_m3_per_kg", n.water_m3_per_kg);
    n.battery_efficiency = j.value("battery_efficiency", n.battery_efficiency);
    n.battery_c_rate = j.value("battery_c_rate", n.battery_c_rate);
    n.battery_enabled = j.value("battery_enabled", n.battery_enabled);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("node model: ") + e.what());
  }
  n.validate();
  return n;
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"base_demand_t", c.base_demand_t},
          {"growth", c.growth},
          {"max_steps", c.max_steps},
          {"hours_per_period", c.hours_per_period},
          {"representative_days", c.representative_days}};
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  try {
    c.base_demand_t = j.value("base_demand_t", c.base_demand_t);
    c.growth = j.value("growth", c.growth);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.hours_per_period = j.value("hours_per_period", c.hours_per_period);
    c.representative_days = j.value("representative_days", c.representative_days);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace h2atlas::h2opt
