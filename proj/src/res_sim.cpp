#include "h2atlas/res_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "h2atlas/csv.hpp"
#include "h2atlas/error.hpp"

namespace h2atlas::res {

namespace {

// Hours since 1970 of "YYYY-MM-DDTHH:MM[:SS][Z]"; minutes/seconds must be 0.
std::int64_t parse_hour_stamp(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, n = 0;
  char sep = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &n) < 6 || (sep != 'T' && sep != ' '))
    throw ParseError("bad timestamp '" + s + "'");
  std::string_view rest(s.c_str() + n);
  if (rest.size() >= 3 && rest[0] == ':') {
    sec = std::atoi(std::string(rest.substr(1, 2)).c_str());
    rest.remove_prefix(3);
  }
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) throw ParseError("timestamp not UTC: '" + s + "'");
  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(mo)),
                                        std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok() || h > 23 || mi != 0 || sec != 0) throw ParseError("bad hourly timestamp '" + s + "'");
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 24 + h;
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

void WeatherSeries::validate() const {
  if (wind_speed.size() != kHours || ghi.size() != kHours || air_temp.size() != kHours)
    throw InvalidArgument("weather series must have 8760 hourly values");
  if (wind_dir && wind_dir->size() != kHours) throw InvalidArgument("wind direction series must have 8760 values");
  if ((wind_speed < 0).any() || !wind_speed.allFinite()) throw InvalidArgument("wind speed must be finite and >= 0");
  if ((ghi < 0).any() || !ghi.allFinite()) throw InvalidArgument("ghi must be finite and >= 0");
  if (!air_temp.allFinite()) throw InvalidArgument("air temperature must be finite");
  if (!(h_ref_m > 0)) throw InvalidArgument("reference height must be positive");
}

WeatherSeries parse_weather_csv(std::string_view text) {
  const auto t = csv::parse(text);
  const auto cts = t.column("timestamp"), cws = t.column("wind_speed"), cghi = t.column("ghi"),
             ctemp = t.column("temp");
  const bool has_dir = t.has_column("wind_dir");
  if (static_cast<Eigen::Index>(t.rows.size()) != kHours)
    throw ParseError("weather file has " + std::to_string(t.rows.size()) + " rows, expected 8760");
  WeatherSeries w;
  w.wind_speed.resize(kHours);
  w.ghi.resize(kHours);
  w.air_temp.resize(kHours);
  Series dir(kHours);
  bool any_dir = false, all_dir = true;
  std::int64_t prev = 0;
  for (Eigen::Index i = 0; i < kHours; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const auto stamp = parse_hour_stamp(row[cts]);
    if (i > 0 && stamp != prev + 1) throw ParseError("weather timestamps not consecutive at row " + std::to_string(i + 1));
    prev = stamp;
    w.wind_speed[i] = csv::to_double(row[cws], "wind_speed");
    w.ghi[i] = csv::to_double(row[cghi], "ghi");
    w.air_temp[i] = csv::to_double(row[ctemp], "temp");
    if (has_dir && !row[t.column("wind_dir")].empty()) {
      dir[i] = csv::to_double(row[t.column("wind_dir")], "wind_dir");
      any_dir = true;
    } else {
      all_dir = false;
    }
  }
  if (any_dir && !all_dir) throw ParseError("wind_dir column partially filled");
  if (any_dir) w.wind_dir = dir;
  w.validate();
  return w;
}

WeatherSeries read_weather_csv(const std::filesystem::path& path) {
  try {
    return parse_weather_csv(csv::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

double rated_speed(const placement::TurbineSpec& spec, const WindModel& m) {
  spec.validate();
  const double r = 0.5 * spec.rotor_diameter_m;
  return std::cbrt(spec.rated_power_mw * 1e6 / (0.5 * m.air_density * m.cp_eff * std::numbers::pi * r * r));
}

Series simulate_wind(const WeatherSeries& w, const placement::TurbineSpec& spec, const WindModel& m) {
  w.validate();
  if (!(m.z0_m > 0)) throw InvalidArgument("roughness length z0 must be positive");
  if (!(w.h_ref_m > m.z0_m) || !(spec.hub_height_m > m.z0_m))
    throw InvalidArgument("heights must exceed the roughness length");
  const double vr = rated_speed(spec, m);
  if (!(vr > m.cut_in && vr <= m.cut_out)) throw InvalidArgument("rated speed outside cut-in/cut-out range");
  const double shear = std::log(spec.hub_height_m / m.z0_m) / std::log(w.h_ref_m / m.z0_m);
  const double ci3 = m.cut_in * m.cut_in * m.cut_in, denom = vr * vr * vr - ci3;
  return (w.wind_speed * shear).unaryExpr([&](double v) {
    if (v < m.cut_in || v > m.cut_out) return 0.0;
    if (v >= vr) return 1.0;
    return (v * v * v - ci3) / denom;
  });
}

std::optional<double> main_wind_direction(const WeatherSeries& w) {
  if (!w.wind_dir) return std::nullopt;
  return placement::circular_mean_deg(std::span<const double>(w.wind_dir->data(), w.wind_dir->size()));
}

Series simulate_pv(const WeatherSeries& w, const PvModel& m) {
  w.validate();
  const Series t_cell = w.air_temp + w.ghi * (m.noct - 20.0) / 800.0;
  return ((w.ghi / 1000.0) * (1.0 + m.gamma * (t_cell - 25.0))).cwiseMax(0.0).cwiseMin(1.0);
}

std::string to_string(Component c) {
  switch (c) {
    case Component::wind: return "wind";
    case Component::pv: return "pv";
    case Component::hydro_ror: return "hydro_ror";
    case Component::hydro_reservoir: return "hydro_reservoir";
    case Component::electrolyzer: return "electrolyzer";
    case Component::battery: return "battery";
  }
  return "?";
}

Component parse_component(const std::string& s) {
  for (auto c : {Component::wind, Component::pv, Component::hydro_ror, Component::hydro_reservoir,
                 Component::electrolyzer, Component::battery})
    if (to_string(c) == s) return c;
  throw InvalidArgument("unknown component '" + s + "'");
}

TechnoEconomics TechnoEconomics::defaults() {
  TechnoEconomics te;
  auto put = [&](Component c, std::array<double, 4> capex, double fix_pct, double var_om, double life) {
    for (std::size_t i = 0; i < kYears.size(); ++i) te.costs[c][kYears[i]] = {capex[i], fix_pct / 100.0, var_om, life};
  };
  put(Component::wind, {1290, 1130, 1050, 1000}, 2.5, 0.0, 20);
  put(Component::pv, {690, 450, 370, 320}, 1.7, 0.0, 20);
  put(Component::hydro_ror, {1000, 1000, 1000, 1000}, 2.5, 0.005, 40);
  put(Component::hydro_reservoir, {1700, 1700, 1700, 1700}, 2.5, 0.005, 40);
  put(Component::electrolyzer, {800, 500, 400, 350}, 3.0, 0.0, 10);
  put(Component::battery, {311, 175, 153, 131}, 2.5, 0.0, 15);
  return te;
}

const CostParams& TechnoEconomics::at(Component c, int year) const {
  auto it = costs.find(c);
  if (it == costs.end()) throw NotFound("no cost data for " + to_string(c));
  auto jt = it->second.find(year);
  if (jt == it->second.end())
    throw InvalidArgument("no cost data for " + to_string(c) + " in " + std::to_string(year));
  return jt->second;
}

void TechnoEconomics::validate() const {
  if (!(discount_rate > 0 && discount_rate < 1)) throw InvalidArgument("discount rate must be in (0, 1)");
  for (const auto& [c, by_year] : costs)
    for (const auto& [y, p] : by_year) {
      const auto where = to_string(c) + " " + std::to_string(y);
      if (!(p.lifetime > 0)) throw InvalidArgument("lifetime must be positive: " + where);
      if (!(p.capex >= 0) || !(p.fix_om >= 0) || !(p.var_om >= 0))
        throw InvalidArgument("cost parameters must be >= 0: " + where);
    }
}

TechnoEconomics techno_economics_from_json(const nlohmann::json& j, TechnoEconomics te) {
  try {
    if (j.contains("discount_rate")) te.discount_rate = j.at("discount_rate").get<double>();
    if (j.contains("components"))
      for (const auto& [name, years] : j.at("components").items()) {
        const auto c = parse_component(name);
        for (const auto& [ys, p] : years.items()) {
          auto& dst = te.costs[c][std::stoi(ys)];
          dst.capex = p.value("capex", dst.capex);
          dst.fix_om = p.value("fix_om", dst.fix_om);
          dst.var_om = p.value("var_om", dst.var_om);
          dst.lifetime = p.value("lifetime", dst.lifetime);
        }
      }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("techno-economics: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("techno-economics: year keys must be integers");
  }
  te.validate();
  return te;
}

nlohmann::json to_json(const TechnoEconomics& te) {
  nlohmann::json j;
  j["discount_rate"] = te.discount_rate;
  for (const auto& [c, by_year] : te.costs)
    for (const auto& [y, p] : by_year)
      j["components"][to_string(c)][std::to_string(y)] = {
          {"capex", p.capex}, {"fix_om", p.fix_om}, {"var_om", p.var_om}, {"lifetime", p.lifetime}};
  return j;
}

double crf(double r, double n) {
  if (!(n > 0)) throw InvalidArgument("lifetime must be positive");
  if (!(r >= 0 && r < 1)) throw InvalidArgument("discount rate must be in [0, 1)");
  if (r * n < 1e-8) return 1.0 / n + r / 2.0;  // series expansion near r = 0
  const double q = std::pow(1.0 + r, n);
  return r * q / (q - 1.0);
}

double annual_fixed_cost(const CostParams& p, double r) { return (crf(r, p.lifetime) + p.fix_om) * p.capex; }

double lcoe(double capacity_mw, double annual_energy_mwh, const CostParams& p, double r) {
  if (!(capacity_mw > 0)) throw InvalidArgument("capacity must be positive");
  if (!(annual_energy_mwh > 0)) throw InvalidArgument("no yield");
  // €/kW/yr · kW / kWh
  return annual_fixed_cost(p, r) * capacity_mw * 1000.0 / (annual_energy_mwh * 1000.0) + p.var_om;
}

double lcoe(double capacity_mw, double annual_energy_mwh, const TechnoEconomics& te, Component c, int year) {
  return lcoe(capacity_mw, annual_energy_mwh, te.at(c, year), te.discount_rate);
}

Component component_of(Tech t) { return t == Tech::wind ? Component::wind : Component::pv; }

GenAsset make_asset(Tech tech, double capacity_mw, Series cf, const TechnoEconomics& te, int year) {
  if ((cf < 0).any() || (cf > 1).any()) throw InvalidArgument("capacity factors must lie in [0, 1]");
  GenAsset a;
  a.tech = tech;
  a.capacity_mw = capacity_mw;
  a.annual_energy_mwh = capacity_mw * cf.sum();
  a.cf = std::move(cf);
  a.lcoe = lcoe(capacity_mw, a.annual_energy_mwh, te, component_of(tech), year);
  return a;
}

std::vector<LcoeCluster> cluster_by_lcoe(std::span<const GenAsset> assets, int n_bins) {
  if (assets.empty()) throw InvalidArgument("no assets to cluster");
  if (n_bins < 1) throw InvalidArgument("n_bins must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(assets.begin(), assets.end(),
                                                  [](const GenAsset& a, const GenAsset& b) { return a.lcoe < b.lcoe; });
  const double lo = lo_it->lcoe, width = hi_it->lcoe - lo;
  const auto len = assets.front().cf.size();

  std::vector<LcoeCluster> bins(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    bins[static_cast<std::size_t>(b)].bin_index = b;
    bins[static_cast<std::size_t>(b)].tech = assets.front().tech;
    bins[static_cast<std::size_t>(b)].cf = Series::Zero(len);
  }
  for (const auto& a : assets) {
    if (a.cf.size() != len) throw InvalidArgument("assets have different series lengths");
    if (a.tech != assets.front().tech) throw InvalidArgument("cannot cluster mixed technologies");
    int b = width > 0 ? static_cast<int>(std::floor((a.lcoe - lo) / width * n_bins)) : 0;
    b = std::clamp(b, 0, n_bins - 1);
    auto& c = bins[static_cast<std::size_t>(b)];
    ++c.members;
    c.capacity_mw += a.capacity_mw;
    c.cf += a.capacity_mw * a.cf;
    c.lcoe += a.capacity_mw * a.lcoe;
    c.annual_energy_mwh += a.annual_energy_mwh;
  }
  std::vector<LcoeCluster> out;
  for (auto& c : bins) {
    if (c.members == 0) continue;
    c.cf /= c.capacity_mw;
    c.lcoe /= c.capacity_mw;
    out.push_back(std::move(c));
  }
  return out;
}

void HydroPlant::validate() const {
  if (!(capacity_mw > 1.0)) throw InvalidArgument("hydro plant " + id + ": capacity must exceed 1 MW");
  for (double m : monthly_mwh)
    if (!(m >= 0)) throw InvalidArgument("hydro plant " + id + ": negative monthly generation");
}

std::vector<HydroPlant> parse_hydro_csv(std::string_view text) {
  const auto t = csv::parse(text);
  const auto cid = t.column("id"), ctype = t.column("type"), ccap = t.column("capacity_mw");
  std::array<std::size_t, 12> cm{};
  for (int m = 0; m < 12; ++m) {
    char name[4];
    std::snprintf(name, sizeof name, "m%02d", m + 1);
    cm[static_cast<std::size_t>(m)] = t.column(name);
  }
  std::vector<HydroPlant> out;
  for (const auto& row : t.rows) {
    HydroPlant p;
    p.id = row[cid];
    if (row[ctype] == "run-of-river" || row[ctype] == "run_of_river" || row[ctype] == "ror")
      p.type = HydroType::run_of_river;
    else if (row[ctype] == "reservoir")
      p.type = HydroType::reservoir;
    else
      throw ParseError("hydro plant " + p.id + ": unknown type '" + row[ctype] + "'");
    p.capacity_mw = csv::to_double(row[ccap], "capacity_mw");
    for (std::size_t m = 0; m < 12; ++m) p.monthly_mwh[m] = csv::to_double(row[cm[m]], "monthly generation");
    if (p.capacity_mw <= 1.0) continue;
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<HydroPlant> read_hydro_csv(const std::filesystem::path& path) {
  try {
    return parse_hydro_csv(csv::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

const std::array<int, 12>& month_hours() {
  static const std::array<int, 12> h = {744, 672, 744, 720, 744, 720, 744, 744, 720, 744, 720, 744};
  return h;
}

Series hydro_hourly(const HydroPlant& plant) {
  plant.validate();
  const auto& len = month_hours();
  // anchors: 14 points, Dec of the previous year .. Jan of the next
  std::array<double, 14> at{}, val{};
  double start = 0;
  for (std::size_t m = 0; m < 12; ++m) {
    at[m + 1] = start + 0.5 * len[m];
    val[m + 1] = plant.monthly_mwh[m] / len[m];
    start += len[m];
  }
  at[0] = at[12] - static_cast<double>(kHours);
  val[0] = val[12];
  at[13] = at[1] + static_cast<double>(kHours);
  val[13] = val[1];

  Series out(kHours);
  std::size_t k = 0;
  for (Eigen::Index h = 0; h < kHours; ++h) {
    const double t = static_cast<double>(h) + 0.5;  // hour midpoint
    while (at[k + 1] < t) ++k;
    const double f = (t - at[k]) / (at[k + 1] - at[k]);
    out[h] = std::max(0.0, val[k] + f * (val[k + 1] - val[k]));
  }
  return out;
}

}  // namespace h2atlas::res
