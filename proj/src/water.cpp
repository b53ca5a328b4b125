#include "h2atlas/water.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "h2atlas/error.hpp"
#include "h2atlas/geo/raster.hpp"

namespace h2atlas::water {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same(const FloatGrid& a, const FloatGrid& b, const char* what) {
  if (!(a.geometry() == b.geometry())) throw InvalidArgument(std::string("grid geometry mismatch: ") + what);
}

// Reads an ASCII grid and turns nodata cells into NaN.
FloatGrid read_nan_grid(const std::filesystem::path& path) {
  auto g = geo::read_grid(path.string());
  if (auto nd = g.nodata()) g.values() = (g.values() == *nd).select(kNaN, g.values());
  g.set_nodata(std::nullopt);
  return g;
}

double crf(double r, double n) {
  const double q = std::pow(1.0 + r, n);
  return r * q / (q - 1.0);
}

}  // namespace

double env_flow_fraction(Case c) {
  switch (c) {
    case Case::conservative: return 0.9;
    case Case::medium: return 0.6;
    case Case::extreme: return 0.3;
  }
  return 0.9;
}

std::string to_string(Case c) {
  switch (c) {
    case Case::conservative: return "conservative";
    case Case::medium: return "medium";
    case Case::extreme: return "extreme";
  }
  return "?";
}

Case parse_case(const std::string& s) {
  if (s == "conservative") return Case::conservative;
  if (s == "medium") return Case::medium;
  if (s == "extreme") return Case::extreme;
  throw InvalidArgument("unknown water case '" + s + "' (expected conservative, medium or extreme)");
}

std::string to_string(Rcp r) { return r == Rcp::rcp26 ? "rcp26" : "rcp85"; }

Rcp parse_rcp(const std::string& s) {
  if (s == "rcp26" || s == "2.6" || s == "26" || s == "RCP2.6") return Rcp::rcp26;
  if (s == "rcp85" || s == "8.5" || s == "85" || s == "RCP8.5") return Rcp::rcp85;
  throw InvalidArgument("unknown RCP '" + s + "' (expected 2.6 or 8.5)");
}

std::pair<int, int> averaging_window(int target_year) {
  switch (target_year) {
    case 2020: return {2015, 2035};
    case 2030: return {2015, 2045};
    case 2050: return {2036, 2065};
    default: throw InvalidArgument("no water averaging window for " + std::to_string(target_year));
  }
}

double recharge(double p, double i, double et, double q) { return p + i - et - q; }

double sustainable_yield(double r, double swu, Case c) { return (1.0 - env_flow_fraction(c)) * r - swu; }

FloatGrid recharge(const BalanceInputs& in) {
  std::string missing;
  if (!in.precipitation) missing += " P";
  if (!in.irrigation) missing += " I";
  if (!in.evapotranspiration) missing += " ET";
  if (!in.runoff) missing += " Q";
  if (!missing.empty()) throw InvalidArgument("missing water balance components:" + missing);
  require_same(*in.precipitation, *in.irrigation, "I");
  require_same(*in.precipitation, *in.evapotranspiration, "ET");
  require_same(*in.precipitation, *in.runoff, "Q");
  FloatGrid r(in.precipitation->geometry());
  r.values() = in.precipitation->values() + in.irrigation->values() - in.evapotranspiration->values() -
               in.runoff->values();
  return r;
}

FloatGrid sustainable_yield(const FloatGrid& r, const FloatGrid& swu, Case c) {
  require_same(r, swu, "SWU");
  FloatGrid sy(r.geometry());
  sy.values() = (1.0 - env_flow_fraction(c)) * r.values() - swu.values();
  return sy;
}

FloatGrid scenario_average(const SyStack& stack, const ScenarioSpec& spec) {
  const auto [y0, y1] = spec.window();
  std::string missing;
  const FloatGrid* first = nullptr;
  for (int y = y0; y <= y1; ++y) {
    auto it = stack.find(y);
    for (int c = 1; c <= kCombos; ++c) {
      if (it == stack.end() || !it->second.contains(c)) {
        missing += " " + std::to_string(y) + "/" + std::to_string(c);
        continue;
      }
      if (!first) first = &it->second.at(c);
    }
  }
  if (!missing.empty()) throw NotFound("missing year/combination inputs:" + missing);

  FloatGrid out(first->geometry(), 0.0);
  for (int y = y0; y <= y1; ++y) {
    FloatGrid::ArrayType year_sum = FloatGrid::ArrayType::Zero(out.rows(), out.cols());
    for (int c = 1; c <= kCombos; ++c) {
      const auto& g = stack.at(y).at(c);
      require_same(*first, g, "scenario stack");
      year_sum += g.values();
    }
    out.values() += year_sum / kCombos;
  }
  out.values() /= static_cast<double>(y1 - y0 + 1);
  return out;
}

FloatGrid geographic_cell_areas(const geo::GridGeometry& g) {
  constexpr double r = std::numbers::pi / 180.0;
  FloatGrid a(g);
  const double dlam = g.cell_size * r;
  for (Eigen::Index row = 0; row < g.nrows; ++row) {
    const double top = g.center_y(row) + 0.5 * g.cell_size, bottom = top - g.cell_size;
    if (top > 90.0 + 1e-9 || bottom < -90.0 - 1e-9) throw InvalidArgument("geographic grid exceeds the poles");
    a.values().row(row).setConstant(geo::kEarthRadius * geo::kEarthRadius * dlam *
                                    (std::sin(std::min(top, 90.0) * r) - std::sin(std::max(bottom, -90.0) * r)));
  }
  return a;
}

double region_volume_m3(const FloatGrid& sy_mm, const Mask& region, const FloatGrid& cell_area_m2) {
  if (!(sy_mm.geometry() == region.geometry()) || !(sy_mm.geometry() == cell_area_m2.geometry()))
    throw InvalidArgument("grid geometry mismatch in region volume");
  const auto& v = sy_mm.values();
  const auto usable = region.values() && v.isFinite() && (v > 0.0);
  return (usable.select(v * cell_area_m2.values(), 0.0)).sum() / 1000.0;
}

double region_mean(const FloatGrid& sy_mm, const Mask& region) {
  const auto& v = sy_mm.values();
  const auto sel = region.values() && v.isFinite();
  const auto n = sel.count();
  return n == 0 ? kNaN : sel.select(v, 0.0).sum() / static_cast<double>(n);
}

std::filesystem::path grid_path(const std::filesystem::path& dir, const std::string& var, int year, int combo,
                                Rcp rcp) {
  return dir / (var + "_" + std::to_string(year) + "_" + std::to_string(combo) + "_" + to_string(rcp) + ".asc");
}

SyStack load_sy_stack(const std::filesystem::path& dir, const ScenarioSpec& spec) {
  const auto [y0, y1] = spec.window();
  std::string missing;
  for (int y = y0; y <= y1; ++y)
    for (int c = 1; c <= kCombos; ++c)
      for (const char* var : {"P", "I", "ET", "Q", "SWU"})
        if (!std::filesystem::exists(grid_path(dir, var, y, c, spec.rcp)))
          missing += " " + grid_path(dir, var, y, c, spec.rcp).filename().string();
  if (!missing.empty()) throw NotFound("missing water inputs in " + dir.string() + ":" + missing);

  SyStack stack;
  for (int y = y0; y <= y1; ++y)
    for (int c = 1; c <= kCombos; ++c) {
      BalanceInputs in{read_nan_grid(grid_path(dir, "P", y, c, spec.rcp)), read_nan_grid(grid_path(dir, "I", y, c, spec.rcp)),
                       read_nan_grid(grid_path(dir, "ET", y, c, spec.rcp)), read_nan_grid(grid_path(dir, "Q", y, c, spec.rcp))};
      stack[y].emplace(c, sustainable_yield(recharge(in), read_nan_grid(grid_path(dir, "SWU", y, c, spec.rcp)),
                                            spec.water_case));
    }
  return stack;
}

std::vector<RegionWater> region_water(const FloatGrid& sy, const ScenarioSpec& spec,
                                      std::span<const std::pair<std::string, geo::VectorFeature>> regions) {
  const auto area = geographic_cell_areas(sy.geometry());
  std::vector<RegionWater> out;
  for (const auto& [gid, feature] : regions) {
    const auto mask = geo::rasterize(std::span(&feature, 1), sy.geometry());
    out.push_back({gid, spec, region_mean(sy, mask), region_volume_m3(sy, mask, area)});
  }
  return out;
}

nlohmann::json to_json(const RegionWater& r) {
  nlohmann::json j{{"gid", r.gid},
                   {"rcp", to_string(r.spec.rcp)},
                   {"case", to_string(r.spec.water_case)},
                   {"year", r.spec.target_year},
                   {"volume_m3", r.volume_m3}};
  j["sy_mm"] = std::isfinite(r.sy_mm) ? nlohmann::json(r.sy_mm) : nlohmann::json(nullptr);
  return j;
}

FloatGrid with_nodata(const FloatGrid& g, double nodata) {
  FloatGrid out = g;
  out.values() = g.values().isFinite().select(g.values(), nodata);
  out.set_nodata(nodata);
  return out;
}

void DesalParams::validate() const {
  for (double v : {specific_energy_kwh_m3, capex_per_m3_day, lifetime, availability, reference_plant_m3_h,
                   solar_multiplier, pipe_lifetime, pump_efficiency, max_coast_distance_km, discount_rate})
    if (!(v > 0)) throw InvalidArgument("desalination parameters must be positive");
  for (double v : {fix_om, pipe_capex_per_m3_h_km, pipe_fix_om, friction_head_m_per_km})
    if (!(v >= 0)) throw InvalidArgument("desalination cost parameters must be >= 0");
  if (availability > 1 || pump_efficiency > 1) throw InvalidArgument("availability and efficiency must be <= 1");
  if (!(detour_factor >= 1)) throw InvalidArgument("detour factor must be >= 1");
  if (discount_rate >= 1) throw InvalidArgument("discount rate must be < 1");
}

DesalParams desal_params_from_json(const nlohmann::json& j, DesalParams p) {
  try {
    p.specific_energy_kwh_m3 = j.value("specific_energy_kwh_m3", p.specific_energy_kwh_m3);
    p.capex_per_m3_day = j.value("capex_per_m3_day", p.capex_per_m3_day);
    p.fix_om = j.value("fix_om", p.fix_om);
    p.lifetime = j.value("lifetime", p.lifetime);
    p.availability = j.value("availability", p.availability);
    p.reference_plant_m3_h = j.value("reference_plant_m3_h", p.reference_plant_m3_h);
    p.solar_multiplier = j.value("solar_multiplier", p.solar_multiplier);
    p.detour_factor = j.value("detour_factor", p.detour_factor);
    p.pipe_capex_per_m3_h_km = j.value("pipe_capex_per_m3_h_km", p.pipe_capex_per_m3_h_km);
    p.pipe_lifetime = j.value("pipe_lifetime", p.pipe_lifetime);
    p.pipe_fix_om = j.value("pipe_fix_om", p.pipe_fix_om);
    p.pump_efficiency = j.value("pump_efficiency", p.pump_efficiency);
    p.friction_head_m_per_km = j.value("friction_head_m_per_km", p.friction_head_m_per_km);
    p.max_coast_distance_km = j.value("max_coast_distance_km", p.max_coast_distance_km);
    p.discount_rate = j.value("discount_rate", p.discount_rate);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("desalination parameters: ") + e.what());
  }
  p.validate();
  return p;
}

DesalCost desal_cost(double pipe_length_km, double elevation_m, double solar_lcoe, const DesalParams& p) {
  p.validate();
  if (!(solar_lcoe > 0)) throw InvalidArgument("solar LCOE must be positive");
  if (!(pipe_length_km >= 0)) throw InvalidArgument("pipe length must be >= 0");
  const double power_price = p.solar_multiplier * solar_lcoe;
  DesalCost c;
  c.pipe_length_km = pipe_length_km;
  // capex per m³/day of capacity; one unit delivers 365·availability m³/yr
  c.plant_lcow = (crf(p.discount_rate, p.lifetime) + p.fix_om) * p.capex_per_m3_day / (365.0 * p.availability) +
                 p.specific_energy_kwh_m3 * power_price;
  constexpr double rho = 1000.0, g = 9.81;
  const double head = std::max(elevation_m, 0.0) + p.friction_head_m_per_km * pipe_length_km;
  c.pump_kwh_per_m3 = rho * g * head / (3.6e6 * p.pump_efficiency);
  // pipe capex per m³/h of capacity; one unit delivers 8760·availability m³/yr
  const double pipe_annual = (crf(p.discount_rate, p.pipe_lifetime) + p.pipe_fix_om) * p.pipe_capex_per_m3_h_km *
                             pipe_length_km;
  c.transport = pipe_annual / (8760.0 * p.availability) + c.pump_kwh_per_m3 * power_price;
  c.delivered = c.plant_lcow + c.transport;
  return c;
}

std::optional<double> distance_to_coast_km(geo::LonLat from, std::span<const geo::Polyline> coast) {
  using V = Eigen::Vector3d;
  constexpr double r = std::numbers::pi / 180.0;
  auto unit = [](double lon, double lat) {
    return V(std::cos(lat * r) * std::cos(lon * r), std::cos(lat * r) * std::sin(lon * r), std::sin(lat * r));
  };
  auto angle = [](const V& a, const V& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); };
  const V p = unit(from.lon, from.lat);
  std::optional<double> best;
  auto consider = [&](double rad) {
    const double km = rad * geo::kEarthRadius / 1000.0;
    if (!best || km < *best) best = km;
  };
  for (const auto& line : coast)
    for (std::size_t i = 0; i < line.size(); ++i) {
      const V a = unit(line[i].x, line[i].y);
      consider(angle(p, a));
      if (i + 1 == line.size()) break;
      // foot of the perpendicular on the segment's great circle
      const V b = unit(line[i + 1].x, line[i + 1].y);
      V n = a.cross(b);
      if (n.norm() < 1e-15) continue;
      n.normalize();
      V c = p - p.dot(n) * n;
      if (c.norm() < 1e-15) continue;
      c.normalize();
      if (a.cross(c).dot(n) >= 0 && c.cross(b).dot(n) >= 0) consider(angle(p, c));
    }
  return best;
}

DesalCost desal_water_cost(geo::LonLat centroid, std::span<const geo::Polyline> coast, double elevation_m,
                           double solar_lcoe, const DesalParams& p) {
  p.validate();
  const auto d = distance_to_coast_km(centroid, coast);
  if (!d || *d > p.max_coast_distance_km) throw NotFound("no coastal access");
  return desal_cost(*d * p.detour_factor, elevation_m, solar_lcoe, p);
}

}  // namespace h2atlas::water
