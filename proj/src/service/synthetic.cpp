#include "h2atlas/service/synthetic.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <tuple>
#include <chrono>
#include <map>

#include "json.hpp"

#include "h2atlas/digest.hpp"
#include "h2atlas/error.hpp"
#include "h2atlas/water.hpp"

namespace h2atlas::service::synthetic {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// mt19937_64 output is fully specified; the transforms below are ours so
// the fixture does not depend on the standard library's distributions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 g_;
};

void write(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

json box(double lon0, double lat0, double lon1, double lat1) {
  return {{"type", "Polygon"},
          {"coordinates", {{{lon0, lat0}, {lon1, lat0}, {lon1, lat1}, {lon0, lat1}, {lon0, lat0}}}}};
}

json feature(json geometry, json props = json::object()) {
  return {{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(props)}};
}

json line(std::initializer_list<std::array<double, 2>> pts) {
  json c = json::array();
  for (const auto& p : pts) c.push_back({p[0], p[1]});
  return {{"type", "LineString"}, {"coordinates", c}};
}

json collection(json features) { return {{"type", "FeatureCollection"}, {"features", std::move(features)}}; }

struct RegionDef {
  std::string gid;
  double lon0, lat0, lon1, lat1;
};

const std::array<RegionDef, 3> kDefs{{{"BEN.10_1", 2.45, 6.45, 2.55, 6.55},
                                      {"BEN.10_2", 2.55, 6.45, 2.65, 6.55},
                                      {"BEN.5_1", 2.30, 6.75, 2.40, 6.85}}};

std::string weather_csv(std::uint64_t seed, double speed_mean, double cloud_lo) {
  Rng rng(seed);
  std::string s = "timestamp,wind_speed,wind_dir,ghi,temp\n";
  double z = 0, cloud = 1;
  for (int t = 0; t < 8760; ++t) {
    const int day = t / 24, hour = t % 24;
    if (hour == 0) cloud = rng.uniform(cloud_lo, 1.0);
    z = 0.95 * z + std::sqrt(1 - 0.95 * 0.95) * rng.normal();
    const double diurnal = 1.0 + 0.15 * std::cos(2 * std::numbers::pi * (hour - 15) / 24.0);
    const double seasonal = 1.0 + 0.2 * std::sin(2 * std::numbers::pi * (day - 100) / 365.0);
    const double ws = std::max(0.0, speed_mean * diurnal * seasonal * (1.0 + 0.35 * z));
    const double dir = std::fmod(215.0 + 25.0 * rng.normal() + 360.0, 360.0);
    const double sun = hour >= 6 && hour < 18 ? std::sin(std::numbers::pi * (hour - 6 + 0.5) / 12.0) : 0.0;
    const double ghi = 980.0 * sun * cloud;
    const double temp = 26.0 + 4.0 * sun + 1.5 * rng.normal();
    const auto ymd = std::chrono::year_month_day{std::chrono::sys_days{std::chrono::year(2019) / 1 / 1} + std::chrono::days(day)};
    char stamp[32];
    std::snprintf(stamp, sizeof stamp, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour);
    s += std::string(stamp) + "," + fmt17(ws) + "," + fmt17(dir) + "," + fmt17(ghi) + "," + fmt17(temp) + "\n";
  }
  return s;
}

// Geographic 0.05° grid over lon [2.2, 2.8), lat [6.3, 6.9).
std::string water_grid(const std::string& var, int year, int combo, water::Rcp rcp) {
  constexpr int n = 12;
  const double cell = 0.05, x0 = 2.2, y0 = 6.3;
  Rng rng(fnv1a64(var + "/" + std::to_string(year) + "/" + std::to_string(combo) + "/" + water::to_string(rcp)));
  const double trend = (year - 2015) * (rcp == water::Rcp::rcp85 ? -4.0 : -1.0);
  std::string s = "ncols 12\nnrows 12\nxllcorner " + fmt17(x0) + "\nyllcorner " + fmt17(y0) + "\ncellsize " + fmt17(cell) +
                  "\nnodata_value -9999\n";
  for (int r = 0; r < n; ++r) {
    const double lat = y0 + (n - r - 0.5) * cell;
    for (int c = 0; c < n; ++c) {
      double v = 0;
      const double noise = rng.normal();
      if (var == "P") v = (lat > 6.7 ? 780.0 : 1250.0) + trend + 40.0 * noise + 10.0 * combo;
      else if (var == "I") v = 20.0 + 5.0 * std::abs(noise);
      else if (var == "ET") v = 720.0 + 25.0 * noise;
      else if (var == "Q") v = 240.0 + 20.0 * noise;
      else v = 15.0 + 3.0 * std::abs(noise);  // SWU
      s += (c ? " " : "") + fmt17(v);
    }
    s += "\n";
  }
  return s;
}

json preferences() {
  // BEN states a subset; TGO and NGA cover every criterion, so the rest
  // falls back to the medians.
  json out = json::array();
  const std::array<double, 33> wind_base{1000, 500, 5000, 300, 150, 0,   0,   300, 250, 1000, 500,
                                         500,  300, 300,  500, 1000, 500, 200, 100, 200, 1000, 0,
                                         200,  500, 100,  500, 1000, 500, 1000, 500, 1000, 1000, 500};
  for (const char* tech : {"wind", "pv"}) {
    const double scale = std::string(tech) == "pv" ? 0.3 : 1.0;
    using Row = std::tuple<const char*, double, int>;
    for (const auto& [country, f, upto] : std::array<Row, 3>{Row{"BEN", 1.0, 20}, Row{"TGO", 0.8, 33}, Row{"NGA", 1.3, 33}}) {
      json b = json::object();
      for (int id = 1; id <= upto; ++id) b[std::to_string(id)] = std::round(wind_base[id - 1] * scale * f);
      out.push_back({{"country", country}, {"tech", tech}, {"buffers", b}});
    }
  }
  return out;
}

}  // namespace

fs::path write_fixture(const fs::path& dir, const Options& opt) {
  fs::create_directories(dir);

  json regions = json::array();
  for (const auto& d : kDefs) {
    auto g = box(d.lon0, d.lat0, d.lon1, d.lat1);
    if (opt.corrupt_region && d.gid == "BEN.10_2") g["coordinates"][0][2][1] = 95.0;
    regions.push_back(feature(g, {{"gid", d.gid}, {"elevation_m", d.lat0 > 6.7 ? "60" : "15"}}));
  }
  write(dir / "regions.geojson", collection(regions).dump(1) + "\n");

  std::map<std::string, json> layers;
  layers["settlements_connected"] = collection({feature(box(2.47, 6.47, 2.49, 6.49)), feature(box(2.60, 6.50, 2.62, 6.515)),
                                                feature(box(2.34, 6.79, 2.355, 6.805))});
  layers["settlements_isolated"] = collection({feature({{"type", "Point"}, {"coordinates", {2.52, 6.53}}}),
                                               feature({{"type", "Point"}, {"coordinates", {2.37, 6.77}}})});
  layers["roads_primary"] = collection({feature(line({{2.40, 6.50}, {2.70, 6.52}})), feature(line({{2.35, 6.70}, {2.36, 6.90}}))});
  layers["rivers"] = collection({feature(line({{2.58, 6.40}, {2.60, 6.60}}))});
  layers["forests"] = collection({feature(box(2.50, 6.535, 2.545, 6.55)), feature(box(2.38, 6.82, 2.40, 6.85))});
  layers["parks"] = collection({feature(box(2.625, 6.455, 2.65, 6.49))});
  layers["power_lines"] = collection({feature(line({{2.45, 6.46}, {2.65, 6.46}}))});
  json layer_paths = json::object();
  for (const auto& [k, v] : layers) {
    write(dir / "layers" / (k + ".geojson"), v.dump(1) + "\n");
    layer_paths[k] = "layers/" + k + ".geojson";
  }

  write(dir / "preferences.json", preferences().dump(1) + "\n");

  json weather = json::object();
  std::uint64_t seed = 11;
  for (const auto& d : kDefs) {
    const double lat = 0.5 * (d.lat0 + d.lat1);
    json pts = json::array();
    for (int k = 0; k < 2; ++k) {
      const double lon = d.lon0 + (k + 0.5) * (d.lon1 - d.lon0) / 2;
      const auto rel = "weather/" + d.gid + "_" + std::to_string(k) + ".csv";
      write(dir / rel, weather_csv(seed++, 5.6 + 0.4 * k + (d.lat0 > 6.7 ? -0.5 : 0.0), 0.45 + 0.1 * k));
      pts.push_back({{"path", rel}, {"lon", lon}, {"lat", lat}});
    }
    weather[d.gid] = pts;
  }

  for (int target : opt.water_years) {
    const auto [y0, y1] = water::averaging_window(target);
    for (auto rcp : {water::Rcp::rcp26, water::Rcp::rcp85})
      for (int y = y0; y <= y1; ++y)
        for (int c = 1; c <= water::kCombos; ++c)
          for (const char* var : {"P", "I", "ET", "Q", "SWU"}) {
            const auto p = water::grid_path(dir / "water", var, y, c, rcp);
            if (!fs::exists(p)) write(p, water_grid(var, y, c, rcp));
          }
  }

  write(dir / "coast.geojson", collection({feature(line({{1.6, 6.35}, {2.2, 6.36}, {2.8, 6.38}}))}).dump(1) + "\n");

  write(dir / "hydro" / "BEN.10_2.csv",
        "id,type,capacity_mw,m01,m02,m03,m04,m05,m06,m07,m08,m09,m10,m11,m12\n"
        "oueme_ror,ror,6,1200,900,800,1100,2000,3000,3500,3800,3600,2800,1900,1400\n");

  write(dir / "demographics.csv",
        "gid,area_km2,urban_pop,rural_pop,labor_share,unemployment,poverty,no_access_elec_u,no_access_elec_r,"
        "no_access_fuel_u,no_access_fuel_r\n"
        "BEN.10_1,124,310000,190000,0.55,0.016,0.36,0.25,0.78,0.88,0.98\n"
        "BEN.10_2,124,60000,140000,0.52,0.021,0.45,,,0.92,\n"
        "BEN.5_1,124,40000,160000,0.58,0.012,0.51,0.31,0.85,,\n");

  const int year = *opt.water_years.begin();
  json cfg{{"name", "synthetic-benin"},
           {"scenario", {{"year", year}, {"rcp", "rcp26"}, {"case", "medium"}}},
           {"regions", "regions.geojson"},
           {"country", "BEN"},
           {"preferences", "preferences.json"},
           {"criteria_layers", layer_paths},
           {"cell_size_m", opt.cell_size_m},
           {"weather", weather},
           {"hydro", {{"BEN.10_2", "hydro/BEN.10_2.csv"}}},
           {"water_dir", "water"},
           {"coast", "coast.geojson"},
           {"demographics", "demographics.csv"},
           {"lcoe_bins", 3},
           {"curve", {{"base_demand_t", 20000}, {"growth", 1.25}, {"max_steps", 20}, {"representative_days", 12}}},
           {"local_demand", {{"BEN.10_1", {{"h2_t", 500}, {"elec_mwh", 20000}}}}},
           {"socio", {{"national_access", {{"elec_urban", 0.3}, {"elec_rural", 0.82}, {"fuel_urban", 0.9}, {"fuel_rural", 0.97}}}}}};
  write(dir / "config.json", cfg.dump(2) + "\n");
  return dir / "config.json";
}

}  // namespace h2atlas::service::synthetic
