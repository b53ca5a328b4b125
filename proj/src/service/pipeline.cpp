#include "h2atlas/service/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <set>

#include "h2atlas/csv.hpp"
#include "h2atlas/digest.hpp"
#include "h2atlas/error.hpp"
#include "h2atlas/geo/raster.hpp"
#include "h2atlas/h2opt.hpp"
#include "h2atlas/placement.hpp"
#include "h2atlas/res_sim.hpp"
#include "h2atlas/service/thread_pool.hpp"
#include "h2atlas/socio.hpp"
#include "h2atlas/water.hpp"

namespace h2atlas::service {

namespace {

using nlohmann::json;
constexpr Tech kTechs[] = {Tech::wind, Tech::pv};

class Memo {
public:
  explicit Memo(const Store& s) : store_(s) {}

  template <typename F>
  json get(const std::string& stage, const std::string& key, F&& compute) {
    if (auto hit = store_.memo_get(stage, key)) {
      ++hits;
      return json::parse(*hit);
    }
    ++misses;
    json out = compute();
    store_.memo_put(stage, key, out.dump());
    return out;
  }

  std::atomic<int> hits{0}, misses{0};

private:
  const Store& store_;
};

std::string key_of(json k, const std::string& stage) {
  k["stage"] = stage;
  k["version"] = module_versions().at(stage);
  return Fnv1a().update(k.dump()).hex();
}

std::string digest_or_missing(const fs::path& p) {
  try {
    return file_digest(p);
  } catch (const NotFound&) {
    return "missing";
  }
}

std::string water_key(const PipelineConfig& cfg) {
  const auto [y0, y1] = cfg.scenario.spec().window();
  return "water/" + water::to_string(cfg.scenario.rcp) + "/" + std::to_string(y0) + "-" + std::to_string(y1);
}

json vec(const res::Series& s) { return std::vector<double>(s.data(), s.data() + s.size()); }

res::Series series(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const res::Series>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Stage failures carry the stage name into the region status.
struct StageError : Error {
  StageError(std::string s, const std::string& what) : Error(what), stage(std::move(s)) {}
  std::string stage;
};

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

struct RegionWork {
  std::string gid;
  json feature;
  std::optional<RegionFrame> frame;
  RegionStatus status;
  std::map<Tech, json> eligibility;
  std::map<Tech, std::string> eligibility_key, placement_key;
  std::map<Tech, geo::Mask> mask;
  std::map<Tech, json> placement;
  std::string sim_key;
  json sim;
  std::optional<water::RegionWater> water;
  json opt;
  std::optional<double> socio;

  void fail(const std::string& stage, const std::string& error) {
    status.failed = true;
    status.stage = stage;
    status.error = error;
  }
};

struct RunContext {
  const PipelineConfig& cfg;
  const Store& store;
  const std::string& run_id;
  const std::map<std::string, std::string>& digests;
  Memo memo;
  LayerSet layers;
  std::map<Tech, eligibility::BufferMap> buffers;
  std::optional<std::vector<geo::Polyline>> coast;

  json layer_digests() const {
    json j = json::object();
    for (const auto& [k, v] : digests)
      if (k.starts_with("layer/")) j[k] = v;
    return j;
  }
  json weather_digests(const std::string& gid) const {
    json j = json::object();
    for (const auto& [k, v] : digests)
      if (k.starts_with("weather/" + gid + "/")) j[k] = v;
    return j;
  }
  std::string region_file(const std::string& gid, const std::string& name) const { return "regions/" + gid + "/" + name; }
  void write(const std::string& rel, const std::string& content) const { store.write_file(run_id, rel, content); }
};

std::size_t nearest(const std::vector<WeatherPoint>& pts, geo::LonLat p) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (const double d = geo::great_circle_m(pts[i].location, p); d < bd) {
      bd = d;
      best = i;
    }
  return best;
}

// ---- stages ---------------------------------------------------------------

void run_eligibility(RunContext& ctx, RegionWork& w) {
  std::optional<eligibility::CriterionRasters> rasters;
  for (Tech t : kTechs) {
    const auto& b = ctx.buffers.at(t);
    const auto key = key_of({{"feature", fnv1a64(w.feature.dump())},
                             {"layers", ctx.layer_digests()},
                             {"buffers", eligibility::buffers_to_json(b)},
                             {"cell_size_m", ctx.cfg.cell_size_m},
                             {"tech", eligibility::to_string(t)}},
                            "eligibility");
    auto out = ctx.memo.get("eligibility", key, [&] {
      if (!rasters) rasters = region_rasters(*w.frame, ctx.layers);
      const auto r = eligibility::compose(*rasters, b, w.gid, t);
      return json{{"result", eligibility_json(r, b)}, {"mask", geo::format_grid(geo::to_float(r.mask))}};
    });
    w.mask.emplace(t, geo::to_mask(geo::parse_grid(out["mask"].get<std::string>())));
    w.eligibility[t] = out["result"];
    w.eligibility_key[t] = key;
    const auto name = "eligibility_" + eligibility::to_string(t);
    ctx.write(ctx.region_file(w.gid, name + ".json"), out["result"].dump(2) + "\n");
    ctx.write(ctx.region_file(w.gid, name + ".asc"), out["mask"].get<std::string>());
  }
}

void run_placement(RunContext& ctx, RegionWork& w, const std::vector<res::WeatherSeries>& weather) {
  const auto& pts = ctx.cfg.weather.at(w.gid);
  const auto centre = geo::centroid_lonlat({w.frame->lonlat});
  const auto dir = res::main_wind_direction(weather[nearest(pts, centre)]);
  if (!dir) w.status.warnings.push_back("weather has no wind direction; wind rows laid out north-south");
  const double bearing = dir.value_or(0.0);
  for (Tech t : kTechs) {
    json k{{"eligibility", w.eligibility_key.at(t)}, {"tech", eligibility::to_string(t)}};
    if (t == Tech::wind)
      k["params"] = {ctx.cfg.turbine.rated_power_mw, ctx.cfg.turbine.rotor_diameter_m, ctx.cfg.turbine.hub_height_m,
                     fmt17(bearing)};
    else
      k["params"] = {ctx.cfg.pv.land_use_m2_per_kwp, ctx.cfg.pv.seed_spacing_m};
    const auto key = key_of(k, "placement");
    auto out = ctx.memo.get("placement", key, [&] {
      const auto set = t == Tech::wind ? placement::place_wind(w.mask.at(t), ctx.cfg.turbine, bearing)
                                       : placement::place_pv(w.mask.at(t), ctx.cfg.pv);
      json items = json::array();
      for (const auto& it : set.items) items.push_back({it.location.x, it.location.y, it.capacity_mw});
      return json{{"total_capacity_mw", set.total_capacity_mw},
                  {"items", items},
                  {"geojson", placement::to_geojson(set, w.frame->proj)}};
    });
    w.placement[t] = out;
    w.placement_key[t] = key;
    ctx.write(ctx.region_file(w.gid, "placement_" + eligibility::to_string(t) + ".geojson"), out["geojson"].dump() + "\n");
  }
}

void run_simulation(RunContext& ctx, RegionWork& w, const std::vector<res::WeatherSeries>& weather) {
  const auto& cfg = ctx.cfg;
  const auto key = key_of({{"placement", {w.placement_key.at(Tech::wind), w.placement_key.at(Tech::pv)}},
                           {"weather", ctx.weather_digests(w.gid)},
                           {"turbine", {cfg.turbine.rated_power_mw, cfg.turbine.rotor_diameter_m, cfg.turbine.hub_height_m}},
                           {"te", res::to_json(cfg.te)},
                           {"year", cfg.scenario.year},
                           {"bins", cfg.lcoe_bins}},
                          "simulation");
  w.sim = ctx.memo.get("simulation", key, [&] {
    const auto& pts = cfg.weather.at(w.gid);
    json out;
    for (Tech t : kTechs) {
      std::map<std::size_t, res::Series> cf;
      std::vector<res::GenAsset> assets;
      for (const auto& it : w.placement.at(t)["items"]) {
        const auto ll = w.frame->proj.inverse({it[0].get<double>(), it[1].get<double>()});
        const auto i = nearest(pts, ll);
        if (!cf.contains(i))
          cf[i] = t == Tech::wind ? res::simulate_wind(weather[i], cfg.turbine) : res::simulate_pv(weather[i]);
        assets.push_back(res::make_asset(t, it[2].get<double>(), cf[i], cfg.te, cfg.scenario.year));
      }
      json clusters = json::array();
      double cap = 0, weighted = 0;
      if (!assets.empty())
        for (const auto& c : res::cluster_by_lcoe(assets, cfg.lcoe_bins)) {
          cap += c.capacity_mw;
          weighted += c.capacity_mw * c.lcoe;
          clusters.push_back({{"bin", c.bin_index},
                              {"members", c.members},
                              {"capacity_mw", c.capacity_mw},
                              {"lcoe", c.lcoe},
                              {"annual_energy_mwh", c.annual_energy_mwh},
                              {"cf", vec(c.cf)}});
        }
      out[eligibility::to_string(t)] = {{"assets", assets.size()},
                                        {"capacity_mw", cap},
                                        {"lcoe_mean", cap > 0 ? json(weighted / cap) : json(nullptr)},
                                        {"clusters", clusters}};
    }
    return out;
  });
  w.sim_key = key;
  json summary = w.sim;
  for (Tech t : kTechs)
    for (auto& c : summary[eligibility::to_string(t)]["clusters"]) c.erase("cf");
  ctx.write(ctx.region_file(w.gid, "clusters.json"), summary.dump(2) + "\n");
}

void run_water(RunContext& ctx, std::vector<RegionWork>& regions) {
  std::vector<RegionWork*> ok;
  for (auto& w : regions)
    if (!w.status.failed) ok.push_back(&w);
  if (ok.empty()) return;
  json fk = json::array();
  for (auto* w : ok) fk.push_back({w->gid, fnv1a64(w->feature.dump())});
  const auto spec = ctx.cfg.scenario.spec();
  const auto key = key_of({{"inputs", ctx.digests.at(water_key(ctx.cfg))}, {"scenario", to_json(ctx.cfg.scenario)}, {"regions", fk}},
                          "water");
  json out;
  try {
    out = ctx.memo.get("water", key, [&] {
      const auto stack = water::load_sy_stack(ctx.cfg.water_dir, spec);
      const auto sy = water::scenario_average(stack, spec);
      std::vector<std::pair<std::string, geo::VectorFeature>> feats;
      for (auto* w : ok) feats.emplace_back(w->gid, w->frame->lonlat);
      json rs = json::array();
      for (const auto& r : water::region_water(sy, spec, feats)) rs.push_back(water::to_json(r));
      return rs;
    });
  } catch (const std::exception& e) {
    for (auto* w : ok) w->fail("water", e.what());
    return;
  }
  for (std::size_t i = 0; i < ok.size(); ++i) {
    const auto& r = out[i];
    water::RegionWater rw{ok[i]->gid, spec, r["sy_mm"].is_null() ? std::nan("") : r["sy_mm"].get<double>(),
                          r["volume_m3"].get<double>()};
    ok[i]->water = rw;
    ctx.write(ctx.region_file(ok[i]->gid, "water.json"), r.dump(2) + "\n");
  }
}

double property_or(const geo::VectorFeature& f, const std::string& k, double fallback) {
  auto it = f.properties.find(k);
  return it == f.properties.end() ? fallback : csv::to_double(it->second, k);
}

void run_optimization(RunContext& ctx, RegionWork& w) {
  const auto& cfg = ctx.cfg;
  const double elevation = property_or(w.frame->lonlat, "elevation_m", 0.0);
  const auto ld = cfg.local_demand.contains(w.gid) ? cfg.local_demand.at(w.gid) : LocalDemand{};
  const auto hydro_digest = ctx.digests.contains("hydro/" + w.gid) ? ctx.digests.at("hydro/" + w.gid) : "";
  const auto key = key_of({{"simulation", w.sim_key},
                           {"groundwater_m3", fmt17(w.water->volume_m3)},
                           {"groundwater_cost", cfg.groundwater_cost},
                           {"desal", cfg.doc.value("water", json::object()).value("desal", json::object())},
                           {"coast", ctx.digests.contains("coast") ? ctx.digests.at("coast") : ""},
                           {"centroid", fnv1a64(w.feature.dump())},
                           {"hydro", hydro_digest},
                           {"curve", h2opt::to_json(cfg.curve)},
                           {"local", {ld.h2_t, ld.elec_mwh}},
                           {"te", res::to_json(cfg.te)},
                           {"year", cfg.scenario.year}},
                          "optimization");
  w.opt = ctx.memo.get("optimization", key, [&] {
    h2opt::NodeModel node;
    node.region_id = w.gid;
    node.year = cfg.scenario.year;
    node.te = cfg.te;
    double solar_lcoe = std::numeric_limits<double>::infinity();
    for (Tech t : kTechs) {
      const auto tn = eligibility::to_string(t);
      for (const auto& c : w.sim[tn]["clusters"]) {
        node.sources.push_back({tn + "_" + std::to_string(c["bin"].get<int>()), res::component_of(t),
                                c["capacity_mw"].get<double>(), series(c["cf"])});
        if (t == Tech::pv) solar_lcoe = std::min(solar_lcoe, c["lcoe"].get<double>());
      }
    }
    if (cfg.hydro.contains(w.gid)) {
      const auto plants = res::read_hydro_csv(cfg.hydro.at(w.gid));
      for (auto type : {res::HydroType::run_of_river, res::HydroType::reservoir})
        if (auto s = h2opt::hydro_source(plants, type); s.potential_mw > 0) node.sources.push_back(std::move(s));
    }
    node.water.groundwater_m3 = w.water->volume_m3;
    node.water.groundwater_cost = cfg.groundwater_cost;
    json desal = nullptr;
    if (ctx.coast && std::isfinite(solar_lcoe)) {
      try {
        const auto d = water::desal_water_cost(geo::centroid_lonlat({w.frame->lonlat}), *ctx.coast, elevation,
                                               solar_lcoe, cfg.desal);
        node.water.desal_cost = d.delivered;
        desal = {{"delivered", d.delivered}, {"pipe_length_km", d.pipe_length_km}, {"plant_lcow", d.plant_lcow}};
      } catch (const NotFound&) {
      }
    }
    auto curve = h2opt::cost_potential_curve(node, cfg.curve);
    if (ld.h2_t > 0 || ld.elec_mwh > 0) curve = h2opt::deduct_local_demand(curve, ld.h2_t, ld.elec_mwh, node.e_spec_kwh_per_kg);
    json out{{"curve", h2opt::to_json(curve)}, {"csv", h2opt::curve_csv(curve)}, {"desal", desal}};
    out["lcoh"] = curve.steps.empty() ? json(nullptr) : json(curve.steps.front().result.lcoh);
    out["potential_t"] = curve.steps.empty() ? json(nullptr) : json(curve.steps.back().exportable_t);
    return out;
  });
  ctx.write(ctx.region_file(w.gid, "curve.json"), w.opt["curve"].dump(2) + "\n");
  ctx.write(ctx.region_file(w.gid, "curve.csv"), w.opt["csv"].get<std::string>());
  if (w.opt["lcoh"].is_null()) w.status.warnings.push_back("no feasible hydrogen supply at base demand");
}

void run_socio(RunContext& ctx, std::vector<RegionWork>& regions, RunManifest& m) {
  std::vector<RegionWork*> ok;
  for (auto& w : regions)
    if (!w.status.failed) ok.push_back(&w);
  json gids = json::array();
  for (auto* w : ok) gids.push_back(w->gid);
  const auto& so = ctx.cfg.doc.value("socio", json::object());
  const auto key = key_of({{"demographics", ctx.digests.at("demographics")}, {"regions", gids}, {"params", so}}, "socio");
  json out;
  try {
    out = ctx.memo.get("socio", key, [&] {
      auto rows = socio::read_demographics_csv(ctx.cfg.demographics);
      std::map<std::string, socio::RegionDemographics> by_gid;
      for (auto& r : rows) by_gid[r.gid] = r;
      std::vector<socio::RegionDemographics> used;
      json warnings = json::array();
      for (auto* w : ok) {
        auto it = by_gid.find(w->gid);
        if (it == by_gid.end()) {
          warnings.push_back(w->gid + ": no demographics row");
          continue;
        }
        std::vector<socio::RegionDemographics> one{it->second};
        try {
          socio::apply_national_rates(one, ctx.cfg.national_access);
          used.push_back(one.front());
        } catch (const Error& e) {
          warnings.push_back(e.what());
        }
      }
      if (used.size() < 2) {
        warnings.push_back("composite index needs at least two regions with demographics");
        return json{{"regions", json::array()}, {"warnings", warnings}};
      }
      auto j = socio::to_json(socio::composite(used, ctx.cfg.employment, ctx.cfg.weights));
      for (auto& wmsg : warnings) j["warnings"].push_back(wmsg);
      return j;
    });
  } catch (const std::exception& e) {
    m.error = std::string("socio: ") + e.what();
    return;
  }
  std::map<std::string, double> value;
  for (const auto& r : out["regions"]) value[r["gid"]] = r["composite"].get<double>();
  for (auto* w : ok)
    if (value.contains(w->gid)) w->socio = value[w->gid];
  ctx.write("socio.json", out.dump(2) + "\n");
}

std::optional<double> number(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::optional<double> layer_value(const RegionWork& w, const std::string& layer) {
  if (w.status.failed) return std::nullopt;
  if (layer == "eligibility_wind") return w.eligibility.at(Tech::wind)["eligible_fraction"].get<double>();
  if (layer == "eligibility_pv") return w.eligibility.at(Tech::pv)["eligible_fraction"].get<double>();
  if (layer == "lcoe_wind") return number(w.sim["wind"]["lcoe_mean"]);
  if (layer == "lcoe_pv") return number(w.sim["pv"]["lcoe_mean"]);
  if (layer == "sustainable_yield") return std::isfinite(w.water->sy_mm) ? std::optional(w.water->sy_mm) : std::nullopt;
  if (layer == "groundwater_volume") return w.water->volume_m3;
  if (layer == "lcoh") return number(w.opt["lcoh"]);
  if (layer == "h2_potential") return number(w.opt["potential_t"]);
  if (layer == "socio_composite") return w.socio;
  throw NotFound("unknown layer " + layer);
}

}  // namespace

const std::map<std::string, std::string>& module_versions() {
  static const std::map<std::string, std::string> v{{"eligibility", "1.0"}, {"placement", "1.0"},
                                                    {"simulation", "1.0"},  {"water", "1.0"},
                                                    {"optimization", "1.0"}, {"socio", "1.0"},
                                                    {"service", "1.0"}};
  return v;
}

const std::vector<LayerInfo>& layer_catalog() {
  static const std::vector<LayerInfo> c = [] {
    std::vector<LayerInfo> v{{"eligibility_wind", "fraction", ""}, {"eligibility_pv", "fraction", ""},
                             {"lcoe_wind", "EUR/kWh", ""},         {"lcoe_pv", "EUR/kWh", ""},
                             {"sustainable_yield", "mm/yr", ""},   {"groundwater_volume", "m3/yr", ""},
                             {"lcoh", "EUR/kg", ""},               {"h2_potential", "t/yr", ""},
                             {"socio_composite", "z", ""}};
    for (auto& l : v) l.file = "layers/" + l.name + ".csv";
    return v;
  }();
  return c;
}

const LayerInfo& layer_info(const std::string& name) {
  for (const auto& l : layer_catalog())
    if (l.name == name) return l;
  throw NotFound("unknown layer " + name);
}

std::map<std::string, std::string> input_digests(const PipelineConfig& cfg) {
  std::map<std::string, std::string> d;
  d["regions"] = digest_or_missing(cfg.regions);
  d["preferences"] = digest_or_missing(cfg.preferences);
  d["demographics"] = digest_or_missing(cfg.demographics);
  if (cfg.coast) d["coast"] = digest_or_missing(*cfg.coast);
  for (const auto& [k, p] : cfg.criteria_layers) d["layer/" + k] = digest_or_missing(p);
  for (const auto& [gid, pts] : cfg.weather)
    for (std::size_t i = 0; i < pts.size(); ++i) d["weather/" + gid + "/" + std::to_string(i)] = digest_or_missing(pts[i].path);
  for (const auto& [gid, p] : cfg.hydro) d["hydro/" + gid] = digest_or_missing(p);
  const auto spec = cfg.scenario.spec();
  const auto [y0, y1] = spec.window();
  Fnv1a h;
  for (int y = y0; y <= y1; ++y)
    for (int c = 1; c <= water::kCombos; ++c)
      for (const char* var : {"P", "I", "ET", "Q", "SWU"}) {
        const auto p = water::grid_path(cfg.water_dir, var, y, c, spec.rcp);
        h.field(p.filename().string()).field(digest_or_missing(p));
      }
  d[water_key(cfg)] = h.hex();
  return d;
}

std::string make_run_id(const PipelineConfig& cfg, const std::map<std::string, std::string>& digests) {
  // inputs are identified by content, so where they live does not matter
  auto doc = cfg.doc;
  doc.erase("base_dir");
  Fnv1a h;
  h.field(doc.dump());
  for (const auto& [k, v] : digests) h.field(k).field(v);
  for (const auto& [k, v] : module_versions()) h.field(k).field(v);
  return h.hex();
}

std::vector<std::pair<std::string, json>> region_features(const json& collection) {
  if (!collection.is_object() || collection.value("type", "") != "FeatureCollection" ||
      !collection.contains("features") || !collection["features"].is_array())
    throw InvalidArgument("regions must be a GeoJSON FeatureCollection");
  std::vector<std::pair<std::string, json>> out;
  std::set<std::string> seen;
  for (const auto& f : collection["features"]) {
    const auto props = f.value("properties", json::object());
    std::string gid;
    for (const char* k : {"gid", "GID_2", "GID_1"})
      if (props.is_object() && props.contains(k) && props[k].is_string()) {
        gid = props[k];
        break;
      }
    if (gid.empty()) throw InvalidArgument("region feature without a gid property");
    if (!seen.insert(gid).second) throw InvalidArgument("duplicate region gid " + gid);
    out.emplace_back(gid, f);
  }
  if (out.empty()) throw InvalidArgument("no regions");
  return out;
}

RegionFrame region_frame(const std::string& gid, const json& feature, double cell_size_m) {
  const auto fs = geo::parse_geojson(feature);
  if (fs.size() != 1 || fs.front().polygons.empty()) throw InvalidArgument(gid + ": region geometry must be a polygon");
  const auto c = geo::centroid_lonlat(fs);
  geo::Projection proj(c.lon, c.lat);
  auto planar = geo::project(fs.front(), proj);
  const auto grid = geo::grid_covering(geo::bounds({planar}), cell_size_m);
  if (grid.size() > 50'000'000) throw InvalidArgument(gid + ": region grid too large for the cell size");
  return {gid, fs.front(), proj, std::move(planar), grid};
}

LayerSet load_criteria_layers(const PipelineConfig& cfg) {
  LayerSet out;
  for (const auto& [k, p] : cfg.criteria_layers) out[k] = geo::read_geojson(p.string());
  return out;
}

eligibility::BufferMap resolved_buffers(const PipelineConfig& cfg, Tech tech) {
  json doc;
  try {
    doc = json::parse(csv::read_file(cfg.preferences));
  } catch (const json::parse_error& e) {
    throw ParseError(cfg.preferences.string() + ": " + e.what());
  }
  return eligibility::resolve_buffers(eligibility::preferences_from_json(doc), cfg.country, tech);
}

eligibility::CriterionRasters region_rasters(const RegionFrame& frame, const LayerSet& lonlat_layers) {
  LayerSet planar;
  for (const auto& [k, fs] : lonlat_layers) planar[k] = geo::project(fs, frame.proj);
  return eligibility::rasterize_criteria(frame.planar, eligibility::default_catalog(), planar, frame.grid);
}

json eligibility_json(const eligibility::EligibilityResult& r, const eligibility::BufferMap& buffers) {
  auto j = eligibility::ledger_to_json(r);
  j["buffers"] = eligibility::buffers_to_json(buffers);
  return j;
}

std::string layer_csv(const std::vector<LayerRow>& rows, const std::string& unit) {
  std::string out = "gid,value,unit,status\n";
  for (const auto& r : rows) out += r.gid + "," + (r.value ? fmt17(*r.value) : "") + "," + unit + "," + r.status + "\n";
  return out;
}

std::vector<LayerRow> parse_layer_csv(const std::string& text) {
  const auto t = csv::parse(text);
  const auto g = t.column("gid"), v = t.column("value"), s = t.column("status");
  std::vector<LayerRow> out;
  for (const auto& row : t.rows) {
    LayerRow r{row[g], std::nullopt, row[s]};
    if (!csv::trim(row[v]).empty()) r.value = csv::to_double(row[v], "value");
    out.push_back(std::move(r));
  }
  return out;
}

json layer_geojson(const Store& store, const RunManifest& m, const std::string& layer) {
  const auto& info = layer_info(layer);
  const auto rows = parse_layer_csv(store.read_file(m.run_id, info.file));
  std::map<std::string, const LayerRow*> by_gid;
  for (const auto& r : rows) by_gid[r.gid] = &r;
  const auto regions = json::parse(store.read_file(m.run_id, "regions.geojson"));
  json features = json::array();
  for (const auto& [gid, f] : region_features(regions)) {
    const auto* r = by_gid.contains(gid) ? by_gid[gid] : nullptr;
    json props{{"gid", gid},
               {"layer", layer},
               {"unit", info.unit},
               {"value", r && r->value ? json(*r->value) : json(nullptr)},
               {"status", r ? r->status : "failed"}};
    features.push_back({{"type", "Feature"}, {"geometry", f.value("geometry", json(nullptr))}, {"properties", props}});
  }
  return {{"type", "FeatureCollection"},
          {"name", layer},
          {"run", m.run_id},
          {"scenario", to_json(m.scenario)},
          {"unit", info.unit},
          {"features", features}};
}

RunManifest prepare_run(const PipelineConfig& cfg, const Store& store) {
  const auto digests = input_digests(cfg);
  const auto id = make_run_id(cfg, digests);
  if (store.has_run(id)) return store.load_manifest(id);
  RunManifest m;
  m.run_id = id;
  m.name = cfg.name;
  m.scenario = cfg.scenario;
  m.module_versions = module_versions();
  m.inputs = digests;
  m.created_at = utc_now();
  try {
    for (const auto& [gid, f] : region_features(json::parse(csv::read_file(cfg.regions)))) m.regions.push_back(RegionStatus{gid, false, {}, {}, {}});
  } catch (const std::exception&) {
    // reported when the run executes
  }
  auto doc = cfg.doc;
  doc["base_dir"] = fs::absolute(cfg.base_dir).lexically_normal().string();
  store.write_file(id, "config.json", doc.dump(2) + "\n");
  store.save_manifest(m);
  return m;
}

void execute_run(const PipelineConfig& cfg, const Store& store, RunManifest& m, const RunOptions& opt) {
  m.advance(RunStatus::running);
  m.started_at = utc_now();
  m.error.clear();
  store.save_manifest(m);

  RunContext ctx{cfg, store, m.run_id, m.inputs, Memo(store), {}, {}, {}};
  std::vector<RegionWork> regions;
  try {
    json collection;
    stage("regions", [&] {
      collection = json::parse(csv::read_file(cfg.regions));
      for (auto& [gid, f] : region_features(collection)) {
        RegionWork w;
        w.gid = gid;
        w.status.gid = gid;
        w.feature = f;
        regions.push_back(std::move(w));
      }
      return 0;
    });
    store.write_file(m.run_id, "regions.geojson", collection.dump() + "\n");
    stage("eligibility", [&] {
      for (Tech t : kTechs) ctx.buffers[t] = resolved_buffers(cfg, t);
      ctx.layers = load_criteria_layers(cfg);
      return 0;
    });
    if (cfg.coast)
      stage("water", [&] {
        std::vector<geo::Polyline> lines;
        for (const auto& f : geo::read_geojson(cfg.coast->string()))
          for (const auto& l : f.lines) lines.push_back(l);
        for (const auto& f : geo::read_geojson(cfg.coast->string()))
          for (const auto& p : f.polygons)
            for (const auto& r : p.rings) lines.push_back(r);
        ctx.coast = std::move(lines);
        return 0;
      });

    parallel_for(regions.size(), opt.threads, [&](std::size_t i) {
      auto& w = regions[i];
      try {
        if (!cfg.weather.contains(w.gid)) throw StageError("simulation", "no weather points for " + w.gid);
        stage("eligibility", [&] {
          w.frame = region_frame(w.gid, w.feature, cfg.cell_size_m);
          run_eligibility(ctx, w);
          return 0;
        });
        std::vector<res::WeatherSeries> weather;
        stage("simulation", [&] {
          for (const auto& p : cfg.weather.at(w.gid)) {
            weather.push_back(res::read_weather_csv(p.path));
            weather.back().location = p.location;
          }
          return 0;
        });
        stage("placement", [&] {
          run_placement(ctx, w, weather);
          return 0;
        });
        stage("simulation", [&] {
          run_simulation(ctx, w, weather);
          return 0;
        });
      } catch (const StageError& e) {
        w.fail(e.stage, e.what());
      } catch (const std::exception& e) {
        w.fail("unknown", e.what());
      }
    });

    run_water(ctx, regions);

    parallel_for(regions.size(), opt.threads, [&](std::size_t i) {
      auto& w = regions[i];
      if (w.status.failed) return;
      try {
        run_optimization(ctx, w);
      } catch (const std::exception& e) {
        w.fail("optimization", e.what());
      }
    });

    run_socio(ctx, regions, m);

    m.layers = layer_catalog();
    for (const auto& l : m.layers) {
      std::vector<LayerRow> rows;
      for (const auto& w : regions) rows.push_back({w.gid, layer_value(w, l.name), w.status.failed ? "failed" : "done"});
      store.write_file(m.run_id, l.file, layer_csv(rows, l.unit));
    }
    m.regions.clear();
    for (const auto& w : regions) m.regions.push_back(w.status);
    m.memo_hits = ctx.memo.hits;
    m.memo_misses = ctx.memo.misses;
    const bool any_ok = std::any_of(regions.begin(), regions.end(), [](const auto& w) { return !w.status.failed; });
    if (!any_ok && m.error.empty()) m.error = "all regions failed";
    m.advance(any_ok ? RunStatus::done : RunStatus::failed);
  } catch (const StageError& e) {
    m.error = e.stage + ": " + e.what();
    m.memo_hits = ctx.memo.hits;
    m.memo_misses = ctx.memo.misses;
    m.advance(RunStatus::failed);
  }
  m.finished_at = utc_now();
  store.save_manifest(m);
}

RunOutcome run_pipeline(const PipelineConfig& cfg, const Store& store, const RunOptions& opt) {
  auto m = prepare_run(cfg, store);
  if (m.status == RunStatus::done) return {m, true};
  if (m.status != RunStatus::pending) {
    // a failed or interrupted attempt: start over under the same id
    m.status = RunStatus::pending;
    m.created_at = utc_now();
    m.started_at.clear();
    m.finished_at.clear();
    store.save_manifest(m);
  }
  execute_run(cfg, store, m, opt);
  return {m, false};
}

}  // namespace h2atlas::service
