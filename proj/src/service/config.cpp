#include "h2atlas/service/config.hpp"

#include <fstream>
#include <sstream>

#include "h2atlas/csv.hpp"
#include "h2atlas/error.hpp"
#include "h2atlas/service/schema.hpp"

namespace h2atlas::service {

namespace {

using nlohmann::json;

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

json to_json(const Scenario& s) {
  return {{"year", s.year}, {"rcp", water::to_string(s.rcp)}, {"case", water::to_string(s.water_case)}};
}

Scenario scenario_from_json(const json& j) {
  try {
    return {j.at("year").get<int>(), water::parse_rcp(j.at("rcp").get<std::string>()),
            water::parse_case(j.at("case").get<std::string>())};
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scenario: ") + e.what());
  }
}

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (const auto v = schema_violations(config_schema(), doc); !v.empty()) {
    std::string msg = "config violates schema:";
    for (const auto& s : v) msg += "\n  " + s;
    throw InvalidArgument(msg);
  }
  PipelineConfig c;
  c.doc = doc;
  c.base_dir = doc.contains("base_dir") ? resolve(base_dir, doc["base_dir"].get<std::string>()) : base_dir;
  const auto& b = c.base_dir;
  try {
    c.name = doc.value("name", std::string("run"));
    c.scenario = scenario_from_json(doc["scenario"]);
    c.regions = resolve(b, doc["regions"]);
    c.country = doc["country"];
    c.preferences = resolve(b, doc["preferences"]);
    const auto& catalog = eligibility::default_catalog();
    const auto layers = doc.value("criteria_layers", json::object());
    for (const auto& [key, path] : layers.items()) {
      if (std::none_of(catalog.begin(), catalog.end(), [&](const auto& s) { return s.source_layer == key; }))
        throw InvalidArgument("criteria_layers: unknown layer key " + key);
      c.criteria_layers[key] = resolve(b, path.get<std::string>());
    }
    c.cell_size_m = doc.value("cell_size_m", c.cell_size_m);
    for (const auto& [gid, points] : doc["weather"].items())
      for (const auto& p : points)
        c.weather[gid].push_back({resolve(b, p["path"]), {p["lon"].get<double>(), p["lat"].get<double>()}});
    const auto hydro = doc.value("hydro", json::object());
    for (const auto& [gid, path] : hydro.items()) c.hydro[gid] = resolve(b, path);
    c.water_dir = resolve(b, doc["water_dir"]);
    if (doc.contains("coast")) c.coast = resolve(b, doc["coast"]);
    c.demographics = resolve(b, doc["demographics"]);

    const auto pl = doc.value("placement", json::object());
    const auto t = pl.value("turbine", json::object());
    c.turbine.rated_power_mw = t.value("rated_power_mw", c.turbine.rated_power_mw);
    c.turbine.rotor_diameter_m = t.value("rotor_diameter_m", c.turbine.rotor_diameter_m);
    c.turbine.hub_height_m = t.value("hub_height_m", c.turbine.hub_height_m);
    c.turbine.validate();
    const auto pv = pl.value("pv", json::object());
    c.pv.land_use_m2_per_kwp = pv.value("land_use_m2_per_kwp", c.pv.land_use_m2_per_kwp);
    c.pv.seed_spacing_m = pv.value("seed_spacing_m", c.pv.seed_spacing_m);
    c.pv.validate();

    c.lcoe_bins = doc.value("lcoe_bins", c.lcoe_bins);
    if (doc.contains("techno_economics")) c.te = res::techno_economics_from_json(doc["techno_economics"]);
    c.te.validate();
    c.te.at(res::Component::pv, c.scenario.year);  // year must be tabulated

    const auto w = doc.value("water", json::object());
    c.groundwater_cost = w.value("groundwater_cost", c.groundwater_cost);
    c.desal = water::desal_params_from_json(w.value("desal", json::object()));
    c.desal.validate();

    c.curve = h2opt::run_config_from_json(doc.value("curve", json::object()));
    const auto local = doc.value("local_demand", json::object());
    for (const auto& [gid, d] : local.items())
      c.local_demand[gid] = {d.value("h2_t", 0.0), d.value("elec_mwh", 0.0)};

    const auto so = doc.value("socio", json::object());
    const auto na = so.value("national_access", json::object());
    auto opt = [&](const char* k) -> std::optional<double> {
      if (!na.contains(k)) return std::nullopt;
      return na[k].get<double>();
    };
    c.national_access = {opt("elec_urban"), opt("elec_rural"), opt("fuel_urban"), opt("fuel_rural")};
    c.employment = socio::employment_params_from_json(so.value("employment", json::object()));
    if (so.contains("weights")) c.weights = so["weights"].get<socio::Weights>();
    socio::validate_weights(c.weights);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  } catch (const ParseError& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig read_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(csv::read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return parse_config(doc, fs::absolute(path).parent_path());
}

}  // namespace h2atlas::service
