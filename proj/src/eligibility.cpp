#include "h2atlas/eligibility.hpp"

#include <algorithm>
#include <set>

#include "h2atlas/geo/raster.hpp"

namespace h2atlas::eligibility {

std::string to_string(Tech t) { return t == Tech::wind ? "wind" : "pv"; }

Tech parse_tech(const std::string& s) {
  if (s == "wind") return Tech::wind;
  if (s == "pv") return Tech::pv;
  throw InvalidArgument("unknown technology '" + s + "' (expected wind or pv)");
}

const std::vector<CriterionSpec>& default_catalog() {
  static const std::vector<CriterionSpec> catalog = {
      {1, "Settlements (connected)", "settlements_connected"},
      {2, "Settlements (isolated)", "settlements_isolated"},
      {3, "Airports", "airports"},
      {4, "Primary Roadways", "roads_primary"},
      {5, "Secondary Roadways", "roads_secondary"},
      {6, "Agricultural Areas", "agriculture"},
      {7, "Pasture Areas", "pasture"},
      {8, "Railways", "railways"},
      {9, "Power Lines", "power_lines"},
      {10, "Historical Sites", "historical_sites"},
      {11, "Recreational Areas", "recreational_areas"},
      {12, "Leisure and Camping", "leisure_camping"},
      {13, "Industrial Areas", "industrial_areas"},
      {14, "Commercial Areas", "commercial_areas"},
      {15, "Mining Sites", "mining_sites"},
      {16, "Military Areas", "military_areas"},
      {17, "National Borders", "national_borders"},
      {18, "Lakes", "lakes"},
      {19, "Creeks", "creeks"},
      {20, "Rivers", "rivers"},
      {21, "Coastlines (Ocean, general)", "coastlines"},
      {22, "Woodlands (All Forests)", "forests"},
      {23, "(Standard) Wetlands", "wetlands"},
      {24, "Specially protected Wetlands", "wetlands_protected"},
      {25, "Sand Dunes", "sand_dunes"},
      {26, "Natural Habitats", "natural_habitats"},
      {27, "Biospheres", "biospheres"},
      {28, "Wildernesses", "wildernesses"},
      {29, "Bird Areas", "bird_areas"},
      {30, "Protected Landscapes", "protected_landscapes"},
      {31, "Natural Reserves", "natural_reserves"},
      {32, "National Parks, State Parks, etc.", "parks"},
      {33, "Natural Monuments", "natural_monuments"},
  };
  return catalog;
}

void validate_catalog(std::span<const CriterionSpec> catalog) {
  std::set<int> ids;
  for (const auto& c : catalog) {
    if (c.id < 1 || c.id > 33) throw InvalidArgument("criterion id out of range: " + std::to_string(c.id));
    if (!ids.insert(c.id).second) throw InvalidArgument("duplicate criterion id " + std::to_string(c.id));
  }
  if (ids.size() != 33) throw InvalidArgument("criterion catalog must list all 33 criteria");
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::vector<double> corpus_values(std::span<const PreferenceSet> corpus, int id, Tech tech) {
  std::vector<double> v;
  for (const auto& p : corpus)
    if (p.tech == tech)
      if (auto it = p.buffers_m.find(id); it != p.buffers_m.end()) v.push_back(it->second);
  return v;
}

}  // namespace

BufferMap resolve_buffers(std::span<const PreferenceSet> corpus, const std::string& country, Tech tech,
                          std::span<const CriterionSpec> catalog) {
  const PreferenceSet* own = nullptr;
  for (const auto& p : corpus) {
    for (const auto& [id, b] : p.buffers_m)
      if (!(b >= 0.0)) throw InvalidArgument("negative buffer in preferences of " + p.country);
    if (p.country == country && p.tech == tech) own = &p;
  }
  BufferMap out;
  for (const auto& c : catalog) {
    if (own) {
      if (auto it = own->buffers_m.find(c.id); it != own->buffers_m.end()) {
        out[c.id] = it->second;
        continue;
      }
    }
    auto vals = corpus_values(corpus, c.id, tech);
    if (vals.empty())
      throw Error("no preference data for criterion " + std::to_string(c.id) + " (" + to_string(tech) + ")");
    out[c.id] = median(std::move(vals));
  }
  return out;
}

CriterionRasters rasterize_criteria(const geo::VectorFeature& region, std::span<const CriterionSpec> criteria,
                                    const std::map<std::string, std::vector<geo::VectorFeature>>& layers,
                                    const geo::GridGeometry& grid) {
  CriterionRasters out;
  out.region = geo::rasterize(std::span(&region, 1), grid);
  for (const auto& c : criteria) {
    auto it = layers.find(c.source_layer);
    out.layers.emplace(c.id, it == layers.end() ? geo::Mask(grid, false) : geo::rasterize(it->second, grid));
  }
  return out;
}

EligibilityResult compose(const CriterionRasters& rasters, const BufferMap& buffers, std::string region_id,
                          Tech tech) {
  EligibilityResult res;
  res.region_id = std::move(region_id);
  res.tech = tech;
  res.region_cells = geo::popcount(rasters.region);
  if (res.region_cells == 0) throw Error("region below resolution");

  auto remaining = rasters.region.values();
  const double n = static_cast<double>(res.region_cells);
  for (const auto& [id, layer] : rasters.layers) {  // std::map iterates in ascending id
    auto b = buffers.find(id);
    const double radius = b == buffers.end() ? 0.0 : b->second;
    const Eigen::Index before = remaining.count();
    if (layer.values().any()) {
      const auto excluded = geo::dilate(layer, radius);
      remaining = remaining && !excluded.values();
    }
    res.ledger.push_back({id, static_cast<double>(before - remaining.count()) / n});
  }
  res.mask = geo::Mask(rasters.region.geometry(), remaining);
  res.eligible_fraction = static_cast<double>(remaining.count()) / n;
  return res;
}

EligibilityResult compute_eligibility(const geo::VectorFeature& region, std::span<const CriterionSpec> criteria,
                                      const std::map<std::string, std::vector<geo::VectorFeature>>& layers,
                                      const BufferMap& buffers, const geo::GridGeometry& grid, std::string region_id,
                                      Tech tech) {
  if (region.polygons.empty()) throw InvalidArgument("region has no polygon");
  return compose(rasterize_criteria(region, criteria, layers, grid), buffers, std::move(region_id), tech);
}

std::vector<Deviation> sensitivity_table(std::span<const PreferenceSet> corpus, int criterion_id, Tech tech) {
  std::vector<Deviation> out;
  for (const auto& p : corpus)
    if (p.tech == tech)
      if (auto it = p.buffers_m.find(criterion_id); it != p.buffers_m.end())
        out.push_back({p.country, it->second, 0.0, false});
  if (out.size() < 2) throw InvalidArgument("sensitivity needs at least two countries with values");
  std::vector<double> vals;
  for (const auto& d : out) vals.push_back(d.value_m);
  const double med = median(vals);
  for (auto& d : out) {
    if (med == 0.0) {
      d.absolute = true;
      d.deviation = d.value_m - med;
    } else {
      d.deviation = (d.value_m - med) / med * 100.0;
    }
  }
  return out;
}

std::vector<PreferenceSet> preferences_from_json(const nlohmann::json& doc) {
  try {
    std::vector<PreferenceSet> out;
    for (const auto& e : doc) {
      PreferenceSet p;
      p.country = e.at("country").get<std::string>();
      p.tech = parse_tech(e.at("tech").get<std::string>());
      p.buffers_m = buffers_from_json(e.at("buffers"));
      out.push_back(std::move(p));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("preference corpus: ") + e.what());
  }
}

std::vector<CriterionSpec> catalog_from_json(const nlohmann::json& doc) {
  try {
    std::vector<CriterionSpec> out;
    for (const auto& e : doc)
      out.push_back({e.at("id").get<int>(), e.at("name").get<std::string>(), e.at("source_layer").get<std::string>()});
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("criterion catalog: ") + e.what());
  }
}

nlohmann::json catalog_to_json(std::span<const CriterionSpec> catalog) {
  auto out = nlohmann::json::array();
  for (const auto& c : catalog) out.push_back({{"id", c.id}, {"name", c.name}, {"source_layer", c.source_layer}});
  return out;
}

nlohmann::json ledger_to_json(const EligibilityResult& r) {
  auto ledger = nlohmann::json::array();
  for (const auto& e : r.ledger) ledger.push_back({{"criterion", e.criterion_id}, {"fraction", e.fraction}});
  return {{"gid", r.region_id},
          {"tech", to_string(r.tech)},
          {"region_cells", r.region_cells},
          {"eligible_fraction", r.eligible_fraction},
          {"eligible_km2", geo::area_of(r.mask)},
          {"ledger", ledger}};
}

BufferMap buffers_from_json(const nlohmann::json& doc) {
  BufferMap b;
  for (const auto& [k, v] : doc.items()) {
    std::size_t pos = 0;
    int id = 0;
    try {
      id = std::stoi(k, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != k.size()) throw ParseError("buffer key is not a criterion id: " + k);
    if (!v.is_number()) throw ParseError("buffer for criterion " + k + " is not a number");
    const double m = v.get<double>();
    if (!(m >= 0.0)) throw InvalidArgument("buffer for criterion " + k + " must be >= 0");
    b[id] = m;
  }
  return b;
}

nlohmann::json buffers_to_json(const BufferMap& b) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [id, m] : b) out[std::to_string(id)] = m;
  return out;
}

}  // namespace h2atlas::eligibility
