#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "h2atlas/geo/grid.hpp"
#include "h2atlas/geo/vector.hpp"

namespace h2atlas::eligibility {

enum class Tech { wind, pv };

std::string to_string(Tech t);
Tech parse_tech(const std::string& s);

struct CriterionSpec {
  int id = 0;
  std::string name;
  std::string source_layer;
};

/// The 33 exclusion criteria in canonical order.
const std::vector<CriterionSpec>& default_catalog();
void validate_catalog(std::span<const CriterionSpec> catalog);

/// Buffer distance per criterion id, metres.
using BufferMap = std::map<int, double>;

/// One country's stated buffers for one technology. Missing ids are unknown.
struct PreferenceSet {
  std::string country;
  Tech tech = Tech::wind;
  BufferMap buffers_m;
};

double median(std::vector<double> values);

/// Complete buffer map for `country`: own value where given, else the
/// median over every country that supplied the criterion for this tech.
/// Throws when some criterion has no value anywhere in the corpus.
BufferMap resolve_buffers(std::span<const PreferenceSet> corpus, const std::string& country, Tech tech,
                          std::span<const CriterionSpec> catalog = default_catalog());

struct LedgerEntry {
  int criterion_id = 0;
  double fraction = 0.0;  ///< share of region cells first excluded by this criterion
};

struct EligibilityResult {
  std::string region_id;
  Tech tech = Tech::wind;
  geo::Mask mask;
  Eigen::Index region_cells = 0;
  double eligible_fraction = 0.0;
  std::vector<LedgerEntry> ledger;
};

/// Un-buffered criterion masks for one region, keyed by criterion id.
/// Criteria without data map to an all-false mask.
struct CriterionRasters {
  geo::Mask region;
  std::map<int, geo::Mask> layers;
};

/// Rasterize the region outline and every criterion layer onto `grid`.
/// `layers` maps source_layer keys to planar features; absent keys mean
/// no data for that criterion.
CriterionRasters rasterize_criteria(const geo::VectorFeature& region, std::span<const CriterionSpec> criteria,
                                    const std::map<std::string, std::vector<geo::VectorFeature>>& layers,
                                    const geo::GridGeometry& grid);

/// eligible = region AND NOT union(dilate(layer_i, buffer_i)). The ledger
/// attributes exclusions sequentially in ascending criterion id.
EligibilityResult compose(const CriterionRasters& rasters, const BufferMap& buffers, std::string region_id = {},
                          Tech tech = Tech::wind);

EligibilityResult compute_eligibility(const geo::VectorFeature& region, std::span<const CriterionSpec> criteria,
                                      const std::map<std::string, std::vector<geo::VectorFeature>>& layers,
                                      const BufferMap& buffers, const geo::GridGeometry& grid,
                                      std::string region_id = {}, Tech tech = Tech::wind);

struct Deviation {
  std::string country;
  double value_m = 0.0;
  double deviation = 0.0;   ///< percent of median, or metres when `absolute`
  bool absolute = false;    ///< median was zero; deviation reported in metres
};

/// Each country's deviation from the cross-country median for one criterion.
std::vector<Deviation> sensitivity_table(std::span<const PreferenceSet> corpus, int criterion_id, Tech tech);

// JSON documents
std::vector<PreferenceSet> preferences_from_json(const nlohmann::json& doc);
std::vector<CriterionSpec> catalog_from_json(const nlohmann::json& doc);
nlohmann::json catalog_to_json(std::span<const CriterionSpec> catalog);
nlohmann::json ledger_to_json(const EligibilityResult& r);
BufferMap buffers_from_json(const nlohmann::json& doc);
nlohmann::json buffers_to_json(const BufferMap& b);

}  // namespace h2atlas::eligibility
