#pragma once
// Orchestration: eligibility → placement → simulation/clustering → water →
// optimization → socio, memoized per stage by input digest, with failures
// isolated per region.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "h2atlas/eligibility.hpp"
#include "h2atlas/geo/projection.hpp"
#include "h2atlas/geo/vector.hpp"
#include "h2atlas/service/config.hpp"
#include "h2atlas/service/store.hpp"

namespace h2atlas::service {

using eligibility::Tech;

const std::map<std::string, std::string>& module_versions();

/// Every layer a run writes, with units; files are layers/{name}.csv.
const std::vector<LayerInfo>& layer_catalog();
const LayerInfo& layer_info(const std::string& name);  ///< NotFound for unknown names

/// Content digests of every input the config references. Unreadable
/// inputs digest as "missing" so the failure surfaces in its stage.
std::map<std::string, std::string> input_digests(const PipelineConfig& cfg);
std::string make_run_id(const PipelineConfig& cfg, const std::map<std::string, std::string>& digests);

struct RunOptions {
  unsigned threads = 1;
};

struct RunOutcome {
  RunManifest manifest;
  bool cached = false;  ///< the run was already done; nothing recomputed
};

/// Computes the run id and writes a pending manifest plus the config.
/// Returns the stored manifest unchanged when the run already exists.
RunManifest prepare_run(const PipelineConfig& cfg, const Store& store);
/// Advances a pending manifest through running to done or failed.
void execute_run(const PipelineConfig& cfg, const Store& store, RunManifest& m, const RunOptions& opt = {});
/// prepare + execute; a done run is returned as cached, a failed one re-run.
RunOutcome run_pipeline(const PipelineConfig& cfg, const Store& store, const RunOptions& opt = {});

/// Raw features of the regions file, each with its gid.
std::vector<std::pair<std::string, nlohmann::json>> region_features(const nlohmann::json& collection);

/// A region projected onto its own equal-area plane and analysis grid.
struct RegionFrame {
  std::string gid;
  geo::VectorFeature lonlat;
  geo::Projection proj;
  geo::VectorFeature planar;
  geo::GridGeometry grid;
};

RegionFrame region_frame(const std::string& gid, const nlohmann::json& feature, double cell_size_m);

using LayerSet = std::map<std::string, std::vector<geo::VectorFeature>>;
LayerSet load_criteria_layers(const PipelineConfig& cfg);

eligibility::BufferMap resolved_buffers(const PipelineConfig& cfg, Tech tech);

eligibility::CriterionRasters region_rasters(const RegionFrame& frame, const LayerSet& lonlat_layers);

/// Shared shape of stored and what-if eligibility documents.
nlohmann::json eligibility_json(const eligibility::EligibilityResult& r, const eligibility::BufferMap& buffers);

struct LayerRow {
  std::string gid;
  std::optional<double> value;
  std::string status;  ///< "done" or "failed"
};

/// `gid,value,unit,status`; values %.17g, empty when null.
std::string layer_csv(const std::vector<LayerRow>& rows, const std::string& unit);
std::vector<LayerRow> parse_layer_csv(const std::string& text);

/// FeatureCollection of the run's regions with gid, value, unit, status,
/// layer and scenario properties.
nlohmann::json layer_geojson(const Store& store, const RunManifest& m, const std::string& layer);

}  // namespace h2atlas::service
