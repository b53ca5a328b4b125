#pragma once
// Run manifests and the directory-tree store:
//   {root}/runs/{run_id}/manifest.json, config.json, regions.geojson,
//                        layers/{name}.csv, regions/{gid}/...
//   {root}/memo/{stage}/{key}.json

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "h2atlas/service/config.hpp"

namespace h2atlas::service {

enum class RunStatus { pending, running, done, failed };

std::string to_string(RunStatus s);
RunStatus parse_run_status(const std::string& s);

struct RegionStatus {
  std::string gid;
  bool failed = false;
  std::string stage;  ///< failing stage
  std::string error;
  std::vector<std::string> warnings;
};

struct LayerInfo {
  std::string name, unit, file;
};

struct RunManifest {
  std::string run_id;
  std::string name;
  Scenario scenario;
  std::vector<RegionStatus> regions;
  std::map<std::string, std::string> module_versions;
  std::map<std::string, std::string> inputs;  ///< input key → content digest
  RunStatus status = RunStatus::pending;
  std::string created_at, started_at, finished_at;
  std::string error;  ///< run-level failure
  std::vector<LayerInfo> layers;
  int memo_hits = 0, memo_misses = 0;

  /// pending → running → {done, failed}; anything else throws.
  void advance(RunStatus next);
  const RegionStatus* region(const std::string& gid) const;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

/// UTC, second resolution.
std::string utc_now();

class Store {
public:
  explicit Store(fs::path root);
  /// $ATLAS_STORE, else ./atlas-store.
  static Store from_env();

  const fs::path& root() const { return root_; }
  fs::path run_dir(const std::string& run_id) const;

  bool has_run(const std::string& run_id) const;
  /// NotFound for unknown ids.
  RunManifest load_manifest(const std::string& run_id) const;
  void save_manifest(const RunManifest& m) const;
  /// Newest first (created_at, then id).
  std::vector<RunManifest> list_runs() const;

  /// Relative paths must stay inside the run directory.
  std::string read_file(const std::string& run_id, const fs::path& rel) const;
  void write_file(const std::string& run_id, const fs::path& rel, const std::string& content) const;

  std::optional<std::string> memo_get(const std::string& stage, const std::string& key) const;
  void memo_put(const std::string& stage, const std::string& key, const std::string& content) const;

  /// Hash over every file path and content under the root.
  std::string digest() const;

private:
  fs::path root_;
};

/// Writes via a temporary file and rename.
void write_atomic(const fs::path& path, const std::string& content);

}  // namespace h2atlas::service
