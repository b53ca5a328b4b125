#include "h2atlas/service/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "h2atlas/csv.hpp"
#include "h2atlas/digest.hpp"
#include "h2atlas/error.hpp"

namespace h2atlas::service {

namespace {

using nlohmann::json;

const char* const kStatus[] = {"pending", "running", "done", "failed"};

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

fs::path inside(const fs::path& dir, const fs::path& rel) {
  const auto p = (dir / rel).lexically_normal();
  const auto r = p.lexically_relative(dir);
  if (rel.is_absolute() || r.empty() || *r.begin() == "..") throw InvalidArgument("path escapes run directory: " + rel.string());
  return p;
}

}  // namespace

std::string to_string(RunStatus s) { return kStatus[static_cast<int>(s)]; }

RunStatus parse_run_status(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (s == kStatus[i]) return static_cast<RunStatus>(i);
  throw ParseError("unknown run status " + s);
}

void RunManifest::advance(RunStatus next) {
  const bool ok = (status == RunStatus::pending && next == RunStatus::running) ||
                  (status == RunStatus::running && (next == RunStatus::done || next == RunStatus::failed));
  if (!ok) throw InvalidArgument("run status cannot go from " + to_string(status) + " to " + to_string(next));
  status = next;
}

const RegionStatus* RunManifest::region(const std::string& gid) const {
  for (const auto& r : regions)
    if (r.gid == gid) return &r;
  return nullptr;
}

json to_json(const RunManifest& m) {
  json regions = json::array();
  for (const auto& r : m.regions) {
    json e{{"gid", r.gid}, {"status", r.failed ? "failed" : "done"}};
    if (r.failed) {
      e["stage"] = r.stage;
      e["error"] = r.error;
    }
    if (!r.warnings.empty()) e["warnings"] = r.warnings;
    regions.push_back(std::move(e));
  }
  json layers = json::array();
  for (const auto& l : m.layers) layers.push_back({{"name", l.name}, {"unit", l.unit}, {"file", l.file}});
  json j{{"run_id", m.run_id},
         {"name", m.name},
         {"scenario", to_json(m.scenario)},
         {"regions", regions},
         {"module_versions", m.module_versions},
         {"inputs", m.inputs},
         {"status", to_string(m.status)},
         {"created_at", m.created_at},
         {"started_at", m.started_at},
         {"finished_at", m.finished_at},
         {"layers", layers},
         {"memo", {{"hits", m.memo_hits}, {"misses", m.memo_misses}}}};
  if (!m.error.empty()) j["error"] = m.error;
  return j;
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.run_id = j.at("run_id");
    m.name = j.value("name", "");
    m.scenario = scenario_from_json(j.at("scenario"));
    for (const auto& r : j.at("regions")) {
      RegionStatus s;
      s.gid = r.at("gid");
      s.failed = r.at("status") == "failed";
      s.stage = r.value("stage", "");
      s.error = r.value("error", "");
      s.warnings = r.value("warnings", std::vector<std::string>{});
      m.regions.push_back(std::move(s));
    }
    m.module_versions = j.at("module_versions").get<std::map<std::string, std::string>>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.status = parse_run_status(j.at("status"));
    m.created_at = j.value("created_at", "");
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    m.error = j.value("error", "");
    for (const auto& l : j.at("layers")) m.layers.push_back({l.at("name"), l.at("unit"), l.at("file")});
    if (j.contains("memo")) {
      m.memo_hits = j["memo"].value("hits", 0);
      m.memo_misses = j["memo"].value("misses", 0);
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

std::string utc_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto days = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{now - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  static std::atomic<unsigned long> counter{0};
  fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "_" +
         std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

Store::Store(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "runs"); }

Store Store::from_env() {
  const char* s = std::getenv("ATLAS_STORE");
  return Store(s && *s ? fs::path(s) : fs::path("atlas-store"));
}

fs::path Store::run_dir(const std::string& run_id) const {
  if (!valid_id(run_id)) throw NotFound("unknown run " + run_id);
  return root_ / "runs" / run_id;
}

bool Store::has_run(const std::string& run_id) const {
  return valid_id(run_id) && fs::exists(run_dir(run_id) / "manifest.json");
}

RunManifest Store::load_manifest(const std::string& run_id) const {
  if (!has_run(run_id)) throw NotFound("unknown run " + run_id);
  return manifest_from_json(json::parse(csv::read_file(run_dir(run_id) / "manifest.json")));
}

void Store::save_manifest(const RunManifest& m) const {
  write_atomic(run_dir(m.run_id) / "manifest.json", to_json(m).dump(2) + "\n");
}

std::vector<RunManifest> Store::list_runs() const {
  std::vector<RunManifest> out;
  for (const auto& e : fs::directory_iterator(root_ / "runs"))
    if (e.is_directory() && has_run(e.path().filename().string())) out.push_back(load_manifest(e.path().filename().string()));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.created_at != b.created_at ? a.created_at > b.created_at : a.run_id < b.run_id;
  });
  return out;
}

std::string Store::read_file(const std::string& run_id, const fs::path& rel) const {
  const auto p = inside(run_dir(run_id), rel);
  if (!fs::is_regular_file(p)) throw NotFound("no file " + rel.string() + " in run " + run_id);
  return csv::read_file(p);
}

void Store::write_file(const std::string& run_id, const fs::path& rel, const std::string& content) const {
  write_atomic(inside(run_dir(run_id), rel), content);
}

std::optional<std::string> Store::memo_get(const std::string& stage, const std::string& key) const {
  const auto p = root_ / "memo" / stage / (key + ".json");
  if (!fs::is_regular_file(p)) return std::nullopt;
  return csv::read_file(p);
}

void Store::memo_put(const std::string& stage, const std::string& key, const std::string& content) const {
  write_atomic(root_ / "memo" / stage / (key + ".json"), content);
}

std::string Store::digest() const {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root_))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  Fnv1a h;
  for (const auto& f : files) h.field(f.lexically_relative(root_).generic_string()).field(file_digest(f));
  return h.hex();
}

}  // namespace h2atlas::service
