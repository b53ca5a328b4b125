#include "h2atlas/service/api.hpp"

#include <cstdlib>

#include "httplib.h"

#include "h2atlas/digest.hpp"
#include "h2atlas/error.hpp"

namespace h2atlas::service {

namespace {

using nlohmann::json;
namespace elig = h2atlas::eligibility;

Response error(int status, const std::string& code, const std::string& message) {
  return {status, json{{"error", {{"code", code}, {"message", message}, {"status", status}}}}.dump(), "application/json", ""};
}

Response ok(std::string body, std::string type = "application/json", int status = 200) {
  Response r{status, std::move(body), std::move(type), ""};
  r.etag = "\"" + Fnv1a().update(r.body).hex() + "\"";
  return r;
}

Response ok(const json& j, int status = 200) { return ok(j.dump(), "application/json", status); }

// Domain exceptions → HTTP statuses.
template <typename F>
Response guarded(F&& f) {
  try {
    return f();
  } catch (const NotFound& e) {
    return error(404, "not_found", e.what());
  } catch (const InvalidArgument& e) {
    return error(400, "invalid_argument", e.what());
  } catch (const ParseError& e) {
    return error(400, "parse_error", e.what());
  } catch (const json::exception& e) {
    return error(400, "bad_json", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

std::string param(const std::map<std::string, std::string>& q, const std::string& k) {
  auto it = q.find(k);
  return it == q.end() ? std::string() : it->second;
}

std::string content_type_for(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".json") return "application/json";
  if (ext == ".geojson") return "application/geo+json";
  if (ext == ".csv") return "text/csv";
  return "text/plain";
}

}  // namespace

struct Service::RegionContext {
  elig::CriterionRasters rasters;
  std::map<Tech, elig::BufferMap> buffers;
};

Service::Service(Store store, ServiceOptions opt)
    : store_(std::move(store)), opt_(std::move(opt)), pool_(std::make_unique<WorkerPool>(opt_.run_workers)) {}

Service::~Service() { pool_.reset(); }

void Service::wait_idle() {
  std::unique_lock lock(m_);
  idle_.wait(lock, [this] { return in_flight_.empty(); });
}

Response Service::list_runs() const {
  return guarded([&] {
    json runs = json::array();
    for (const auto& m : store_.list_runs()) runs.push_back(to_json(m));
    return ok(json{{"runs", runs}});
  });
}

Response Service::submit_run(const std::string& body) {
  return guarded([&] {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string("request body is not JSON: ") + e.what());
    }
    auto cfg = parse_config(doc, opt_.base_dir);
    std::unique_lock lock(m_);
    auto m = prepare_run(cfg, store_);
    if (in_flight_.contains(m.run_id))
      return error(409, "conflict", "run " + m.run_id + " is already " + to_string(m.status));
    if (m.status == RunStatus::done) {
      auto j = to_json(m);
      j["cached"] = true;
      return ok(j);
    }
    if (m.status != RunStatus::pending) {
      m.status = RunStatus::pending;
      m.created_at = utc_now();
      m.started_at.clear();
      m.finished_at.clear();
      store_.save_manifest(m);
    }
    in_flight_.insert(m.run_id);
    lock.unlock();
    pool_->submit([this, cfg = std::move(cfg), m]() mutable {
      try {
        execute_run(cfg, store_, m, {opt_.threads_per_run});
      } catch (const std::exception& e) {
        m.error = e.what();
        if (m.status == RunStatus::running) m.advance(RunStatus::failed);
        store_.save_manifest(m);
      }
      std::lock_guard g(m_);
      in_flight_.erase(m.run_id);
      idle_.notify_all();
    });
    return ok(to_json(m), 202);
  });
}

Response Service::get_run(const std::string& id) const {
  return guarded([&] { return ok(to_json(store_.load_manifest(id))); });
}

Response Service::run_file(const std::string& id, const std::string& rel) const {
  return guarded([&] {
    store_.load_manifest(id);
    return ok(store_.read_file(id, rel), content_type_for(rel));
  });
}

RunManifest Service::resolve_run(const std::map<std::string, std::string>& q, const std::string& gid) const {
  const auto run = param(q, "run");
  auto matches = [&](const RunManifest& m) {
    if (!param(q, "year").empty() && std::to_string(m.scenario.year) != param(q, "year")) return false;
    if (!param(q, "rcp").empty() && m.scenario.rcp != water::parse_rcp(param(q, "rcp"))) return false;
    if (!param(q, "case").empty() && m.scenario.water_case != water::parse_case(param(q, "case"))) return false;
    if (!gid.empty()) {
      const auto* r = m.region(gid);
      if (!r) return false;
    }
    return true;
  };
  if (!run.empty()) {
    auto m = store_.load_manifest(run);
    if (m.status != RunStatus::done) throw NotFound("run " + run + " is " + to_string(m.status) + ", not done");
    if (!matches(m)) throw NotFound("run " + run + " does not match the requested scenario or region");
    return m;
  }
  for (const auto& m : store_.list_runs())
    if (m.status == RunStatus::done && matches(m)) return m;
  throw NotFound("no finished run matches the request");
}

Response Service::layer(const std::string& name, const std::map<std::string, std::string>& q) const {
  return guarded([&] {
    std::string layer = name;
    if (name == "eligibility") layer = "eligibility_" + elig::to_string(elig::parse_tech(param(q, "tech").empty() ? "wind" : param(q, "tech")));
    layer_info(layer);
    const auto m = resolve_run(q, "");
    return ok(layer_geojson(store_, m, layer).dump(), "application/geo+json");
  });
}

Response Service::cost_potential(const std::string& gid, const std::map<std::string, std::string>& q) const {
  return guarded([&] {
    const auto m = resolve_run(q, gid);
    const auto* r = m.region(gid);
    if (r->failed) throw NotFound("region " + gid + " failed in run " + m.run_id + " (" + r->stage + ": " + r->error + ")");
    const auto dir = "regions/" + gid + "/";
    if (param(q, "format") == "csv") return ok(store_.read_file(m.run_id, dir + "curve.csv"), "text/csv");
    auto j = json::parse(store_.read_file(m.run_id, dir + "curve.json"));
    j["run"] = m.run_id;
    return ok(j);
  });
}

Response Service::eligibility(const std::string& gid, const std::map<std::string, std::string>& q) const {
  return guarded([&] {
    const auto tech = elig::to_string(elig::parse_tech(param(q, "tech").empty() ? "wind" : param(q, "tech")));
    const auto m = resolve_run(q, gid);
    const auto* r = m.region(gid);
    if (r->failed && r->stage == "eligibility") throw NotFound("region " + gid + " has no eligibility in run " + m.run_id);
    const auto base = "regions/" + gid + "/eligibility_" + tech;
    auto j = json::parse(store_.read_file(m.run_id, base + ".json"));
    j["run"] = m.run_id;
    j["grid"] = "/api/runs/" + m.run_id + "/files/" + base + ".asc";
    return ok(j);
  });
}

std::shared_ptr<const Service::RegionContext> Service::region_context(const std::string& run_id, const std::string& gid) {
  const auto key = run_id + "/" + gid;
  {
    std::lock_guard lock(m_);
    if (auto it = contexts_.find(key); it != contexts_.end()) return it->second;
  }
  const auto doc = json::parse(store_.read_file(run_id, "config.json"));
  const auto cfg = parse_config(doc, doc.at("base_dir").get<std::string>());
  std::optional<json> feature;
  for (auto& [g, f] : region_features(json::parse(store_.read_file(run_id, "regions.geojson"))))
    if (g == gid) feature = f;
  if (!feature) throw NotFound("region " + gid + " not in run " + run_id);
  auto ctx = std::make_shared<RegionContext>();
  ctx->rasters = region_rasters(region_frame(gid, *feature, cfg.cell_size_m), load_criteria_layers(cfg));
  for (Tech t : {Tech::wind, Tech::pv}) ctx->buffers[t] = resolved_buffers(cfg, t);
  std::lock_guard lock(m_);
  return contexts_.emplace(key, std::move(ctx)).first->second;
}

Response Service::whatif(const std::string& gid, const std::string& body) {
  return guarded([&] {
    const auto req = body.empty() ? json::object() : json::parse(body);
    if (!req.is_object()) throw InvalidArgument("what-if body must be an object");
    for (const auto& [k, v] : req.items())
      if (k != "run" && k != "tech" && k != "overrides") throw InvalidArgument("unknown what-if field " + k);
    const auto tech = elig::parse_tech(req.value("tech", "wind"));
    const auto overrides = elig::buffers_from_json(req.value("overrides", json::object()));
    const auto& catalog = elig::default_catalog();
    for (const auto& [id, v] : overrides)
      if (std::none_of(catalog.begin(), catalog.end(), [&](const auto& c) { return c.id == id; }))
        throw InvalidArgument("unknown criterion id " + std::to_string(id));
    std::map<std::string, std::string> q;
    if (req.contains("run")) q["run"] = req["run"].get<std::string>();
    const auto m = resolve_run(q, gid);
    const auto ctx = region_context(m.run_id, gid);
    auto buffers = ctx->buffers.at(tech);
    for (const auto& [id, v] : overrides) buffers[id] = v;
    const auto r = elig::compose(ctx->rasters, buffers, gid, tech);
    auto j = eligibility_json(r, buffers);
    const auto stored = json::parse(store_.read_file(m.run_id, "regions/" + gid + "/eligibility_" + elig::to_string(tech) + ".json"));
    j["run"] = m.run_id;
    j["overrides"] = elig::buffers_to_json(overrides);
    j["baseline_fraction"] = stored["eligible_fraction"];
    j["delta"] = r.eligible_fraction - stored["eligible_fraction"].get<double>();
    return ok(j);
  });
}

void Service::mount(httplib::Server& s) {
  auto send = [](httplib::Response& res, const httplib::Request& req, const Response& r) {
    if (!r.etag.empty()) {
      res.set_header("ETag", r.etag);
      if (req.get_header_value("If-None-Match") == r.etag) {
        res.status = 304;
        return;
      }
    }
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto query = [](const httplib::Request& req) {
    std::map<std::string, std::string> q;
    for (const auto& [k, v] : req.params) q[k] = v;
    return q;
  };
  s.Get("/api/health", [send](const auto& req, auto& res) { send(res, req, ok(json{{"status", "ok"}})); });
  s.Get("/api/runs", [this, send](const auto& req, auto& res) { send(res, req, list_runs()); });
  s.Post("/api/runs", [this, send](const auto& req, auto& res) { send(res, req, submit_run(req.body)); });
  s.Get(R"(/api/runs/([0-9a-z]+))", [this, send](const auto& req, auto& res) { send(res, req, get_run(req.matches[1])); });
  s.Get(R"(/api/runs/([0-9a-z]+)/files/(.+))",
        [this, send](const auto& req, auto& res) { send(res, req, run_file(req.matches[1], req.matches[2])); });
  s.Get(R"(/api/layers/([A-Za-z0-9_]+))",
        [this, send, query](const auto& req, auto& res) { send(res, req, layer(req.matches[1], query(req))); });
  s.Get(R"(/api/regions/([^/]+)/cost-potential)",
        [this, send, query](const auto& req, auto& res) { send(res, req, cost_potential(req.matches[1], query(req))); });
  s.Get(R"(/api/regions/([^/]+)/eligibility)",
        [this, send, query](const auto& req, auto& res) { send(res, req, eligibility(req.matches[1], query(req))); });
  s.Post(R"(/api/regions/([^/]+)/eligibility:whatif)",
         [this, send](const auto& req, auto& res) { send(res, req, whatif(req.matches[1], req.body)); });
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) {
      const auto r = error(res.status, res.status == 404 ? "not_found" : "error", "no route for " + req.method + " " + req.path);
      res.set_content(r.body, r.content_type);
    }
  });
}

void serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

int port_from_env() {
  const char* p = std::getenv("ATLAS_PORT");
  if (!p || !*p) return 8080;
  char* end = nullptr;
  const long v = std::strtol(p, &end, 10);
  if (*end || v <= 0 || v > 65535) throw InvalidArgument(std::string("ATLAS_PORT is not a port: ") + p);
  return static_cast<int>(v);
}

}  // namespace h2atlas::service
