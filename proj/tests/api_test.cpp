#include <thread>

#include "doctest.h"
#include "json.hpp"

#include "h2atlas/service/api.hpp"

#include "service_fixture.hpp"

#include "httplib.h"  // after Eigen: <resolv.h> defines _res

using namespace h2atlas::service;
using nlohmann::json;
using fixture::slurp;

namespace {

// One service over a fresh store, with the fixture submitted and finished.
struct Api {
  fs::path dir = fixture::scratch("api");
  fs::path config = synthetic::write_fixture(dir / "inputs");
  Service svc{Store(dir / "store"), {2, 2, dir / "inputs"}};
  std::string run_id;

  Api() {
    const auto r = svc.submit_run(slurp(config));
    REQUIRE(r.status == 202);
    run_id = json::parse(r.body)["run_id"];
    svc.wait_idle();
  }
  std::string stored(const std::string& rel) const { return svc.store().read_file(run_id, rel); }
};

Api& api() {
  static Api a;
  return a;
}

json body(const Response& r) { return json::parse(r.body); }

void check_error(const Response& r, int status) {
  CHECK(r.status == status);
  const auto j = body(r);
  REQUIRE(j.contains("error"));
  CHECK(j["error"]["status"] == status);
  CHECK(j["error"]["code"].is_string());
  CHECK(!j["error"]["message"].get<std::string>().empty());
}

}  // namespace

TEST_CASE("submitted run completes; resubmission is cached") {
  auto& a = api();
  const auto m = body(a.svc.get_run(a.run_id));
  CHECK(m["status"] == "done");
  CHECK(m["run_id"] == a.run_id);
  CHECK(m["scenario"] == json{{"year", 2030}, {"rcp", "rcp26"}, {"case", "medium"}});

  const auto again = a.svc.submit_run(slurp(a.config));
  CHECK(again.status == 200);
  CHECK(body(again)["cached"] == true);
  CHECK(body(again)["run_id"] == a.run_id);

  const auto runs = body(a.svc.list_runs())["runs"];
  REQUIRE(runs.size() == 1);
  CHECK(runs[0]["run_id"] == a.run_id);
}

TEST_CASE("duplicate submission while in flight is a conflict") {
  const auto dir = fixture::scratch("api-conflict");
  const auto config = synthetic::write_fixture(dir / "inputs");
  Service svc(Store(dir / "store"), {2, 1, dir / "inputs"});
  const auto first = svc.submit_run(slurp(config));
  CHECK(first.status == 202);
  CHECK(body(first)["status"] == "pending");
  check_error(svc.submit_run(slurp(config)), 409);
  svc.wait_idle();
  CHECK(body(svc.get_run(body(first)["run_id"]))["status"] == "done");
  CHECK(svc.submit_run(slurp(config)).status == 200);
}

TEST_CASE("bad submissions are rejected with 400") {
  auto& a = api();
  auto doc = json::parse(slurp(a.config));
  doc["lcoe_bins"] = 11;
  const auto r = a.svc.submit_run(doc.dump());
  check_error(r, 400);
  CHECK(body(r)["error"]["message"].get<std::string>().find("/lcoe_bins") != std::string::npos);
  check_error(a.svc.submit_run("{not json"), 400);
  check_error(a.svc.submit_run("[]"), 400);
  doc = json::parse(slurp(a.config));
  doc.erase("scenario");
  check_error(a.svc.submit_run(doc.dump()), 400);
}

TEST_CASE("unknown resources are 404 with an error body") {
  auto& a = api();
  check_error(a.svc.get_run("0123456789abcdef"), 404);
  check_error(a.svc.get_run("../etc"), 404);
  check_error(a.svc.run_file(a.run_id, "regions/NOPE/curve.csv"), 404);
  check_error(a.svc.run_file(a.run_id, "../../memo"), 400);  // escapes the run directory
  check_error(a.svc.layer("nope", {}), 404);
  check_error(a.svc.cost_potential("XXX.1_1", {}), 404);
  check_error(a.svc.eligibility("XXX.1_1", {}), 404);
  check_error(a.svc.layer("lcoh", {{"year", "2050"}}), 404);
  check_error(a.svc.layer("lcoh", {{"run", a.run_id}, {"rcp", "rcp85"}}), 404);
  check_error(a.svc.layer("lcoh", {{"rcp", "rcp45"}}), 400);
  check_error(a.svc.eligibility("BEN.10_1", {{"tech", "hydro"}}), 400);
}

TEST_CASE("layers are FeatureCollections carrying the stored values") {
  auto& a = api();
  for (const auto& info : layer_catalog()) {
    const auto r = a.svc.layer(info.name, {{"run", a.run_id}});
    REQUIRE(r.status == 200);
    CHECK(r.content_type == "application/geo+json");
    const auto gj = body(r);
    CHECK(gj["type"] == "FeatureCollection");
    const auto rows = parse_layer_csv(a.stored(info.file));
    REQUIRE(gj["features"].size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& p = gj["features"][i]["properties"];
      CHECK(p["gid"] == rows[i].gid);
      CHECK(p["value"].get<double>() == *rows[i].value);
      CHECK(p["unit"] == info.unit);
      CHECK(gj["features"][i]["geometry"]["type"] == "Polygon");
    }
  }
  // scenario selectors resolve to the same run
  CHECK(a.svc.layer("lcoh", {{"year", "2030"}, {"rcp", "rcp26"}, {"case", "medium"}}).body ==
        a.svc.layer("lcoh", {{"run", a.run_id}}).body);
  CHECK(a.svc.layer("eligibility", {{"tech", "pv"}, {"run", a.run_id}}).body ==
        a.svc.layer("eligibility_pv", {{"run", a.run_id}}).body);
  CHECK(a.svc.layer("eligibility", {{"run", a.run_id}}).body == a.svc.layer("eligibility_wind", {{"run", a.run_id}}).body);
}

TEST_CASE("cost-potential as JSON and CSV") {
  auto& a = api();
  for (const auto& gid : synthetic::kRegions) {
    const auto j = a.svc.cost_potential(gid, {});
    REQUIRE(j.status == 200);
    auto expect = json::parse(a.stored("regions/" + gid + "/curve.json"));
    expect["run"] = a.run_id;
    CHECK(body(j) == expect);
    const auto c = a.svc.cost_potential(gid, {{"format", "csv"}, {"run", a.run_id}});
    REQUIRE(c.status == 200);
    CHECK(c.content_type == "text/csv");
    CHECK(c.body == a.stored("regions/" + gid + "/curve.csv"));
  }
}

TEST_CASE("eligibility returns the fraction and a fetchable grid") {
  auto& a = api();
  const auto r = a.svc.eligibility("BEN.10_1", {{"tech", "pv"}});
  REQUIRE(r.status == 200);
  const auto j = body(r);
  const auto stored = json::parse(a.stored("regions/BEN.10_1/eligibility_pv.json"));
  CHECK(j["eligible_fraction"] == stored["eligible_fraction"]);
  CHECK(j["ledger"] == stored["ledger"]);
  const std::string grid = j["grid"];
  const std::string prefix = "/api/runs/" + a.run_id + "/files/";
  REQUIRE(grid.starts_with(prefix));
  const auto f = a.svc.run_file(a.run_id, grid.substr(prefix.size()));
  CHECK(f.status == 200);
  CHECK(f.body.starts_with("ncols"));
}

TEST_CASE("what-if: identity, monotonicity, and no side effects") {
  auto& a = api();
  const auto before = a.svc.store().digest();
  for (const std::string tech : {"wind", "pv"}) {
    const auto stored = json::parse(a.stored("regions/BEN.10_1/eligibility_" + tech + ".json"));
    const auto id = a.svc.whatif("BEN.10_1", json{{"tech", tech}, {"overrides", json::object()}}.dump());
    REQUIRE(id.status == 200);
    auto j = body(id);
    CHECK(j["delta"] == 0.0);
    CHECK(j["baseline_fraction"] == stored["eligible_fraction"]);
    CHECK(j["run"] == a.run_id);
    for (const auto* k : {"run", "overrides", "baseline_fraction", "delta"}) j.erase(k);
    CHECK(j == stored);

    for (const auto& [key, m] : stored["buffers"].items()) {
      const int cid = std::stoi(key);
      const double raised = m.get<double>() + 500.0;
      const auto w = a.svc.whatif("BEN.10_1", json{{"tech", tech}, {"overrides", {{key, raised}}}}.dump());
      REQUIRE(w.status == 200);
      const auto wj = body(w);
      CAPTURE(cid);
      CHECK(wj["eligible_fraction"].get<double>() <= stored["eligible_fraction"].get<double>());
      CHECK(wj["delta"].get<double>() <= 0.0);
      CHECK(wj["buffers"][key] == raised);
    }
  }
  // criterion 1 (settlements) is present in the fixture: widening it must bite
  const auto w = body(a.svc.whatif("BEN.10_1", R"({"tech":"pv","overrides":{"1":3000}})"));
  CHECK(w["delta"].get<double>() < 0);
  CHECK(a.svc.store().digest() == before);
}

TEST_CASE("what-if rejects malformed requests") {
  auto& a = api();
  check_error(a.svc.whatif("BEN.10_1", R"({"overrides":{"999":100}})"), 400);
  check_error(a.svc.whatif("BEN.10_1", R"({"overrides":{"1":-5}})"), 400);
  check_error(a.svc.whatif("BEN.10_1", R"({"overrides":{"1":"far"}})"), 400);
  check_error(a.svc.whatif("BEN.10_1", R"({"buffer":{}})"), 400);
  check_error(a.svc.whatif("BEN.10_1", R"({"tech":"geothermal"})"), 400);
  check_error(a.svc.whatif("BEN.10_1", "[1,2]"), 400);
  check_error(a.svc.whatif("BEN.10_1", "{oops"), 400);
  check_error(a.svc.whatif("XXX.1_1", "{}"), 404);
  check_error(a.svc.whatif("BEN.10_1", R"({"run":"0123456789abcdef"})"), 404);
}

TEST_CASE("concurrent what-ifs agree") {
  auto& a = api();
  const auto expect = a.svc.whatif("BEN.10_2", R"({"tech":"wind","overrides":{"3":2500}})").body;
  std::vector<std::string> got(8);
  {
    std::vector<std::jthread> ts;
    for (std::size_t i = 0; i < got.size(); ++i)
      ts.emplace_back([&, i] { got[i] = a.svc.whatif("BEN.10_2", R"({"tech":"wind","overrides":{"3":2500}})").body; });
  }
  for (const auto& g : got) CHECK(g == expect);
}

TEST_CASE("HTTP: routes, error bodies, ETags") {
  auto& a = api();
  httplib::Server server;
  a.svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::jthread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto health = cli.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto missing = cli.Get("/api/runs/0123456789abcdef");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["error"]["code"] == "not_found");

  auto noroute = cli.Get("/api/nothing-here");
  REQUIRE(noroute);
  CHECK(noroute->status == 404);
  CHECK(json::parse(noroute->body)["error"]["status"] == 404);

  auto bad = cli.Post("/api/runs", R"({"scenario":{}})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body).contains("error"));

  auto run = cli.Get("/api/runs/" + a.run_id);
  REQUIRE(run);
  CHECK(run->status == 200);
  CHECK(json::parse(run->body)["status"] == "done");

  const auto path = "/api/regions/BEN.10_1/cost-potential?format=csv&run=" + a.run_id;
  auto c1 = cli.Get(path);
  auto c2 = cli.Get(path);
  REQUIRE(c1);
  REQUIRE(c2);
  CHECK(c1->status == 200);
  CHECK(c1->body == a.stored("regions/BEN.10_1/curve.csv"));
  const auto etag = c1->get_header_value("ETag");
  CHECK(!etag.empty());
  CHECK(c2->get_header_value("ETag") == etag);
  auto c3 = cli.Get(path, {{"If-None-Match", etag}});
  REQUIRE(c3);
  CHECK(c3->status == 304);
  CHECK(c3->body.empty());

  auto layer = cli.Get("/api/layers/lcoh?year=2030&rcp=rcp26&case=medium");
  REQUIRE(layer);
  CHECK(layer->status == 200);
  CHECK(json::parse(layer->body)["features"].size() == 3);

  auto elig = cli.Get("/api/regions/BEN.5_1/eligibility?tech=wind");
  REQUIRE(elig);
  CHECK(elig->status == 200);
  auto grid = cli.Get(json::parse(elig->body)["grid"].get<std::string>());
  REQUIRE(grid);
  CHECK(grid->status == 200);

  auto w = cli.Post("/api/regions/BEN.5_1/eligibility:whatif", R"({"tech":"wind","overrides":{}})", "application/json");
  REQUIRE(w);
  CHECK(w->status == 200);
  CHECK(json::parse(w->body)["delta"] == 0.0);

  auto resubmit = cli.Post("/api/runs", slurp(a.config), "application/json");
  REQUIRE(resubmit);
  CHECK(resubmit->status == 200);
  CHECK(json::parse(resubmit->body)["cached"] == true);

  server.stop();
}

TEST_CASE("port from environment") {
  ::setenv("ATLAS_PORT", "9123", 1);
  CHECK(port_from_env() == 9123);
  ::setenv("ATLAS_PORT", "http", 1);
  CHECK_THROWS(port_from_env());
  ::unsetenv("ATLAS_PORT");
  CHECK(port_from_env() == 8080);
}
