// h2atlas command-line interface. Exit codes: 0 success, 1 domain error,
// 2 usage error.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "h2atlas/csv.hpp"
#include "h2atlas/error.hpp"
#include "h2atlas/service/api.hpp"
#include "h2atlas/service/pipeline.hpp"
#include "h2atlas/service/synthetic.hpp"
#include "h2atlas/water.hpp"

using namespace h2atlas;
using namespace h2atlas::service;
using nlohmann::json;

namespace {

int emit(const Response& r) {
  if (r.status >= 400) {
    std::string msg = r.body;
    try {
      msg = json::parse(r.body)["error"]["message"];
    } catch (const std::exception&) {
    }
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  std::cout << r.body;
  if (!r.body.empty() && r.body.back() != '\n') std::cout << "\n";
  return 0;
}

Scenario parse_scenario(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw InvalidArgument("scenario must be YEAR:RCP:CASE, e.g. 2030:rcp26:medium");
  return {static_cast<int>(csv::to_double(parts[0], "year")), water::parse_rcp(parts[1]), water::parse_case(parts[2])};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"h2atlas: green-hydrogen cost-potential atlas"};
  app.require_subcommand(1);
  std::string store_dir;
  unsigned threads = 1;
  app.add_option("--store", store_dir, "run store directory (default $ATLAS_STORE or ./atlas-store)");
  app.add_option("--threads", threads, "maximum worker threads")->check(CLI::Range(1u, 1024u));

  auto* run = app.add_subcommand("run", "execute the pipeline for a config");
  std::string config_path;
  run->add_option("config", config_path, "pipeline config JSON")->required();

  auto* serve_cmd = app.add_subcommand("serve", "serve the HTTP API");
  int port = 0;
  std::string host = "0.0.0.0";
  unsigned workers = 2;
  serve_cmd->add_option("--port", port, "listen port (default $ATLAS_PORT or 8080)")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--host", host, "listen address");
  serve_cmd->add_option("--workers", workers, "concurrent runs")->check(CLI::Range(1u, 64u));

  auto* elig = app.add_subcommand("eligibility", "stored eligibility of a region, or a what-if with --buffer");
  std::string gid, tech = "wind", run_id;
  std::vector<std::string> buffers;
  elig->add_option("region", gid, "region gid")->required();
  elig->add_option("--tech", tech, "wind or pv")->check(CLI::IsMember({"wind", "pv"}));
  elig->add_option("--run", run_id, "run id (default: newest finished run with the region)");
  elig->add_option("--buffer", buffers, "buffer override ID=METRES (repeatable)");

  auto* water_cmd = app.add_subcommand("water", "regional sustainable yield for a scenario");
  std::string scenario;
  water_cmd->add_option("scenario", scenario, "YEAR:RCP:CASE, e.g. 2030:rcp26:medium")->required();
  water_cmd->add_option("--config", config_path, "pipeline config naming regions and water inputs")->required();

  auto* curve = app.add_subcommand("curve", "cost-potential curve of a region");
  std::string format = "csv";
  curve->add_option("gid", gid, "region gid")->required();
  curve->add_option("--run", run_id, "run id");
  curve->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* exp = app.add_subcommand("export", "export a layer");
  std::string layer, year, rcp, wcase;
  exp->add_option("--layer", layer, "layer name")->required();
  exp->add_option("--format", format, "geojson or csv")->required()->check(CLI::IsMember({"geojson", "csv"}));
  exp->add_option("--run", run_id, "run id");
  exp->add_option("--year", year, "scenario year filter");
  exp->add_option("--rcp", rcp, "scenario RCP filter");
  exp->add_option("--case", wcase, "environmental-flow case filter");

  auto* fixture = app.add_subcommand("fixture", "write the synthetic three-region fixture");
  std::string fixture_dir;
  std::vector<int> years{2030};
  bool corrupt = false;
  fixture->add_option("dir", fixture_dir, "output directory")->required();
  fixture->add_option("--years", years, "target years with water inputs")->delimiter(',');
  fixture->add_flag("--corrupt-region", corrupt, "give BEN.10_2 an invalid geometry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto store = [&] { return store_dir.empty() ? Store::from_env() : Store(store_dir); };
    if (*run) {
      const auto cfg = read_config(config_path);
      const auto out = run_pipeline(cfg, store(), {threads});
      const auto& m = out.manifest;
      std::cout << (out.cached ? "cached " : to_string(m.status) + " ") << m.run_id << "\n";
      for (const auto& r : m.regions)
        if (r.failed) std::cerr << "region " << r.gid << " failed in " << r.stage << ": " << r.error << "\n";
      if (m.status != RunStatus::done) {
        std::cerr << "error: " << m.error << "\n";
        return 1;
      }
      return 0;
    }
    if (*serve_cmd) {
      Service svc(store(), {workers, threads, fs::current_path()});
      const int p = port ? port : port_from_env();
      std::cerr << "listening on " << host << ":" << p << "\n";
      serve(svc, host, p);
      return 0;
    }
    if (*elig) {
      Service svc(store(), {1, threads, fs::current_path()});
      std::map<std::string, std::string> q{{"tech", tech}};
      if (!run_id.empty()) q["run"] = run_id;
      if (buffers.empty()) return emit(svc.eligibility(gid, q));
      json overrides = json::object();
      for (const auto& b : buffers) {
        const auto eq = b.find('=');
        if (eq == std::string::npos) {
          std::cerr << "--buffer expects ID=METRES, got " << b << "\n";
          return 2;
        }
        overrides[b.substr(0, eq)] = csv::to_double(b.substr(eq + 1), "buffer");
      }
      json body{{"tech", tech}, {"overrides", overrides}};
      if (!run_id.empty()) body["run"] = run_id;
      return emit(svc.whatif(gid, body.dump()));
    }
    if (*water_cmd) {
      auto cfg = read_config(config_path);
      cfg.scenario = parse_scenario(scenario);
      const auto spec = cfg.scenario.spec();
      const auto sy = water::scenario_average(water::load_sy_stack(cfg.water_dir, spec), spec);
      std::vector<std::pair<std::string, geo::VectorFeature>> regions;
      for (const auto& [g, f] : region_features(json::parse(csv::read_file(cfg.regions)))) {
        try {
          regions.emplace_back(g, region_frame(g, f, cfg.cell_size_m).lonlat);
        } catch (const Error& e) {
          std::cerr << "region " << g << " skipped: " << e.what() << "\n";
        }
      }
      json out = json::array();
      for (const auto& r : water::region_water(sy, spec, regions)) out.push_back(water::to_json(r));
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (*curve) {
      Service svc(store(), {1, threads, fs::current_path()});
      std::map<std::string, std::string> q{{"format", format}};
      if (!run_id.empty()) q["run"] = run_id;
      return emit(svc.cost_potential(gid, q));
    }
    if (*exp) {
      Service svc(store(), {1, threads, fs::current_path()});
      std::map<std::string, std::string> q;
      if (!run_id.empty()) q["run"] = run_id;
      if (!year.empty()) q["year"] = year;
      if (!rcp.empty()) q["rcp"] = rcp;
      if (!wcase.empty()) q["case"] = wcase;
      if (format == "geojson") return emit(svc.layer(layer, q));
      const auto& info = layer_info(layer);
      const auto r = svc.layer(layer, q);  // resolves the run and validates filters
      if (r.status >= 400) return emit(r);
      std::cout << svc.store().read_file(json::parse(r.body)["run"], info.file);
      return 0;
    }
    if (*fixture) {
      synthetic::Options opt;
      opt.water_years = {years.begin(), years.end()};
      opt.corrupt_region = corrupt;
      std::cout << synthetic::write_fixture(fixture_dir, opt).string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
