#pragma once
// HTTP/1.1 JSON API over a run store. Runs execute on a bounded worker
// pool; what-if eligibility is synchronous, one region, and never writes.

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "json.hpp"

#include "h2atlas/eligibility.hpp"
#include "h2atlas/service/pipeline.hpp"
#include "h2atlas/service/store.hpp"
#include "h2atlas/service/thread_pool.hpp"

namespace httplib {
class Server;
}

namespace h2atlas::service {

struct ServiceOptions {
  unsigned run_workers = 2;      ///< concurrent runs
  unsigned threads_per_run = 1;  ///< region parallelism inside a run
  fs::path base_dir = fs::current_path();  ///< for relative paths in posted configs
};

/// A handler result; `etag` is a quoted content hash.
struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::string etag;
};

class Service {
public:
  Service(Store store, ServiceOptions opt = {});
  ~Service();

  /// Registers every /api route.
  void mount(httplib::Server& server);

  /// Blocks until no run is queued or executing.
  void wait_idle();

  // Route handlers, callable without a socket.
  Response list_runs() const;
  Response submit_run(const std::string& body);
  Response get_run(const std::string& id) const;
  Response run_file(const std::string& id, const std::string& rel) const;
  Response layer(const std::string& name, const std::map<std::string, std::string>& query) const;
  Response cost_potential(const std::string& gid, const std::map<std::string, std::string>& query) const;
  Response eligibility(const std::string& gid, const std::map<std::string, std::string>& query) const;
  Response whatif(const std::string& gid, const std::string& body);

  const Store& store() const { return store_; }

private:
  struct RegionContext;
  std::shared_ptr<const RegionContext> region_context(const std::string& run_id, const std::string& gid);
  RunManifest resolve_run(const std::map<std::string, std::string>& query, const std::string& gid) const;

  Store store_;
  ServiceOptions opt_;
  std::mutex m_;
  std::condition_variable idle_;
  std::set<std::string> in_flight_;
  std::map<std::string, std::shared_ptr<const RegionContext>> contexts_;
  std::unique_ptr<WorkerPool> pool_;  // last: drained before the rest is destroyed
};

/// Serves until the process is stopped.
void serve(Service& service, const std::string& host, int port);

/// $ATLAS_PORT, else 8080.
int port_from_env();

}  // namespace h2atlas::service
