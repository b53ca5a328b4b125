#pragma once
// Bundled three-region synthetic fixture (coastal West Africa): region
// outlines, criterion layers, preference corpus, weather, water-balance
// grids, coast, hydropower and demographics, plus a pipeline config.
// Generation is deterministic and independent of the platform's
// <random> distributions.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace h2atlas::service::synthetic {

inline const std::vector<std::string> kRegions = {"BEN.10_1", "BEN.10_2", "BEN.5_1"};

struct Options {
  std::set<int> water_years = {2030};  ///< target years whose averaging windows are written
  bool corrupt_region = false;         ///< give BEN.10_2 an out-of-range latitude
  double cell_size_m = 100.0;
};

/// Writes the fixture into `dir` and returns the path of config.json.
std::filesystem::path write_fixture(const std::filesystem::path& dir, const Options& opt = {});

}  // namespace h2atlas::service::synthetic
