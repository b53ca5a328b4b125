#pragma once
// Regional socio-economic impact indicators, z-score normalization and
// weighted composite with a five-level classification.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace h2atlas::socio {

/// Shares without access, ADM-1 level; unset fields fall back to national rates.
struct AccessRates {
  std::optional<double> elec_urban, elec_rural, fuel_urban, fuel_rural;
};

struct RegionDemographics {
  std::string gid;
  double area_km2 = 0.0;
  double urban_pop = 0.0, rural_pop = 0.0;
  double labor_share = 0.0;   ///< share of population aged 15–64
  double unemployment = 0.0;  ///< fraction
  double poverty = 0.0;       ///< fraction below the poverty line
  AccessRates no_access;

  double population() const { return urban_pop + rural_pop; }
  void validate() const;  ///< also requires all access rates to be set
};

/// Fills unset access rates from national values; throws when a rate is
/// missing in both.
void apply_national_rates(std::vector<RegionDemographics>& regions, const AccessRates& national);

/// `gid,area_km2,urban_pop,rural_pop,labor_share,unemployment,poverty,
/// no_access_elec_u,no_access_elec_r,no_access_fuel_u,no_access_fuel_r`;
/// empty access fields are left unset.
std::vector<RegionDemographics> parse_demographics_csv(std::string_view text);
std::vector<RegionDemographics> read_demographics_csv(const std::filesystem::path& path);

struct EmploymentParams {
  double regional_multiplier = 1.0;
  double ef_pv = 5.1, ef_wind = 3.2, ef_hydro = 5.9;  ///< jobs/MWp
  double ef_pth = 1.7;

  void validate() const;
};

EmploymentParams employment_params_from_json(const nlohmann::json& j, EmploymentParams base = {});

/// Population without electricity access per km².
double energy_access_indicator(const RegionDemographics& d);
/// Employment potential, jobs/(MWp·km²).
double employment_indicator(const RegionDemographics& d, const EmploymentParams& p);
/// Population without clean cooking fuel per km².
double clean_fuel_indicator(const RegionDemographics& d);
/// Share below the poverty line in percent.
double poverty_indicator(const RegionDemographics& d);

struct ZScores {
  Eigen::VectorXd z;
  bool degenerate = false;  ///< zero variance: all zeros
};

/// (x − mean) / population std.
ZScores zscore(const Eigen::VectorXd& x);

enum class ImpactClass { very_low, low, medium, high, very_high };

std::string to_string(ImpactClass c);

/// Quintile class from the average rank over the set (ties share their rank).
std::vector<ImpactClass> quintile_classes(const Eigen::VectorXd& composite);

inline constexpr int kIndicators = 4;
using Weights = std::array<double, kIndicators>;
/// Direct effects (access, employment) count double the indirect ones.
inline constexpr Weights kDefaultWeights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};

void validate_weights(const Weights& w);

struct CompositeIndex {
  std::vector<std::string> gids;
  Eigen::MatrixXd raw;  ///< regions × indicators
  Eigen::MatrixXd z;
  Weights weights = kDefaultWeights;
  Eigen::VectorXd composite;
  std::vector<ImpactClass> classes;
  std::vector<std::string> warnings;
};

/// Composite from a raw indicator matrix (regions × 4).
CompositeIndex composite(std::vector<std::string> gids, const Eigen::MatrixXd& raw, const Weights& w = kDefaultWeights);
CompositeIndex composite(const std::vector<RegionDemographics>& regions, const EmploymentParams& p = {},
                         const Weights& w = kDefaultWeights);

nlohmann::json to_json(const CompositeIndex& c);

}  // namespace h2atlas::socio
