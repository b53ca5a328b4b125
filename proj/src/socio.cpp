#include "h2atlas/socio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "h2atlas/csv.hpp"
#include "h2atlas/error.hpp"

namespace h2atlas::socio {

namespace {

void check_fraction(double v, const char* what, const std::string& gid) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(gid + ": " + what + " must be in [0, 1]");
}

double rate(const std::optional<double>& r, const char* what, const std::string& gid) {
  if (!r) throw InvalidArgument(gid + ": missing " + std::string(what) + " access rate");
  return *r;
}

double per_area(double people, const RegionDemographics& d) {
  if (!(d.area_km2 > 0)) throw InvalidArgument(d.gid + ": area must be positive");
  return people / d.area_km2;
}

const char* const kClassNames[] = {"very low", "low", "medium", "high", "very high"};

}  // namespace

void RegionDemographics::validate() const {
  if (gid.empty()) throw InvalidArgument("region without gid");
  if (!(area_km2 > 0)) throw InvalidArgument(gid + ": area must be positive");
  if (!(urban_pop >= 0) || !(rural_pop >= 0)) throw InvalidArgument(gid + ": populations must be nonnegative");
  check_fraction(labor_share, "labor_share", gid);
  check_fraction(unemployment, "unemployment", gid);
  check_fraction(poverty, "poverty", gid);
  check_fraction(rate(no_access.elec_urban, "urban electricity", gid), "no_access_elec_u", gid);
  check_fraction(rate(no_access.elec_rural, "rural electricity", gid), "no_access_elec_r", gid);
  check_fraction(rate(no_access.fuel_urban, "urban clean-fuel", gid), "no_access_fuel_u", gid);
  check_fraction(rate(no_access.fuel_rural, "rural clean-fuel", gid), "no_access_fuel_r", gid);
}

void apply_national_rates(std::vector<RegionDemographics>& regions, const AccessRates& national) {
  for (auto& r : regions) {
    auto fill = [](std::optional<double>& v, const std::optional<double>& n) {
      if (!v) v = n;
    };
    fill(r.no_access.elec_urban, national.elec_urban);
    fill(r.no_access.elec_rural, national.elec_rural);
    fill(r.no_access.fuel_urban, national.fuel_urban);
    fill(r.no_access.fuel_rural, national.fuel_rural);
    r.validate();
  }
}

std::vector<RegionDemographics> parse_demographics_csv(std::string_view text) {
  const auto t = csv::parse(text);
  const auto gid = t.column("gid"), area = t.column("area_km2"), up = t.column("urban_pop"),
             rp = t.column("rural_pop"), ls = t.column("labor_share"), un = t.column("unemployment"),
             pov = t.column("poverty"), eu = t.column("no_access_elec_u"), er = t.column("no_access_elec_r"),
             fu = t.column("no_access_fuel_u"), fr = t.column("no_access_fuel_r");
  auto opt = [](const std::string& f, const char* what) -> std::optional<double> {
    if (csv::trim(f).empty()) return std::nullopt;
    return csv::to_double(f, what);
  };
  std::vector<RegionDemographics> out;
  for (const auto& row : t.rows) {
    RegionDemographics d;
    d.gid = std::string(csv::trim(row[gid]));
    d.area_km2 = csv::to_double(row[area], "area_km2");
    d.urban_pop = csv::to_double(row[up], "urban_pop");
    d.rural_pop = csv::to_double(row[rp], "rural_pop");
    d.labor_share = csv::to_double(row[ls], "labor_share");
    d.unemployment = csv::to_double(row[un], "unemployment");
    d.poverty = csv::to_double(row[pov], "poverty");
    d.no_access = {opt(row[eu], "no_access_elec_u"), opt(row[er], "no_access_elec_r"),
                   opt(row[fu], "no_access_fuel_u"), opt(row[fr], "no_access_fuel_r")};
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<RegionDemographics> read_demographics_csv(const std::filesystem::path& path) {
  return parse_demographics_csv(csv::read_file(path));
}

void EmploymentParams::validate() const {
  for (double v : {regional_multiplier, ef_pv, ef_wind, ef_hydro, ef_pth})
    if (!(v >= 0) || !std::isfinite(v)) throw InvalidArgument("employment parameters must be nonnegative");
}

EmploymentParams employment_params_from_json(const nlohmann::json& j, EmploymentParams p) {
  p.regional_multiplier = j.value("regional_multiplier", p.regional_multiplier);
  p.ef_pv = j.value("ef_pv", p.ef_pv);
  p.ef_wind = j.value("ef_wind", p.ef_wind);
  p.ef_hydro = j.value("ef_hydro", p.ef_hydro);
  p.ef_pth = j.value("ef_pth", p.ef_pth);
  p.validate();
  return p;
}

double energy_access_indicator(const RegionDemographics& d) {
  const double eu = rate(d.no_access.elec_urban, "urban electricity", d.gid);
  const double er = rate(d.no_access.elec_rural, "rural electricity", d.gid);
  return per_area(eu * d.urban_pop + er * d.rural_pop, d);
}

double clean_fuel_indicator(const RegionDemographics& d) {
  const double fu = rate(d.no_access.fuel_urban, "urban clean-fuel", d.gid);
  const double fr = rate(d.no_access.fuel_rural, "rural clean-fuel", d.gid);
  return per_area(fu * d.urban_pop + fr * d.rural_pop, d);
}

double employment_indicator(const RegionDemographics& d, const EmploymentParams& p) {
  p.validate();
  const double ef_res = (p.ef_pv + p.ef_wind + p.ef_hydro) / 3.0;
  return per_area(p.regional_multiplier * (ef_res + p.ef_pth) * d.unemployment * d.labor_share * d.population(), d);
}

double poverty_indicator(const RegionDemographics& d) { return 100.0 * d.poverty; }

ZScores zscore(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw InvalidArgument("z-scores need at least two regions");
  ZScores out;
  const double mean = x.mean();
  const Eigen::VectorXd c = x.array() - mean;
  const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(x.size()));
  // relative threshold: a constant column rounds to a tiny nonzero spread
  if (!(sd > 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff()))) {
    out.z = Eigen::VectorXd::Zero(x.size());
    out.degenerate = true;
    return out;
  }
  out.z = c / sd;
  return out;
}

std::string to_string(ImpactClass c) { return kClassNames[static_cast<int>(c)]; }

std::vector<ImpactClass> quintile_classes(const Eigen::VectorXd& v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(b)]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[static_cast<Eigen::Index>(order[j + 1])] == v[static_cast<Eigen::Index>(order[i])]) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  std::vector<ImpactClass> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = static_cast<int>(std::floor(5.0 * (rank[i] + 0.5) / static_cast<double>(n)));
    out[i] = static_cast<ImpactClass>(std::min(4, q));
  }
  return out;
}

void validate_weights(const Weights& w) {
  double s = 0;
  for (double x : w) {
    if (!(x >= 0)) throw InvalidArgument("weights must be nonnegative");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-9) throw InvalidArgument("weights must sum to 1");
}

CompositeIndex composite(std::vector<std::string> gids, const Eigen::MatrixXd& raw, const Weights& w) {
  validate_weights(w);
  if (raw.cols() != kIndicators) throw InvalidArgument("expected 4 indicator columns");
  if (static_cast<Eigen::Index>(gids.size()) != raw.rows()) throw InvalidArgument("region count does not match indicator rows");
  CompositeIndex c;
  c.gids = std::move(gids);
  c.raw = raw;
  c.weights = w;
  c.z.resize(raw.rows(), kIndicators);
  static const char* const names[] = {"energy access", "employment", "clean fuel", "poverty"};
  for (int k = 0; k < kIndicators; ++k) {
    const auto zs = zscore(raw.col(k));
    c.z.col(k) = zs.z;
    if (zs.degenerate) c.warnings.push_back(std::string(names[k]) + " indicator has zero variance; z-scores set to 0");
  }
  c.composite = c.z * Eigen::Map<const Eigen::Vector4d>(w.data());
  c.classes = quintile_classes(c.composite);
  return c;
}

CompositeIndex composite(const std::vector<RegionDemographics>& regions, const EmploymentParams& p, const Weights& w) {
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(regions.size()), kIndicators);
  std::vector<std::string> gids;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& d = regions[i];
    d.validate();
    const auto r = static_cast<Eigen::Index>(i);
    raw(r, 0) = energy_access_indicator(d);
    raw(r, 1) = employment_indicator(d, p);
    raw(r, 2) = clean_fuel_indicator(d);
    raw(r, 3) = poverty_indicator(d);
    gids.push_back(d.gid);
  }
  return composite(std::move(gids), raw, w);
}

nlohmann::json to_json(const CompositeIndex& c) {
  nlohmann::json regions = nlohmann::json::array();
  for (std::size_t i = 0; i < c.gids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    regions.push_back({{"gid", c.gids[i]},
                       {"raw", {{"energy_access", c.raw(r, 0)}, {"employment", c.raw(r, 1)},
                                {"clean_fuel", c.raw(r, 2)}, {"poverty_pct", c.raw(r, 3)}}},
                       {"z", {c.z(r, 0), c.z(r, 1), c.z(r, 2), c.z(r, 3)}},
                       {"composite", c.composite[r]},
                       {"class", to_string(c.classes[i])}});
  }
  return {{"weights", c.weights}, {"regions", regions}, {"warnings", c.warnings}};
}

}  // namespace h2atlas::socio
