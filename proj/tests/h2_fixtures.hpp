#pragma once
// Synthetic availability profiles and node models for the optimizer tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "h2atlas/h2opt.hpp"

namespace fixture {

using h2atlas::h2opt::NodeModel;
using h2atlas::h2opt::Source;
using h2atlas::res::Component;
using h2atlas::res::Series;
using h2atlas::res::kHours;

inline Series flat(double v) { return Series::Constant(kHours, v); }

// Scale a nonnegative shape so that clip(a·shape, 0, 1) has the requested mean.
inline Series with_mean(const Series& shape, double mean) {
  double lo = 0, hi = 1;
  while ((hi * shape).cwiseMin(1.0).mean() < mean) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((mid * shape).cwiseMin(1.0).mean() < mean ? lo : hi) = mid;
  }
  return (hi * shape).cwiseMin(1.0);
}

/// Daylight half-sine with day-to-day cloudiness.
inline Series solar(double mean, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cloud(0.55, 1.0);
  Series s = Series::Zero(kHours);
  for (int d = 0; d < 365; ++d) {
    const double c = cloud(rng);
    for (int h = 6; h < 18; ++h) s[d * 24 + h] = c * std::sin(std::numbers::pi * (h - 6 + 0.5) / 12.0);
  }
  return with_mean(s, mean);
}

/// Turbine output for a steady high-resource regime (trade winds with a
/// nocturnal low-level jet): persistent speed anomalies of ±25 %, a night
/// peak, speed scale tuned to the requested mean capacity factor.
inline Series wind(double mean, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  Series u(kHours);
  double z = 0;
  for (Eigen::Index t = 0; t < kHours; ++t) {
    z = 0.97 * z + std::sqrt(1 - 0.97 * 0.97) * n(rng);
    const double hour = static_cast<double>(t % 24);
    u[t] = std::max(0.0, 1.0 + 0.25 * z) * (1.0 + 0.2 * std::cos(2 * std::numbers::pi * (hour - 2) / 24.0));
  }
  h2atlas::res::WeatherSeries w;
  w.ghi = Series::Zero(kHours);
  w.air_temp = Series::Constant(kHours, 25.0);
  const h2atlas::placement::TurbineSpec turbine;
  auto cf = [&](double scale) {
    w.wind_speed = scale * u;
    return h2atlas::res::simulate_wind(w, turbine);
  };
  double lo = 0, hi = 12;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cf(mid).mean() < mean ? lo : hi) = mid;
  }
  return cf(0.5 * (lo + hi));
}

/// Daily-constant availability (keeps its shape under 24 h down-sampling).
inline Series daily_blocks(double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Series s(kHours);
  for (int d = 0; d < 365; ++d) s.segment(d * 24, 24).setConstant(u(rng));
  return s;
}

inline NodeModel high_resource_2050() {
  NodeModel n;
  n.region_id = "SYN.HIGH";
  n.year = 2050;
  n.sources.push_back({"pv_0", Component::pv, 20000.0, solar(0.22, 1)});
  n.sources.push_back({"wind_0", Component::wind, 20000.0, wind(0.35, 2)});
  n.water.groundwater_m3 = 1e9;
  return n;
}

}  // namespace fixture
