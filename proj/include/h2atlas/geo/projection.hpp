#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "h2atlas/error.hpp"
#include "h2atlas/geo/grid.hpp"

namespace h2atlas::geo {

/// Mean Earth radius used for the spherical projection (m).
inline constexpr double kEarthRadius = 6371008.8;

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

/// Spherical Lambert azimuthal equal-area projection centred on a region.
template <typename Scalar = double>
class LambertAzimuthal {
public:
  LambertAzimuthal(Scalar center_lon, Scalar center_lat, Scalar radius = Scalar(kEarthRadius))
      : lon0_(deg(center_lon)), lat0_(deg(center_lat)), radius_(radius),
        sin_lat0_(std::sin(lat0_)), cos_lat0_(std::cos(lat0_)) {
    if (std::abs(center_lat) > Scalar(90)) throw InvalidArgument("projection centre latitude out of range");
  }

  Scalar center_lon() const { return lon0_ * Scalar(180) / std::numbers::pi_v<Scalar>; }
  Scalar center_lat() const { return lat0_ * Scalar(180) / std::numbers::pi_v<Scalar>; }

  Point forward(LonLat p) const {
    if (std::abs(p.lat) > 90.0) throw InvalidArgument("latitude out of range");
    const Scalar lam = deg(Scalar(p.lon)) - lon0_;
    const Scalar phi = deg(Scalar(p.lat));
    const Scalar sp = std::sin(phi), cp = std::cos(phi), cl = std::cos(lam);
    const Scalar denom = Scalar(1) + sin_lat0_ * sp + cos_lat0_ * cp * cl;
    if (denom <= Scalar(1e-12)) throw Error("projection singularity");
    const Scalar k = std::sqrt(Scalar(2) / denom);
    return {static_cast<double>(radius_ * k * cp * std::sin(lam)),
            static_cast<double>(radius_ * k * (cos_lat0_ * sp - sin_lat0_ * cp * cl))};
  }

  LonLat inverse(Point p) const {
    const Scalar x = p.x, y = p.y;
    const Scalar rho = std::hypot(x, y);
    if (rho == Scalar(0)) return {static_cast<double>(center_lon()), static_cast<double>(center_lat())};
    const Scalar arg = rho / (Scalar(2) * radius_);
    if (arg > Scalar(1)) throw Error("point outside projection domain");
    const Scalar c = Scalar(2) * std::asin(arg);
    const Scalar sc = std::sin(c), cc = std::cos(c);
    const Scalar phi = std::asin(std::clamp(cc * sin_lat0_ + y * sc * cos_lat0_ / rho, Scalar(-1), Scalar(1)));
    const Scalar lam = lon0_ + std::atan2(x * sc, rho * cos_lat0_ * cc - y * sin_lat0_ * sc);
    constexpr Scalar to_deg = Scalar(180) / std::numbers::pi_v<Scalar>;
    Scalar lon = lam * to_deg;
    if (lon > Scalar(180)) lon -= Scalar(360);
    if (lon < Scalar(-180)) lon += Scalar(360);
    return {static_cast<double>(lon), static_cast<double>(phi * to_deg)};
  }

private:
  static Scalar deg(Scalar d) { return d * std::numbers::pi_v<Scalar> / Scalar(180); }

  Scalar lon0_, lat0_, radius_;
  Scalar sin_lat0_, cos_lat0_;
};

using Projection = LambertAzimuthal<double>;

/// Great-circle distance on the projection sphere (m).
inline double great_circle_m(LonLat a, LonLat b) {
  constexpr double r = std::numbers::pi / 180.0;
  const double dphi = (b.lat - a.lat) * r, dlam = (b.lon - a.lon) * r;
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(a.lat * r) * std::cos(b.lat * r) * std::sin(dlam / 2) * std::sin(dlam / 2);
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace h2atlas::geo
