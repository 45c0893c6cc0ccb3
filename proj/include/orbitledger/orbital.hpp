#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace orbitledger {

enum class OrbitClass : std::uint8_t
{
  LEO = 0,
  MEO = 1,
  GEO = 2,
};

std::string_view          to_string(OrbitClass orbit);
std::optional<OrbitClass> parse_orbit_class(std::string_view text);

struct Vec3
{
  double x{0.0};
  double y{0.0};
  double z{0.0};

  friend bool operator==(Vec3 const &, Vec3 const &) = default;

  Vec3 operator+(Vec3 const &o) const
  {
    return {x + o.x, y + o.y, z + o.z};
  }
  Vec3 operator-(Vec3 const &o) const
  {
    return {x - o.x, y - o.y, z - o.z};
  }
  Vec3 operator*(double s) const
  {
    return {x * s, y * s, z * s};
  }
  Vec3 &operator+=(Vec3 const &o)
  {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  double dot(Vec3 const &o) const
  {
    return x * o.x + y * o.y + z * o.z;
  }
  Vec3 cross(Vec3 const &o) const
  {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const
  {
    return std::sqrt(dot(*this));
  }
  bool finite() const
  {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

/// Linearized local-frame state: position in km, velocity in km/s.
struct KinematicState
{
  Vec3 position;
  Vec3 velocity;

  friend bool operator==(KinematicState const &, KinematicState const &) = default;

  bool finite() const
  {
    return position.finite() && velocity.finite();
  }
};

/// Geodetic point in degrees.
struct GeoPoint
{
  double lat{0.0};
  double lon{0.0};

  friend bool operator==(GeoPoint const &, GeoPoint const &) = default;

  bool valid() const
  {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
  }
};

/// Great-circle central angle between two points, in degrees.
double angular_distance_deg(GeoPoint const &a, GeoPoint const &b);

}  // namespace orbitledger
