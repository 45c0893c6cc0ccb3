#include "orbitledger/orbital.hpp"

#include <algorithm>
#include <numbers>

namespace orbitledger {

std::string_view to_string(OrbitClass orbit)
{
  switch (orbit)
  {
  case OrbitClass::LEO:
    return "leo";
  case OrbitClass::MEO:
    return "meo";
  case OrbitClass::GEO:
    return "geo";
  }
  return "unknown";
}

std::optional<OrbitClass> parse_orbit_class(std::string_view text)
{
  if (text == "leo" || text == "LEO")
  {
    return OrbitClass::LEO;
  }
  if (text == "meo" || text == "MEO")
  {
    return OrbitClass::MEO;
  }
  if (text == "geo" || text == "GEO")
  {
    return OrbitClass::GEO;
  }
  return std::nullopt;
}

double angular_distance_deg(GeoPoint const &a, GeoPoint const &b)
{
  constexpr double deg = std::numbers::pi / 180.0;

  // haversine
  double const dlat = (b.lat - a.lat) * deg;
  double const dlon = (b.lon - a.lon) * deg;
  double const s1   = std::sin(dlat / 2.0);
  double const s2   = std::sin(dlon / 2.0);
  double const h    = s1 * s1 + std::cos(a.lat * deg) * std::cos(b.lat * deg) * s2 * s2;
  return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0))) / deg;
}

}  // namespace orbitledger
