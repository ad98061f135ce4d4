#pragma once

#include <cstdint>

namespace aisfuse {

/// UTC milliseconds since the Unix epoch.
using TimestampMs = std::int64_t;

/// A position on the WGS84 ellipsoid in decimal degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Image coordinates in pixels; origin top-left, y pointing down.
struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

}  // namespace aisfuse
