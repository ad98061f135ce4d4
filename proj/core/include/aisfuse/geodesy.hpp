#pragma once

#include <span>
#include <vector>

#include "aisfuse/types.hpp"

namespace aisfuse {

struct AzimuthDistance {
  double azimuth = 0.0;   // degrees clockwise from true north, [0, 360)
  double distance = 0.0;  // meters
};

namespace wgs84 {
inline constexpr double kSemiMajorAxis = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kSemiMinorAxis = kSemiMajorAxis * (1.0 - kFlattening);
}  // namespace wgs84

/// Throws Errc::invalid_argument for non-finite values or |lat| > 90.
/// Longitude is wrapped into [-180, 180).
GeoPoint make_geo_point(double lat, double lon);
bool is_valid(const GeoPoint& p);
double normalize_longitude(double lon);
double normalize_azimuth(double azimuth);

/// Geodesic inverse problem on WGS84 (Vincenty's iteration).
///
/// Returns the ellipsoidal distance in meters and the initial bearing at `a`.
/// Coincident points yield azimuth 0. Throws Errc::non_convergence when the
/// iteration does not settle within the cap, which only happens for nearly
/// antipodal pairs.
AzimuthDistance inverse_geodesic(const GeoPoint& a, const GeoPoint& b);

/// Geodesic direct problem: the point reached from `a` after `distance`
/// meters along the initial `bearing`.
GeoPoint forward_geodesic(const GeoPoint& a, double bearing, double distance);

// -- Azimuth/distance interpolation transform ------------------------------

struct AzimuthKeypoint {
  PixelPoint pixel;
  AzimuthDistance polar;  // as seen from the camera location
};

/// Camera model for the interpolation baseline: azimuth varies linearly with
/// the image column between the two edge azimuths, distance is interpolated
/// from hand-picked keypoints.
struct AzimuthCalibration {
  GeoPoint camera_location;
  double left_edge_azimuth = 0.0;   // at x = 0
  double right_edge_azimuth = 0.0;  // at x = image_width
  std::vector<AzimuthKeypoint> keypoints;
};

struct CalibrationKeypoint {
  PixelPoint pixel;
  GeoPoint world;
};

/// Builds an AzimuthCalibration by resolving each keypoint's world position
/// into azimuth/distance from the camera.
AzimuthCalibration make_azimuth_calibration(const GeoPoint& camera_location,
                                            double left_edge_azimuth,
                                            double right_edge_azimuth,
                                            std::span<const CalibrationKeypoint> keypoints);

struct InterpolatedWorld {
  GeoPoint position;
  AzimuthDistance polar;
  bool extrapolated = false;  // query outside the convex hull of the keypoints
};

/// Azimuth of column x, interpolated linearly between the edges. When the
/// field of view crosses north (right < left) the right edge is unwrapped.
double column_azimuth(const AzimuthCalibration& cal, double x, double image_width);

/// Inverse-distance weighting (power 2) in pixel space. Exact at nodes.
double idw_distance(std::span<const AzimuthKeypoint> keypoints, const PixelPoint& p);

/// Keypoint pixels return their own polar coordinates; other pixels take the
/// column azimuth and the interpolated distance.
InterpolatedWorld interp_pixel_to_world(const AzimuthCalibration& cal, const PixelPoint& p,
                                        double image_width);

/// True when p lies inside or on the convex hull of the given points.
bool inside_convex_hull(std::span<const PixelPoint> points, const PixelPoint& p);

}  // namespace aisfuse
