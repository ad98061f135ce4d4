#include "aisfuse/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "aisfuse/error.hpp"

namespace aisfuse {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr int kMaxIterations = 200;
constexpr double kConvergence = 1e-13;

// Reduced latitude, written with atan2 so the poles stay finite.
void reduced_latitude(double lat_rad, double& sin_u, double& cos_u) {
  const double u = std::atan2((1.0 - wgs84::kFlattening) * std::sin(lat_rad), std::cos(lat_rad));
  sin_u = std::sin(u);
  cos_u = std::cos(u);
}

struct SeriesCoefficients {
  double a;
  double b;
};

SeriesCoefficients series(double cos_sq_alpha) {
  constexpr double a2 = wgs84::kSemiMajorAxis * wgs84::kSemiMajorAxis;
  constexpr double b2 = wgs84::kSemiMinorAxis * wgs84::kSemiMinorAxis;
  const double u_sq = cos_sq_alpha * (a2 - b2) / b2;
  const double a =
      1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
  const double b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
  return {a, b};
}

double delta_sigma(double b, double sin_sigma, double cos_sigma, double cos_2sigma_m) {
  const double c2 = cos_2sigma_m * cos_2sigma_m;
  return b * sin_sigma *
         (cos_2sigma_m +
          b / 4.0 *
              (cos_sigma * (-1.0 + 2.0 * c2) -
               b / 6.0 * cos_2sigma_m * (-3.0 + 4.0 * sin_sigma * sin_sigma) * (-3.0 + 4.0 * c2)));
}

double cross(const PixelPoint& o, const PixelPoint& a, const PixelPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const PixelPoint& a, const PixelPoint& b, const PixelPoint& p) {
  if (cross(a, b, p) != 0.0) return false;
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

double normalize_longitude(double lon) {
  if (lon >= -180.0 && lon < 180.0) return lon;
  double r = std::fmod(lon + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  return r - 180.0;
}

double normalize_azimuth(double azimuth) {
  double r = std::fmod(azimuth, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value can round up to exactly 360
  return r >= 360.0 ? 0.0 : r;
}

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon < 180.0;
}

GeoPoint make_geo_point(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0) {
    throw Error(Errc::invalid_argument,
                "invalid coordinate (" + std::to_string(lat) + ", " + std::to_string(lon) + ")");
  }
  return {lat, normalize_longitude(lon)};
}

AzimuthDistance inverse_geodesic(const GeoPoint& a, const GeoPoint& b) {
  if (a.lat == b.lat && normalize_longitude(a.lon) == normalize_longitude(b.lon)) return {0.0, 0.0};

  constexpr double f = wgs84::kFlattening;
  const double big_l = normalize_longitude(b.lon - a.lon) * kDegToRad;
  double sin_u1, cos_u1, sin_u2, cos_u2;
  reduced_latitude(a.lat * kDegToRad, sin_u1, cos_u1);
  reduced_latitude(b.lat * kDegToRad, sin_u2, cos_u2);

  double lambda = big_l;
  double sin_sigma = 0, cos_sigma = 0, sigma = 0, cos_sq_alpha = 0, cos_2sigma_m = 0;
  double sin_lambda = 0, cos_lambda = 0;
  int iter = 0;
  for (;; ++iter) {
    if (iter >= kMaxIterations) {
      throw Error(Errc::non_convergence, "inverse geodesic did not converge (near-antipodal points)");
    }
    sin_lambda = std::sin(lambda);
    cos_lambda = std::cos(lambda);
    const double t1 = cos_u2 * sin_lambda;
    const double t2 = cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lambda;
    sin_sigma = std::sqrt(t1 * t1 + t2 * t2);
    if (sin_sigma == 0.0) return {0.0, 0.0};
    cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lambda;
    sigma = std::atan2(sin_sigma, cos_sigma);
    const double sin_alpha = cos_u1 * cos_u2 * sin_lambda / sin_sigma;
    cos_sq_alpha = 1.0 - sin_alpha * sin_alpha;
    cos_2sigma_m = cos_sq_alpha != 0.0 ? cos_sigma - 2.0 * sin_u1 * sin_u2 / cos_sq_alpha : 0.0;
    const double c = f / 16.0 * cos_sq_alpha * (4.0 + f * (4.0 - 3.0 * cos_sq_alpha));
    const double previous = lambda;
    lambda = big_l + (1.0 - c) * f * sin_alpha *
                         (sigma + c * sin_sigma *
                                      (cos_2sigma_m + c * cos_sigma * (-1.0 + 2.0 * cos_2sigma_m *
                                                                                 cos_2sigma_m)));
    if (std::abs(lambda) > std::numbers::pi) {
      throw Error(Errc::non_convergence, "inverse geodesic diverged (near-antipodal points)");
    }
    if (std::abs(lambda - previous) < kConvergence) break;
  }

  const auto [big_a, big_b] = series(cos_sq_alpha);
  const double distance =
      wgs84::kSemiMinorAxis * big_a * (sigma - delta_sigma(big_b, sin_sigma, cos_sigma, cos_2sigma_m));
  // Bearing from the converged lambda rather than the last-but-one iterate.
  sin_lambda = std::sin(lambda);
  cos_lambda = std::cos(lambda);
  const double azimuth =
      std::atan2(cos_u2 * sin_lambda, cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lambda) * kRadToDeg;
  return {normalize_azimuth(azimuth), distance};
}

GeoPoint forward_geodesic(const GeoPoint& a, double bearing, double distance) {
  if (!(distance >= 0.0) || !std::isfinite(bearing)) {
    throw Error(Errc::invalid_argument, "forward geodesic needs a finite bearing and distance >= 0");
  }
  if (distance > std::numbers::pi * wgs84::kSemiMajorAxis) {
    throw Error(Errc::invalid_argument, "distance exceeds half the ellipsoid circumference");
  }
  if (distance == 0.0) return a;

  constexpr double f = wgs84::kFlattening;
  const double alpha1 = bearing * kDegToRad;
  const double sin_alpha1 = std::sin(alpha1);
  const double cos_alpha1 = std::cos(alpha1);
  double sin_u1, cos_u1;
  reduced_latitude(a.lat * kDegToRad, sin_u1, cos_u1);

  const double sigma1 = std::atan2(sin_u1, cos_u1 * cos_alpha1);
  const double sin_alpha = cos_u1 * sin_alpha1;
  const double cos_sq_alpha = 1.0 - sin_alpha * sin_alpha;
  const auto [big_a, big_b] = series(cos_sq_alpha);

  const double sigma0 = distance / (wgs84::kSemiMinorAxis * big_a);
  double sigma = sigma0;
  double sin_sigma = 0, cos_sigma = 0, cos_2sigma_m = 0;
  for (int iter = 0;; ++iter) {
    if (iter >= kMaxIterations) {
      throw Error(Errc::non_convergence, "forward geodesic did not converge");
    }
    cos_2sigma_m = std::cos(2.0 * sigma1 + sigma);
    sin_sigma = std::sin(sigma);
    cos_sigma = std::cos(sigma);
    const double previous = sigma;
    sigma = sigma0 + delta_sigma(big_b, sin_sigma, cos_sigma, cos_2sigma_m);
    if (std::abs(sigma - previous) < kConvergence) break;
  }
  cos_2sigma_m = std::cos(2.0 * sigma1 + sigma);
  sin_sigma = std::sin(sigma);
  cos_sigma = std::cos(sigma);

  const double tmp = sin_u1 * sin_sigma - cos_u1 * cos_sigma * cos_alpha1;
  const double lat2 = std::atan2(sin_u1 * cos_sigma + cos_u1 * sin_sigma * cos_alpha1,
                                 (1.0 - f) * std::sqrt(sin_alpha * sin_alpha + tmp * tmp));
  const double lambda =
      std::atan2(sin_sigma * sin_alpha1, cos_u1 * cos_sigma - sin_u1 * sin_sigma * cos_alpha1);
  const double c = f / 16.0 * cos_sq_alpha * (4.0 + f * (4.0 - 3.0 * cos_sq_alpha));
  const double big_l =
      lambda - (1.0 - c) * f * sin_alpha *
                   (sigma + c * sin_sigma *
                                (cos_2sigma_m + c * cos_sigma * (-1.0 + 2.0 * cos_2sigma_m * cos_2sigma_m)));
  return {lat2 * kRadToDeg, normalize_longitude(a.lon + big_l * kRadToDeg)};
}

// -- interpolation baseline --------------------------------------------------

AzimuthCalibration make_azimuth_calibration(const GeoPoint& camera_location,
                                            double left_edge_azimuth,
                                            double right_edge_azimuth,
                                            std::span<const CalibrationKeypoint> keypoints) {
  AzimuthCalibration cal;
  cal.camera_location = camera_location;
  cal.left_edge_azimuth = left_edge_azimuth;
  cal.right_edge_azimuth = right_edge_azimuth;
  cal.keypoints.reserve(keypoints.size());
  for (const auto& kp : keypoints) {
    cal.keypoints.push_back({kp.pixel, inverse_geodesic(camera_location, kp.world)});
  }
  return cal;
}

double column_azimuth(const AzimuthCalibration& cal, double x, double image_width) {
  if (!(image_width > 0.0)) throw Error(Errc::invalid_argument, "image width must be positive");
  const double left = normalize_azimuth(cal.left_edge_azimuth);
  double right = normalize_azimuth(cal.right_edge_azimuth);
  if (right == left) throw Error(Errc::invalid_argument, "edge azimuths must differ");
  if (right < left) right += 360.0;
  return normalize_azimuth(left + (right - left) * (x / image_width));
}

double idw_distance(std::span<const AzimuthKeypoint> keypoints, const PixelPoint& p) {
  if (keypoints.empty()) throw Error(Errc::invalid_argument, "no calibration keypoints");
  double weighted = 0.0;
  double weights = 0.0;
  for (const auto& kp : keypoints) {
    const double dx = kp.pixel.x - p.x;
    const double dy = kp.pixel.y - p.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 == 0.0) return kp.polar.distance;
    const double w = 1.0 / d2;  // power 2
    weighted += w * kp.polar.distance;
    weights += w;
  }
  return weighted / weights;
}

bool inside_convex_hull(std::span<const PixelPoint> points, const PixelPoint& p) {
  std::vector<PixelPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(),
            [](const PixelPoint& a, const PixelPoint& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.empty()) return false;
  if (pts.size() == 1) return pts.front() == p;

  // Andrew's monotone chain, counter-clockwise, collinear points dropped.
  std::vector<PixelPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& q : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], q) <= 0.0) --k;
    hull[k++] = q;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);

  if (hull.size() < 3) return on_segment(pts.front(), pts.back(), p);
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0.0) return false;
  }
  return true;
}

InterpolatedWorld interp_pixel_to_world(const AzimuthCalibration& cal, const PixelPoint& p,
                                        double image_width) {
  if (cal.keypoints.size() < 2) {
    throw Error(Errc::invalid_argument, "azimuth calibration needs at least 2 keypoints");
  }
  if (!(p.x >= 0.0 && p.x < image_width)) {
    throw Error(Errc::invalid_argument, "pixel column outside the image");
  }
  InterpolatedWorld out;
  const auto node = std::find_if(cal.keypoints.begin(), cal.keypoints.end(),
                                 [&](const AzimuthKeypoint& kp) { return kp.pixel == p; });
  if (node != cal.keypoints.end()) {
    out.polar = node->polar;
  } else {
    out.polar.azimuth = column_azimuth(cal, p.x, image_width);
    out.polar.distance = idw_distance(cal.keypoints, p);
  }

  std::vector<PixelPoint> nodes;
  nodes.reserve(cal.keypoints.size());
  for (const auto& kp : cal.keypoints) nodes.push_back(kp.pixel);
  out.extrapolated = !inside_convex_hull(nodes, p);

  out.position = forward_geodesic(cal.camera_location, out.polar.azimuth, out.polar.distance);
  return out;
}

}  // namespace aisfuse
