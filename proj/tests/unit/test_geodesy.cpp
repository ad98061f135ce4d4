#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "aisfuse/error.hpp"
#include "aisfuse/geodesy.hpp"
#include "fixtures.hpp"

using namespace aisfuse;

namespace {

double azimuth_gap(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 360.0 - d);
}

}  // namespace

TEST(GeoPoint, RejectsInvalidAndWrapsLongitude) {
  EXPECT_THROW(make_geo_point(90.5, 0.0), Error);
  EXPECT_THROW(make_geo_point(NAN, 0.0), Error);
  EXPECT_THROW(make_geo_point(0.0, INFINITY), Error);
  EXPECT_DOUBLE_EQ(make_geo_point(10.0, 190.0).lon, -170.0);
  EXPECT_DOUBLE_EQ(make_geo_point(10.0, -180.0).lon, -180.0);
  EXPECT_DOUBLE_EQ(normalize_longitude(180.0), -180.0);
  EXPECT_EQ(normalize_longitude(9.935401), 9.935401);
  EXPECT_DOUBLE_EQ(normalize_azimuth(-90.0), 270.0);
  EXPECT_DOUBLE_EQ(normalize_azimuth(360.0), 0.0);
}

TEST(InverseGeodesic, MatchesOracleTable) {
  const auto rows = fixtures::geodesic_oracle();
  ASSERT_EQ(rows.size(), 1000u);
  for (const auto& r : rows) {
    const auto g = inverse_geodesic({r.lat1, r.lon1}, {r.lat2, r.lon2});
    EXPECT_LT(std::abs(g.distance - r.distance), 1e-3);
    EXPECT_LT(azimuth_gap(g.azimuth, r.azimuth), 1e-6);
  }
}

TEST(InverseGeodesic, HarbourPairAndDueEast) {
  // Values from the same oracle, printed by its generator script.
  const auto g = inverse_geodesic({53.54553, 9.96957}, {53.54387, 9.94275});
  EXPECT_NEAR(g.azimuth, 264.07805834412187, 1e-9);
  EXPECT_NEAR(g.distance, 1787.4509821245515, 1e-6);
  const auto east = inverse_geodesic({53.0, 9.0}, {53.0, 9.0001});
  EXPECT_NEAR(east.azimuth, 90.0, 1e-4);
}

TEST(InverseGeodesic, CoincidentPointsGiveZero) {
  const auto g = inverse_geodesic({53.5, 9.9}, {53.5, 9.9});
  EXPECT_EQ(g.distance, 0.0);
  EXPECT_EQ(g.azimuth, 0.0);
}

TEST(InverseGeodesic, SymmetricDistance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lat(53.0, 54.0), lon(9.0, 11.0);
  for (int i = 0; i < 200; ++i) {
    const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    EXPECT_NEAR(inverse_geodesic(a, b).distance, inverse_geodesic(b, a).distance, 1e-6);
  }
}

TEST(ForwardGeodesic, RoundTripsWithInverse) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> az(0.0, 360.0), dist(1.0, 100000.0);
  const GeoPoint origin{53.54, 9.95};
  for (int i = 0; i < 500; ++i) {
    const double a = az(rng), d = dist(rng);
    const GeoPoint p = forward_geodesic(origin, a, d);
    const auto back = inverse_geodesic(origin, p);
    EXPECT_NEAR(back.distance, d, 1e-6);
    EXPECT_LT(azimuth_gap(back.azimuth, a), 1e-8);
  }
}

TEST(ColumnAzimuth, LinearBetweenEdges) {
  AzimuthCalibration cal;
  cal.left_edge_azimuth = 90.0;
  cal.right_edge_azimuth = 180.0;
  EXPECT_DOUBLE_EQ(column_azimuth(cal, 960.0, 1920.0), 135.0);
  EXPECT_DOUBLE_EQ(column_azimuth(cal, 0.0, 1920.0), 90.0);
  EXPECT_DOUBLE_EQ(column_azimuth(cal, 1920.0, 1920.0), 180.0);
}

TEST(ColumnAzimuth, UnwrapsAcrossNorth) {
  AzimuthCalibration cal;
  cal.left_edge_azimuth = 340.0;
  cal.right_edge_azimuth = 20.0;
  EXPECT_NEAR(column_azimuth(cal, 960.0, 1920.0), 0.0, 1e-12);
  EXPECT_NEAR(column_azimuth(cal, 480.0, 1920.0), 350.0, 1e-12);
}

TEST(IdwDistance, MatchesBruteForceWeights) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> px(0.0, 1920.0), dist(100.0, 3000.0);
  std::vector<AzimuthKeypoint> kps(12);
  for (auto& k : kps) k = {{px(rng), px(rng) * 0.5625}, {0.0, dist(rng)}};
  for (int i = 0; i < 100; ++i) {
    const PixelPoint p{px(rng), px(rng) * 0.5625};
    double num = 0.0, den = 0.0;
    for (const auto& k : kps) {
      const double w = 1.0 / ((p.x - k.pixel.x) * (p.x - k.pixel.x) + (p.y - k.pixel.y) * (p.y - k.pixel.y));
      num += w * k.polar.distance;
      den += w;
    }
    EXPECT_NEAR(idw_distance(kps, p), num / den, 1e-9);
  }
  EXPECT_EQ(idw_distance(kps, kps[3].pixel), kps[3].polar.distance);
}

TEST(InterpPixelToWorld, ReproducesKeypointsExactly) {
  const GeoPoint cam{53.54388, 9.91692};
  std::vector<CalibrationKeypoint> kps{{{100, 800}, {53.5400, 9.9100}},
                                       {{900, 700}, {53.5380, 9.9200}},
                                       {{1700, 850}, {53.5395, 9.9300}},
                                       {{1000, 1000}, {53.5415, 9.9190}}};
  const auto cal = make_azimuth_calibration(cam, 130.0, 200.0, kps);
  for (const auto& k : kps) {
    const auto r = interp_pixel_to_world(cal, k.pixel, 1920.0);
    EXPECT_LT(inverse_geodesic(r.position, k.world).distance, 1.0);
    EXPECT_FALSE(r.extrapolated);
  }
}

TEST(InterpPixelToWorld, FlagsExtrapolation) {
  const GeoPoint cam{53.54388, 9.91692};
  std::vector<CalibrationKeypoint> kps{
      {{500, 600}, {53.5400, 9.9100}}, {{1400, 600}, {53.5380, 9.9300}}, {{900, 1000}, {53.5415, 9.9190}}};
  const auto cal = make_azimuth_calibration(cam, 130.0, 200.0, kps);
  EXPECT_FALSE(interp_pixel_to_world(cal, {900, 700}, 1920.0).extrapolated);
  EXPECT_TRUE(interp_pixel_to_world(cal, {50, 100}, 1920.0).extrapolated);
  const auto mid = interp_pixel_to_world(cal, {960, 700}, 1920.0);
  EXPECT_DOUBLE_EQ(mid.polar.azimuth, 165.0);
}

TEST(ConvexHull, InsideAndBoundary) {
  const std::vector<PixelPoint> sq{{0, 0}, {10, 0}, {10, 10}, {0, 10}, {5, 5}};
  EXPECT_TRUE(inside_convex_hull(sq, {5, 5}));
  EXPECT_TRUE(inside_convex_hull(sq, {10, 5}));
  EXPECT_FALSE(inside_convex_hull(sq, {10.5, 5}));
}
