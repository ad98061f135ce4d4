#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "aisfuse/frames.hpp"
#include "aisfuse/projective.hpp"

namespace fixtures {

/// Directory holding the frozen oracle data.
std::filesystem::path data_dir();

/// Random invertible pixel -> world homography with mild perspective; every
/// point of [0, 2000]^2 stays well in front of the camera.
Eigen::Matrix3d random_homography(std::mt19937_64& rng);

/// `count` random image points in [0, 2000]^2 with their exact world images.
std::vector<aisfuse::Correspondence> exact_correspondences(const Eigen::Matrix3d& h, std::size_t count,
                                                           std::mt19937_64& rng);

/// Smooth multi-scale value noise, grayscale.
aisfuse::Raster textured_panorama(int width, int height, std::uint32_t seed);

/// Adds rounded Gaussian noise and saturates to [0, 255].
aisfuse::Raster add_noise(const aisfuse::Raster& img, double sigma, std::uint32_t seed);

struct OracleRow {
  double lat1, lon1, lat2, lon2, azimuth, distance;
};

/// Rows of the frozen geodesic oracle table.
std::vector<OracleRow> geodesic_oracle();

}  // namespace fixtures
