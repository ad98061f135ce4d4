#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fixtures {

using aisfuse::Correspondence;
using aisfuse::Raster;

std::filesystem::path data_dir() { return AISFUSE_TEST_DATA_DIR; }

Eigen::Matrix3d random_homography(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Eigen::Matrix3d h;
    h << u(rng) * 0.01, u(rng) * 0.01, 53.0 + u(rng),  //
        u(rng) * 0.01, u(rng) * 0.01, 9.0 + u(rng),   //
        u(rng) * 2e-4, u(rng) * 2e-4, 1.0;
    // w = h31 x + h32 y + 1 stays within [0.2, 1.8] on the image square
    if (std::abs(h.topLeftCorner<2, 2>().determinant()) < 1e-6) continue;
    return h;
  }
}

std::vector<Correspondence> exact_correspondences(const Eigen::Matrix3d& h, std::size_t count,
                                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2000.0);
  std::vector<Correspondence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), 1.0);
    const Eigen::Vector3d w = h * p;
    out.push_back({{p.x(), p.y()}, {w.x() / w.z(), w.y() / w.z()}});
  }
  return out;
}

namespace {

// Bilinear upsampling of a random lattice with spacing `cell`.
void add_octave(std::vector<double>& acc, int width, int height, int cell, double amplitude, std::mt19937& rng) {
  const int gw = width / cell + 2, gh = height / cell + 2;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> grid(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh));
  for (auto& g : grid) g = u(rng);
  for (int y = 0; y < height; ++y) {
    const int gy = y / cell;
    const double fy = static_cast<double>(y % cell) / cell;
    for (int x = 0; x < width; ++x) {
      const int gx = x / cell;
      const double fx = static_cast<double>(x % cell) / cell;
      const auto at = [&](int i, int j) { return grid[static_cast<std::size_t>(j * gw + i)]; };
      const double top = at(gx, gy) * (1 - fx) + at(gx + 1, gy) * fx;
      const double bottom = at(gx, gy + 1) * (1 - fx) + at(gx + 1, gy + 1) * fx;
      acc[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] +=
          amplitude * (top * (1 - fy) + bottom * fy);
    }
  }
}

}  // namespace

Raster textured_panorama(int width, int height, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::vector<double> acc(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 128.0);
  add_octave(acc, width, height, 64, 60.0, rng);
  add_octave(acc, width, height, 16, 40.0, rng);
  add_octave(acc, width, height, 4, 20.0, rng);
  Raster img(width, height, 1);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    img.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[i]), 0L, 255L));
  }
  return img;
}

Raster add_noise(const Raster& img, double sigma, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  Raster out = img;
  for (auto& v : out.data) v = static_cast<std::uint8_t>(std::clamp(std::lround(v + n(rng)), 0L, 255L));
  return out;
}

std::vector<OracleRow> geodesic_oracle() {
  std::ifstream in(data_dir() / "geodesic_oracle.csv");
  if (!in) throw std::runtime_error("geodesic oracle table missing");
  std::string line;
  std::getline(in, line);
  std::vector<OracleRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    OracleRow r{};
    ss >> r.lat1 >> r.lon1 >> r.lat2 >> r.lon2 >> r.azimuth >> r.distance;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace fixtures
