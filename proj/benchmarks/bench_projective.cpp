#include <random>
#include <vector>

#include <Eigen/LU>
#include <benchmark/benchmark.h>

#include "aisfuse/projective.hpp"

using namespace aisfuse;

namespace {

Eigen::Matrix3d harbour_like() {
  Eigen::Matrix3d h;
  h << 1e-5, 2e-6, 53.5, -3e-6, 1.6e-5, 9.9, 1e-7, 2e-6, 1.0;
  return h;
}

std::vector<Correspondence> correspondences(std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1920.0);
  const Eigen::Matrix3d h = harbour_like();
  std::vector<Correspondence> out(n);
  for (auto& c : out) {
    const Eigen::Vector3d p(u(rng), u(rng) * 0.5625, 1.0);
    const Eigen::Vector3d w = h * p;
    c = {{p.x(), p.y()}, {w.x() / w.z(), w.y() / w.z()}};
  }
  return out;
}

}  // namespace

static void BM_EstimateHomography(benchmark::State& state) {
  const auto corrs = correspondences(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_homography(corrs));
}
BENCHMARK(BM_EstimateHomography)->Arg(4)->Arg(16)->Arg(64);

static void BM_ProjectWorldToImage(benchmark::State& state) {
  const Homography h(harbour_like());
  const GeoPoint g = apply_homography(h, {960, 700});
  for (auto _ : state) benchmark::DoNotOptimize(project_world_to_image(h, g));
}
BENCHMARK(BM_ProjectWorldToImage);
