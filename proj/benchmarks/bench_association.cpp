#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "aisfuse/association.hpp"

using namespace aisfuse;

namespace {

std::vector<PixelPoint> points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> x(0.0, 1920.0), y(0.0, 1080.0);
  std::vector<PixelPoint> out(n);
  for (auto& p : out) p = {x(rng), y(rng)};
  return out;
}

}  // namespace

static void BM_KdTreeBuild(benchmark::State& state) {
  const auto pts = points(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(KdTree(pts));
}
BENCHMARK(BM_KdTreeBuild)->Arg(100)->Arg(10000);

static void BM_KdTreeNearest(benchmark::State& state) {
  const KdTree tree(points(static_cast<std::size_t>(state.range(0)), 8));
  const auto queries = points(1024, 9);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(tree.nearest(queries[i++ & 1023]));
}
BENCHMARK(BM_KdTreeNearest)->Arg(100)->Arg(10000);

static void BM_AssignOneToOne(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto boxes = points(n, 10), pts = points(n, 11);
  for (auto _ : state) benchmark::DoNotOptimize(nn_assign(boxes, pts, AssignMode::OneToOne));
}
BENCHMARK(BM_AssignOneToOne)->Arg(20)->Arg(500);
