#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "aisfuse/geodesy.hpp"

using namespace aisfuse;

static void BM_InverseGeodesic(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-180.0, 179.0);
  std::vector<std::pair<GeoPoint, GeoPoint>> pairs(1024);
  for (auto& p : pairs) p = {{lat(rng), lon(rng)}, {lat(rng), lon(rng)}};
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 1023];
    benchmark::DoNotOptimize(inverse_geodesic(a, b));
  }
}
BENCHMARK(BM_InverseGeodesic);

static void BM_ForwardGeodesic(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> az(0.0, 360.0), dist(10.0, 50000.0);
  const GeoPoint origin{53.54388, 9.91692};
  for (auto _ : state) benchmark::DoNotOptimize(forward_geodesic(origin, az(rng), dist(rng)));
}
BENCHMARK(BM_ForwardGeodesic);
