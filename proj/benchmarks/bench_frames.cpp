#include <random>

#include <benchmark/benchmark.h>

#include "aisfuse/frames.hpp"

using namespace aisfuse;

namespace {

// Box-filtered noise so the correlation surface has a single clear peak.
Raster smooth_noise(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Raster raw(w, h, 1);
  for (auto& v : raw.data) v = static_cast<std::uint8_t>(u(rng));
  Raster out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int sum = 0, n = 0;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          sum += raw.at(xx, yy);
          ++n;
        }
      out.at(x, y) = static_cast<std::uint8_t>(sum / n);
    }
  return out;
}

}  // namespace

static void BM_LocalizeExhaustive(benchmark::State& state) {
  const Raster pano = smooth_noise(4000, 1000, 5);
  const PanoramaMatcher m(pano);
  const Raster q = crop(pano, 1234, 321, 320, 240);
  for (auto _ : state) benchmark::DoNotOptimize(m.localize(q));
}
BENCHMARK(BM_LocalizeExhaustive)->Unit(benchmark::kMillisecond);

static void BM_LocalizePyramid(benchmark::State& state) {
  const Raster pano = smooth_noise(4000, 1000, 5);
  const PanoramaMatcher m(pano);
  const Raster q = crop(pano, 1234, 321, 320, 240);
  LocalizeOptions opt;
  opt.mode = SearchMode::Pyramid;
  for (auto _ : state) benchmark::DoNotOptimize(m.localize(q, opt));
}
BENCHMARK(BM_LocalizePyramid)->Unit(benchmark::kMillisecond);

static void BM_Histogram(benchmark::State& state) {
  Raster img(1920, 1080, 3);
  std::mt19937 rng(6);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng());
  for (auto _ : state) benchmark::DoNotOptimize(compute_histogram(img));
}
BENCHMARK(BM_Histogram)->Unit(benchmark::kMillisecond);
