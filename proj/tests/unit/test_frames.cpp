#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "aisfuse/error.hpp"
#include "aisfuse/frames.hpp"
#include "fixtures.hpp"
#include "scene.hpp"

using namespace aisfuse;

namespace {

Raster random_raster(int w, int h, int c, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Raster img(w, h, c);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(u(rng));
  return img;
}

HistogramVec random_histogram(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HistogramVec h{1, std::vector<double>(256)};
  double sum = 0.0;
  for (auto& b : h.bins) sum += (b = u(rng));
  for (auto& b : h.bins) b /= sum;
  return h;
}

}  // namespace

TEST(Raster, ValidateAndGray) {
  EXPECT_THROW(validate(Raster(0, 5, 1)), Error);
  Raster bad(2, 2, 1);
  bad.data.pop_back();
  EXPECT_THROW(validate(bad), Error);
  Raster rgb(1, 1, 3);
  rgb.data = {255, 0, 0};
  EXPECT_EQ(to_grayscale(rgb).data[0], 76);  // 0.299 * 255 = 76.2
  rgb.data = {10, 200, 30};
  EXPECT_EQ(to_grayscale(rgb).data[0], static_cast<int>(std::floor(0.299 * 10 + 0.587 * 200 + 0.114 * 30 + 0.5)));
}

TEST(Raster, PngRoundTrip) {
  scene::TempDir dir("raster");
  const Raster img = random_raster(31, 17, 3, 4);
  save_raster(dir.path() / "a.png", img);
  const Raster back = load_raster(dir.path() / "a.png");
  EXPECT_EQ(back.width, 31);
  EXPECT_EQ(back.channels, 3);
  EXPECT_EQ(back.data, img.data);
  EXPECT_THROW(load_raster(dir.path() / "missing.png"), Error);
}

TEST(Histogram, UniformGrayIsOneHot) {
  const HistogramVec h = compute_histogram(Raster(8, 8, 3, 128));
  ASSERT_EQ(h.bins.size(), 768u);
  for (int c = 0; c < 3; ++c) {
    for (int b = 0; b < 256; ++b) EXPECT_EQ(h.bins[static_cast<std::size_t>(c * 256 + b)], b == 128 ? 1.0 : 0.0);
  }
}

TEST(Histogram, MatchesDirectCount) {
  const Raster img = random_raster(97, 61, 3, 11);
  const HistogramVec h = compute_histogram(img);
  std::vector<double> count(768, 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) count[static_cast<std::size_t>(c * 256 + img.at(x, y, c))] += 1.0;
  for (std::size_t i = 0; i < count.size(); ++i) EXPECT_DOUBLE_EQ(h.bins[i], count[i] / (97.0 * 61.0));
}

TEST(Histogram, MirrorIsIdentical) {
  const Raster img = random_raster(40, 30, 3, 12);
  Raster mirror = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) mirror.at(img.width - 1 - x, y, c) = img.at(x, y, c);
  EXPECT_EQ(compute_histogram(img), compute_histogram(mirror));
}

TEST(Distance, MetricProperties) {
  std::mt19937 rng(21);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_histogram(rng), b = random_histogram(rng), c = random_histogram(rng);
    EXPECT_EQ(histogram_distance(a, a), 0.0);
    EXPECT_EQ(histogram_distance(a, b), histogram_distance(b, a));
    EXPECT_LE(histogram_distance(a, c), histogram_distance(a, b) + histogram_distance(b, c) + 1e-15);
  }
  EXPECT_THROW(histogram_distance(HistogramVec{1, std::vector<double>(256)}, HistogramVec{3, std::vector<double>(768)}),
               Error);
}

TEST(Duplicate, StrictThreshold) {
  std::mt19937 rng(22);
  const auto a = random_histogram(rng), b = random_histogram(rng);
  const double d = histogram_distance(a, b);
  const std::vector<HistogramVec> ring{b};
  EXPECT_FALSE(is_duplicate(a, ring, d));
  EXPECT_TRUE(is_duplicate(a, ring, std::nextafter(d, 1.0)));
  EXPECT_FALSE(is_duplicate(a, std::span<const HistogramVec>{}, 1.0));
  const std::vector<HistogramVec> same{a};
  EXPECT_TRUE(is_duplicate(a, same, 1e-300));
}

TEST(Duplicate, FilterRingKeepsTwentyAndIgnoresRepeats) {
  DuplicateFilter f(0.005);
  for (int i = 0; i < 25; ++i) {
    EXPECT_FALSE(f.check_and_accept(compute_histogram(scene::frame_image(64, 48, i))));
  }
  EXPECT_EQ(f.ring().size(), 20u);
  EXPECT_TRUE(f.check_and_accept(compute_histogram(scene::frame_image(64, 48, 24))));
  EXPECT_EQ(f.ring().size(), 20u);
  // frame 0 has left the ring
  EXPECT_FALSE(f.check_and_accept(compute_histogram(scene::frame_image(64, 48, 0))));
}

TEST(Classify, HotBinsAndIdentity) {
  auto hot = [](int bin) {
    HistogramVec h{1, std::vector<double>(256, 0.0)};
    h.bins[static_cast<std::size_t>(bin)] = 1.0;
    return h;
  };
  const ReferenceSet refs{{FrameClass::Panning, {hot(10)}}, {FrameClass::Fixed, {hot(100)}},
                          {FrameClass::Transition, {hot(200)}}};
  EXPECT_EQ(classify_histogram(hot(10), refs), FrameClass::Panning);
  EXPECT_EQ(classify_histogram(hot(100), refs), FrameClass::Fixed);
  EXPECT_EQ(classify_frame(Raster(4, 4, 1, 200), refs), FrameClass::Transition);
  ReferenceSet missing = refs;
  missing.erase(FrameClass::Transition);
  EXPECT_THROW(classify_histogram(hot(10), missing), Error);
}

TEST(Classify, MatchesBruteForceScan) {
  std::mt19937 rng(23);
  ReferenceSet refs;
  for (auto c : {FrameClass::Panning, FrameClass::Fixed, FrameClass::Transition})
    for (int i = 0; i < 4; ++i) refs[c].push_back(random_histogram(rng));
  for (int q = 0; q < 50; ++q) {
    const auto h = random_histogram(rng);
    double best = std::numeric_limits<double>::infinity();
    FrameClass expect = FrameClass::Fixed;
    for (const auto& [c, list] : refs)
      for (const auto& r : list)
        if (const double d = histogram_distance(h, r); d < best) best = d, expect = c;
    EXPECT_EQ(classify_histogram(h, refs), expect);
  }
  EXPECT_EQ(frame_class_from_string(to_string(FrameClass::Transition)), FrameClass::Transition);
}

TEST(Localize, SelfMatchAtKnownOffset) {
  const Raster pano = fixtures::textured_panorama(640, 240, 5);
  const Raster q = crop(pano, 120, 40, 160, 120);
  const PanoramaOffset off = localize_in_panorama(q, pano);
  EXPECT_EQ(off.dx, 120);
  EXPECT_EQ(off.dy, 40);
  EXPECT_NEAR(off.score, 1.0, 1e-6);
}

TEST(Localize, NoisyCropStillFound) {
  const Raster pano = fixtures::textured_panorama(640, 240, 5);
  const Raster q = fixtures::add_noise(crop(pano, 120, 40, 160, 120), 5.0, 77);
  const PanoramaOffset off = localize_in_panorama(q, pano);
  EXPECT_EQ(off.dx, 120);
  EXPECT_EQ(off.dy, 40);
  EXPECT_LT(off.score, 1.0);
}

TEST(Localize, FullSizeQueryAndErrors) {
  const Raster pano = fixtures::textured_panorama(200, 100, 6);
  const PanoramaOffset off = localize_in_panorama(pano, pano);
  EXPECT_EQ(off.dx, 0);
  EXPECT_EQ(off.dy, 0);
  EXPECT_THROW(localize_in_panorama(fixtures::textured_panorama(201, 100, 6), pano), Error);
  try {
    localize_in_panorama(Raster(20, 20, 1, 50), pano);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::undefined_correlation);
  }
}

TEST(Localize, ColourQueryAgainstColourPanorama) {
  const Raster gray = fixtures::textured_panorama(300, 150, 8);
  Raster rgb(300, 150, 3);
  for (int y = 0; y < 150; ++y)
    for (int x = 0; x < 300; ++x)
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = gray.at(x, y);
  const PanoramaOffset off = localize_in_panorama(crop(rgb, 33, 21, 90, 60), rgb);
  EXPECT_EQ(off.dx, 33);
  EXPECT_EQ(off.dy, 21);
}

TEST(Localize, FftScoreMapMatchesDirectScores) {
  const Raster pano = fixtures::textured_panorama(180, 90, 9);
  const Raster q = fixtures::add_noise(crop(pano, 50, 20, 40, 30), 20.0, 3);
  const PanoramaMatcher m(pano);
  const auto map = m.score_map(q);
  const int cols = pano.width - q.width + 1, rows = pano.height - q.height + 1;
  ASSERT_EQ(map.size(), static_cast<std::size_t>(cols * rows));
  for (int dy = 0; dy < rows; dy += 3)
    for (int dx = 0; dx < cols; dx += 3)
      EXPECT_NEAR(map[static_cast<std::size_t>(dy * cols + dx)], ncc_at(q, pano, dx, dy), 1e-9);
}

TEST(Localize, PyramidAgreesWithExhaustive) {
  const Raster pano = fixtures::textured_panorama(1200, 400, 10);
  const PanoramaMatcher m(pano);
  std::mt19937 rng(10);
  std::uniform_int_distribution<int> ux(0, 1200 - 200), uy(0, 400 - 150);
  LocalizeOptions pyr;
  pyr.mode = SearchMode::Pyramid;
  for (int i = 0; i < 10; ++i) {
    const Raster q = fixtures::add_noise(crop(pano, ux(rng), uy(rng), 200, 150), 5.0, static_cast<unsigned>(i));
    const PanoramaOffset a = m.localize(q), b = m.localize(q, pyr);
    EXPECT_EQ(a.dx, b.dx);
    EXPECT_EQ(a.dy, b.dy);
  }
}

TEST(Offsets, ShiftAndInverse) {
  const PanoramaOffset off{120, 40, 1.0};
  EXPECT_EQ(query_to_panorama({0, 0}, off), (PixelPoint{120, 40}));
  EXPECT_EQ(query_to_panorama({3.5, 2.25}, PanoramaOffset{}), (PixelPoint{3.5, 2.25}));
  const PixelPoint p{17.25, 9.5};
  EXPECT_EQ(panorama_to_query(query_to_panorama(p, off), off), p);
}
