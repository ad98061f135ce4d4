#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aisfuse/types.hpp"

namespace aisfuse {

/// 8-bit image, row-major, channels interleaved (RGB for colour).
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;
  TimestampMs timestamp = 0;
  std::string camera_id;

  Raster() = default;
  Raster(int w, int h, int c, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                    static_cast<std::size_t>(channels) +
                static_cast<std::size_t>(c)];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                    static_cast<std::size_t>(channels) +
                static_cast<std::size_t>(c)];
  }
};

/// Throws Errc::invalid_argument unless width, height > 0, channels is 1 or 3
/// and the buffer size matches.
void validate(const Raster& img);

/// Luma with weights 0.299/0.587/0.114, rounded half up. Single-channel
/// input is returned unchanged.
Raster to_grayscale(const Raster& img);

Raster crop(const Raster& img, int x, int y, int w, int h);

/// Decodes any 8-bit image file OpenCV can read. Alpha is dropped, colour
/// comes back as RGB. Throws Errc::io_error.
Raster load_raster(const std::filesystem::path& path);
void save_raster(const std::filesystem::path& path, const Raster& img);

// -- histograms ---------------------------------------------------------------

/// 256 bins per channel, each channel normalized to sum 1.
struct HistogramVec {
  int channels = 0;
  std::vector<double> bins;
  friend bool operator==(const HistogramVec&, const HistogramVec&) = default;
};

HistogramVec compute_histogram(const Raster& img);

/// Euclidean distance over the concatenated bins. Throws on size mismatch.
double histogram_distance(const HistogramVec& a, const HistogramVec& b);

/// True iff some ring member lies strictly closer than `threshold`.
bool is_duplicate(const HistogramVec& h, std::span<const HistogramVec> ring, double threshold);
bool is_duplicate(const Raster& img, std::span<const HistogramVec> ring, double threshold);

inline constexpr std::size_t kDuplicateRingSize = 20;
inline constexpr double kDefaultDuplicateThreshold = 0.005;

/// Keeps the histograms of the most recent accepted frames of one camera.
class DuplicateFilter {
 public:
  explicit DuplicateFilter(double threshold = kDefaultDuplicateThreshold,
                           std::size_t capacity = kDuplicateRingSize)
      : threshold_(threshold), capacity_(capacity) {}

  /// Returns true for a duplicate (the ring is left untouched); otherwise the
  /// histogram is accepted into the ring.
  bool check_and_accept(const HistogramVec& h);

  std::span<const HistogramVec> ring() const { return {ring_.data(), ring_.size()}; }
  double threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
  std::size_t capacity_;
  std::vector<HistogramVec> ring_;  // oldest first
};

// -- classification -------------------------------------------------------------

enum class FrameClass { Panning, Fixed, Transition };

const char* to_string(FrameClass c);
FrameClass frame_class_from_string(std::string_view s);

using ReferenceSet = std::map<FrameClass, std::vector<HistogramVec>>;

/// Class of the nearest reference histogram. Throws Errc::config_error when a
/// class has no references.
FrameClass classify_histogram(const HistogramVec& h, const ReferenceSet& references);
FrameClass classify_frame(const Raster& img, const ReferenceSet& references);

// -- panorama localization ---------------------------------------------------------

/// Placement of a query image inside a panorama: the query's top-left pixel
/// lands on (dx, dy).
struct PanoramaOffset {
  int dx = 0;
  int dy = 0;
  double score = 0.0;  // zero-mean normalized cross-correlation
};

enum class SearchMode {
  Exhaustive,  // every placement at full resolution
  Pyramid,     // coarse search, then +-refine_radius per level
};

struct LocalizeOptions {
  SearchMode mode = SearchMode::Exhaustive;
  int refine_radius = 2;
  int min_level_size = 16;    // smallest query side allowed at the coarsest level
  int max_levels = 4;         // pyramid levels above full resolution
  int coarse_candidates = 8;  // local maxima carried down from the coarsest level
};

/// Zero-mean NCC of a grayscale query placed at (dx, dy), computed directly.
/// Flat windows score 0.
double ncc_at(const Raster& query_gray, const Raster& pano_gray, int dx, int dy);

/// Panorama with precomputed spectra and window statistics, reusable across
/// queries. Thread-safe for concurrent localize() calls.
class PanoramaMatcher {
 public:
  explicit PanoramaMatcher(const Raster& panorama);
  ~PanoramaMatcher();
  PanoramaMatcher(PanoramaMatcher&&) noexcept;
  PanoramaMatcher& operator=(PanoramaMatcher&&) noexcept;

  /// Best placement; ties go to the smallest (dy, dx). Throws
  /// Errc::invalid_argument if the query is larger than the panorama and
  /// Errc::undefined_correlation for a flat query.
  PanoramaOffset localize(const Raster& query, const LocalizeOptions& options = {}) const;

  /// Scores of every valid placement, row-major over (dy, dx).
  std::vector<double> score_map(const Raster& query_gray) const;

  int width() const noexcept;
  int height() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

PanoramaOffset localize_in_panorama(const Raster& query, const Raster& panorama,
                                    const LocalizeOptions& options = {});

inline PixelPoint query_to_panorama(const PixelPoint& p, const PanoramaOffset& off) {
  return {p.x + off.dx, p.y + off.dy};
}

inline PixelPoint panorama_to_query(const PixelPoint& p, const PanoramaOffset& off) {
  return {p.x - off.dx, p.y - off.dy};
}

}  // namespace aisfuse
