#include "aisfuse/frames.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include <fftw3.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "aisfuse/error.hpp"

namespace aisfuse {

Raster::Raster(int w, int h, int c, std::uint8_t fill)
    : width(w),
      height(h),
      channels(c),
      data(static_cast<std::size_t>(std::max(w, 0)) * static_cast<std::size_t>(std::max(h, 0)) *
               static_cast<std::size_t>(std::max(c, 0)),
           fill) {}

void validate(const Raster& img) {
  if (img.width <= 0 || img.height <= 0) throw Error(Errc::invalid_argument, "raster has zero area");
  if (img.channels != 1 && img.channels != 3) {
    throw Error(Errc::invalid_argument, "raster must have 1 or 3 channels");
  }
  if (img.data.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) *
                             static_cast<std::size_t>(img.channels)) {
    throw Error(Errc::invalid_argument, "raster buffer size does not match its dimensions");
  }
}

Raster to_grayscale(const Raster& img) {
  validate(img);
  if (img.channels == 1) return img;
  Raster out(img.width, img.height, 1);
  out.timestamp = img.timestamp;
  out.camera_id = img.camera_id;
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned r = img.data[3 * i], g = img.data[3 * i + 1], b = img.data[3 * i + 2];
    out.data[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return out;
}

Raster crop(const Raster& img, int x, int y, int w, int h) {
  validate(img);
  if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > img.width || y + h > img.height) {
    throw Error(Errc::invalid_argument, "crop outside the raster");
  }
  Raster out(w, h, img.channels);
  out.timestamp = img.timestamp;
  out.camera_id = img.camera_id;
  const std::size_t row = static_cast<std::size_t>(w) * static_cast<std::size_t>(img.channels);
  for (int r = 0; r < h; ++r) {
    const auto* src = img.data.data() + ((static_cast<std::size_t>(y + r) * static_cast<std::size_t>(img.width) +
                                          static_cast<std::size_t>(x)) *
                                         static_cast<std::size_t>(img.channels));
    std::copy(src, src + row, out.data.begin() + static_cast<std::ptrdiff_t>(row * static_cast<std::size_t>(r)));
  }
  return out;
}

Raster load_raster(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw Error(Errc::io_error, "cannot decode image " + path.string());
  if (m.depth() != CV_8U) {
    cv::Mat tmp;
    m.convertTo(tmp, CV_8U, m.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
    m = tmp;
  }
  cv::Mat rgb;
  switch (m.channels()) {
    case 1: rgb = m; break;
    case 3: cv::cvtColor(m, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(m, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw Error(Errc::io_error, "unsupported channel count in " + path.string());
  }
  Raster out(rgb.cols, rgb.rows, rgb.channels());
  const std::size_t row = static_cast<std::size_t>(rgb.cols) * static_cast<std::size_t>(rgb.channels());
  for (int r = 0; r < rgb.rows; ++r) {
    std::copy(rgb.ptr<std::uint8_t>(r), rgb.ptr<std::uint8_t>(r) + row,
              out.data.begin() + static_cast<std::ptrdiff_t>(row * static_cast<std::size_t>(r)));
  }
  return out;
}

void save_raster(const std::filesystem::path& path, const Raster& img) {
  validate(img);
  cv::Mat m(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3,
            const_cast<std::uint8_t*>(img.data.data()));
  cv::Mat bgr;
  if (img.channels == 3) {
    cv::cvtColor(m, bgr, cv::COLOR_RGB2BGR);
  } else {
    bgr = m;
  }
  if (!cv::imwrite(path.string(), bgr)) throw Error(Errc::io_error, "cannot write " + path.string());
}

// -- histograms ---------------------------------------------------------------

HistogramVec compute_histogram(const Raster& img) {
  validate(img);
  HistogramVec h;
  h.channels = img.channels;
  h.bins.assign(256 * static_cast<std::size_t>(img.channels), 0.0);
  std::vector<std::uint64_t> counts(h.bins.size(), 0);
  const auto ch = static_cast<std::size_t>(img.channels);
  for (std::size_t i = 0; i < img.data.size(); ++i) ++counts[(i % ch) * 256 + img.data[i]];
  const double n = static_cast<double>(img.width) * static_cast<double>(img.height);
  for (std::size_t i = 0; i < counts.size(); ++i) h.bins[i] = static_cast<double>(counts[i]) / n;
  return h;
}

double histogram_distance(const HistogramVec& a, const HistogramVec& b) {
  if (a.bins.size() != b.bins.size()) {
    throw Error(Errc::invalid_argument, "histogram dimensionality mismatch");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    const double d = a.bins[i] - b.bins[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

bool is_duplicate(const HistogramVec& h, std::span<const HistogramVec> ring, double threshold) {
  return std::any_of(ring.begin(), ring.end(), [&](const HistogramVec& r) {
    return r.bins.size() == h.bins.size() && histogram_distance(h, r) < threshold;
  });
}

bool is_duplicate(const Raster& img, std::span<const HistogramVec> ring, double threshold) {
  return is_duplicate(compute_histogram(img), ring, threshold);
}

bool DuplicateFilter::check_and_accept(const HistogramVec& h) {
  if (is_duplicate(h, ring(), threshold_)) return true;
  ring_.push_back(h);
  if (ring_.size() > capacity_) ring_.erase(ring_.begin());
  return false;
}

const char* to_string(FrameClass c) {
  switch (c) {
    case FrameClass::Panning: return "panning";
    case FrameClass::Fixed: return "fixed";
    case FrameClass::Transition: return "transition";
  }
  return "?";
}

FrameClass frame_class_from_string(std::string_view s) {
  if (s == "panning") return FrameClass::Panning;
  if (s == "fixed") return FrameClass::Fixed;
  if (s == "transition") return FrameClass::Transition;
  throw Error(Errc::parse_error, "unknown frame class '" + std::string(s) + "'");
}

FrameClass classify_histogram(const HistogramVec& h, const ReferenceSet& references) {
  for (auto c : {FrameClass::Panning, FrameClass::Fixed, FrameClass::Transition}) {
    const auto it = references.find(c);
    if (it == references.end() || it->second.empty()) {
      throw Error(Errc::config_error, std::string("no reference histograms for class ") + to_string(c));
    }
  }
  FrameClass best = FrameClass::Panning;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [cls, refs] : references) {
    for (const auto& r : refs) {
      const double d = histogram_distance(h, r);
      if (d < best_d) {
        best_d = d;
        best = cls;
      }
    }
  }
  return best;
}

FrameClass classify_frame(const Raster& img, const ReferenceSet& references) {
  return classify_histogram(compute_histogram(img), references);
}

// -- NCC ------------------------------------------------------------------------

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int good_fft_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

// Summed-area tables of values and squared values, (w+1) x (h+1).
struct Integral {
  int w = 0, h = 0;
  std::vector<std::int64_t> sum, sq;

  explicit Integral(const Raster& g) : w(g.width), h(g.height) {
    const std::size_t stride = static_cast<std::size_t>(w) + 1;
    sum.assign(stride * (static_cast<std::size_t>(h) + 1), 0);
    sq.assign(sum.size(), 0);
    for (int y = 0; y < h; ++y) {
      std::int64_t rs = 0, rq = 0;
      for (int x = 0; x < w; ++x) {
        const std::int64_t v = g.at(x, y);
        rs += v;
        rq += v * v;
        const std::size_t i = (static_cast<std::size_t>(y) + 1) * stride + static_cast<std::size_t>(x) + 1;
        sum[i] = sum[i - stride] + rs;
        sq[i] = sq[i - stride] + rq;
      }
    }
  }

  template <typename Table>
  static std::int64_t box(const Table& t, std::size_t stride, int x, int y, int bw, int bh) {
    const auto at = [&](int xx, int yy) {
      return t[static_cast<std::size_t>(yy) * stride + static_cast<std::size_t>(xx)];
    };
    return at(x + bw, y + bh) - at(x, y + bh) - at(x + bw, y) + at(x, y);
  }
  std::int64_t box_sum(int x, int y, int bw, int bh) const {
    return box(sum, static_cast<std::size_t>(w) + 1, x, y, bw, bh);
  }
  std::int64_t box_sq(int x, int y, int bw, int bh) const {
    return box(sq, static_cast<std::size_t>(w) + 1, x, y, bw, bh);
  }
};

struct QueryStats {
  std::int64_t n = 0;
  std::int64_t sum = 0;
  std::int64_t var_n = 0;  // n * sum(q^2) - sum(q)^2
};

QueryStats query_stats(const Raster& q) {
  QueryStats s;
  std::int64_t sq = 0;
  for (auto v : q.data) {
    s.sum += v;
    sq += static_cast<std::int64_t>(v) * v;
  }
  s.n = static_cast<std::int64_t>(q.data.size());
  s.var_n = s.n * sq - s.sum * s.sum;
  return s;
}

double ncc_from_sums(std::int64_t cross_n, std::int64_t q_var_n, std::int64_t w_var_n) {
  if (w_var_n <= 0 || q_var_n <= 0) return 0.0;
  const long double den = std::sqrt(static_cast<long double>(q_var_n) * static_cast<long double>(w_var_n));
  const double s = static_cast<double>(static_cast<long double>(cross_n) / den);
  return std::clamp(s, -1.0, 1.0);
}

// Direct score using precomputed query stats and panorama integrals.
double direct_score(const Raster& q, const QueryStats& qs, const Raster& pano, const Integral& integ, int dx,
                    int dy) {
  std::int64_t dot = 0;
  for (int y = 0; y < q.height; ++y) {
    const std::uint8_t* qr = &q.data[static_cast<std::size_t>(y) * static_cast<std::size_t>(q.width)];
    const std::uint8_t* pr = &pano.data[(static_cast<std::size_t>(dy + y)) * static_cast<std::size_t>(pano.width) +
                                        static_cast<std::size_t>(dx)];
    std::int64_t row = 0;
    for (int x = 0; x < q.width; ++x) row += static_cast<std::int64_t>(qr[x]) * pr[x];
    dot += row;
  }
  const std::int64_t ws = integ.box_sum(dx, dy, q.width, q.height);
  const std::int64_t wq = integ.box_sq(dx, dy, q.width, q.height);
  const std::int64_t w_var_n = qs.n * wq - ws * ws;
  return ncc_from_sums(qs.n * dot - qs.sum * ws, qs.var_n, w_var_n);
}

Raster downsample(const Raster& g) {
  Raster out(g.width / 2, g.height / 2, 1);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const unsigned s = g.at(2 * x, 2 * y) + g.at(2 * x + 1, 2 * y) + g.at(2 * x, 2 * y + 1) +
                         g.at(2 * x + 1, 2 * y + 1);
      out.at(x, y) = static_cast<std::uint8_t>((s + 2) / 4);
    }
  }
  return out;
}

struct Level {
  Raster gray;
  Integral integral;
  explicit Level(Raster g) : gray(std::move(g)), integral(gray) {}
};

void check_query(const Raster& q, int pano_w, int pano_h) {
  if (q.width > pano_w || q.height > pano_h) {
    throw Error(Errc::invalid_argument, "query is larger than the panorama");
  }
}

struct Candidate {
  int dx, dy;
  double score;
};

// Higher score first; equal scores resolved by smallest (dy, dx).
bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.dy != b.dy ? a.dy < b.dy : a.dx < b.dx;
}

}  // namespace

double ncc_at(const Raster& query_gray, const Raster& pano_gray, int dx, int dy) {
  validate(query_gray);
  validate(pano_gray);
  if (query_gray.channels != 1 || pano_gray.channels != 1) {
    throw Error(Errc::invalid_argument, "ncc_at expects grayscale rasters");
  }
  if (dx < 0 || dy < 0 || dx + query_gray.width > pano_gray.width || dy + query_gray.height > pano_gray.height) {
    throw Error(Errc::invalid_argument, "placement outside the panorama");
  }
  std::int64_t sq = 0, sp = 0, sqq = 0, spp = 0, sqp = 0;
  for (int y = 0; y < query_gray.height; ++y) {
    for (int x = 0; x < query_gray.width; ++x) {
      const std::int64_t a = query_gray.at(x, y);
      const std::int64_t b = pano_gray.at(dx + x, dy + y);
      sq += a, sp += b, sqq += a * a, spp += b * b, sqp += a * b;
    }
  }
  const std::int64_t n = static_cast<std::int64_t>(query_gray.width) * query_gray.height;
  return ncc_from_sums(n * sqp - sq * sp, n * sqq - sq * sq, n * spp - sp * sp);
}

struct PanoramaMatcher::Impl {
  std::vector<Level> levels;  // [0] is full resolution
  int fft_w = 0, fft_h = 0;
  double* real_buf = nullptr;
  fftw_complex* pano_spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  std::size_t spectrum_size() const {
    return static_cast<std::size_t>(fft_h) * (static_cast<std::size_t>(fft_w) / 2 + 1);
  }
  std::size_t real_size() const { return static_cast<std::size_t>(fft_h) * static_cast<std::size_t>(fft_w); }

  ~Impl() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real_buf);
    fftw_free(pano_spectrum);
  }

  const Raster& pano() const { return levels.front().gray; }
  const Integral& integral() const { return levels.front().integral; }
};

PanoramaMatcher::PanoramaMatcher(const Raster& panorama) : impl_(std::make_unique<Impl>()) {
  impl_->levels.emplace_back(to_grayscale(panorama));
  constexpr int kMaxPyramid = 8;
  for (int i = 0; i < kMaxPyramid; ++i) {
    const Raster& g = impl_->levels.back().gray;
    if (g.width < 4 || g.height < 4) break;
    impl_->levels.emplace_back(downsample(g));
  }

  const Raster& g = impl_->pano();
  impl_->fft_w = good_fft_size(g.width);
  impl_->fft_h = good_fft_size(g.height);
  impl_->real_buf = fftw_alloc_real(impl_->real_size());
  impl_->pano_spectrum = fftw_alloc_complex(impl_->spectrum_size());
  {
    std::lock_guard lock(fftw_planner_mutex());
    impl_->forward =
        fftw_plan_dft_r2c_2d(impl_->fft_h, impl_->fft_w, impl_->real_buf, impl_->pano_spectrum, FFTW_ESTIMATE);
    impl_->backward =
        fftw_plan_dft_c2r_2d(impl_->fft_h, impl_->fft_w, impl_->pano_spectrum, impl_->real_buf, FFTW_ESTIMATE);
  }
  std::fill(impl_->real_buf, impl_->real_buf + impl_->real_size(), 0.0);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      impl_->real_buf[static_cast<std::size_t>(y) * static_cast<std::size_t>(impl_->fft_w) +
                      static_cast<std::size_t>(x)] = g.at(x, y);
  fftw_execute_dft_r2c(impl_->forward, impl_->real_buf, impl_->pano_spectrum);
}

PanoramaMatcher::~PanoramaMatcher() = default;
PanoramaMatcher::PanoramaMatcher(PanoramaMatcher&&) noexcept = default;
PanoramaMatcher& PanoramaMatcher::operator=(PanoramaMatcher&&) noexcept = default;

int PanoramaMatcher::width() const noexcept { return impl_->pano().width; }
int PanoramaMatcher::height() const noexcept { return impl_->pano().height; }

std::vector<double> PanoramaMatcher::score_map(const Raster& query_gray) const {
  validate(query_gray);
  const Raster& pano = impl_->pano();
  check_query(query_gray, pano.width, pano.height);
  const QueryStats qs = query_stats(query_gray);
  if (qs.var_n <= 0) throw Error(Errc::undefined_correlation, "query image has zero variance");

  const std::size_t fw = static_cast<std::size_t>(impl_->fft_w);
  double* buf = fftw_alloc_real(impl_->real_size());
  fftw_complex* spec = fftw_alloc_complex(impl_->spectrum_size());
  std::fill(buf, buf + impl_->real_size(), 0.0);
  const double mean = static_cast<double>(qs.sum) / static_cast<double>(qs.n);
  for (int y = 0; y < query_gray.height; ++y)
    for (int x = 0; x < query_gray.width; ++x)
      buf[static_cast<std::size_t>(y) * fw + static_cast<std::size_t>(x)] = query_gray.at(x, y) - mean;
  fftw_execute_dft_r2c(impl_->forward, buf, spec);
  // correlation: conj(Q) * P
  for (std::size_t i = 0; i < impl_->spectrum_size(); ++i) {
    const double qr = spec[i][0], qi = -spec[i][1];
    const double pr = impl_->pano_spectrum[i][0], pi = impl_->pano_spectrum[i][1];
    spec[i][0] = qr * pr - qi * pi;
    spec[i][1] = qr * pi + qi * pr;
  }
  fftw_execute_dft_c2r(impl_->backward, spec, buf);

  const int out_w = pano.width - query_gray.width + 1;
  const int out_h = pano.height - query_gray.height + 1;
  const double scale = 1.0 / static_cast<double>(impl_->real_size());
  const long double q_var = static_cast<long double>(qs.var_n);
  const auto& integ = impl_->integral();
  std::vector<double> scores(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(out_h));
  for (int dy = 0; dy < out_h; ++dy) {
    for (int dx = 0; dx < out_w; ++dx) {
      const std::int64_t ws = integ.box_sum(dx, dy, query_gray.width, query_gray.height);
      const std::int64_t wq = integ.box_sq(dx, dy, query_gray.width, query_gray.height);
      const std::int64_t w_var_n = qs.n * wq - ws * ws;
      double s = 0.0;
      if (w_var_n > 0) {
        // sum((q - mean) * p) scaled to the n * cross convention
        const double cross = buf[static_cast<std::size_t>(dy) * fw + static_cast<std::size_t>(dx)] * scale;
        s = static_cast<double>(static_cast<long double>(cross) * qs.n /
                                std::sqrt(q_var * static_cast<long double>(w_var_n)));
        s = std::clamp(s, -1.0, 1.0);
      }
      scores[static_cast<std::size_t>(dy) * static_cast<std::size_t>(out_w) + static_cast<std::size_t>(dx)] = s;
    }
  }
  fftw_free(buf);
  fftw_free(spec);
  return scores;
}

PanoramaOffset PanoramaMatcher::localize(const Raster& query, const LocalizeOptions& options) const {
  const Raster q = to_grayscale(query);
  const Raster& pano = impl_->pano();
  check_query(q, pano.width, pano.height);
  const QueryStats qs = query_stats(q);
  if (qs.var_n <= 0) throw Error(Errc::undefined_correlation, "query image has zero variance");
  if (options.mode == SearchMode::Exhaustive) {
    const int out_w = pano.width - q.width + 1;
    const int out_h = pano.height - q.height + 1;
    const std::vector<double> scores = score_map(q);
    double best = -std::numeric_limits<double>::infinity();
    for (double s : scores) best = std::max(best, s);
    // Spectral scores carry ~1e-12 rounding; every placement within a small
    // band of the maximum is rescored exactly before the tie-break.
    constexpr double kBand = 1e-9;
    Candidate winner{0, 0, -std::numeric_limits<double>::infinity()};
    for (int dy = 0; dy < out_h; ++dy) {
      for (int dx = 0; dx < out_w; ++dx) {
        if (scores[static_cast<std::size_t>(dy) * static_cast<std::size_t>(out_w) + static_cast<std::size_t>(dx)] <
            best - kBand)
          continue;
        const Candidate c{dx, dy, direct_score(q, qs, pano, impl_->integral(), dx, dy)};
        if (better(c, winner)) winner = c;
      }
    }
    return {winner.dx, winner.dy, winner.score};
  }

  // Coarse-to-fine.
  std::vector<Raster> qpyr{q};
  std::size_t top = 0;
  while (top + 1 < impl_->levels.size() && static_cast<int>(top) < options.max_levels) {
    const Raster& cur = qpyr.back();
    if (cur.width / 2 < options.min_level_size || cur.height / 2 < options.min_level_size) break;
    qpyr.push_back(downsample(cur));
    ++top;
  }

  const auto search = [&](std::size_t lvl, int x0, int x1, int y0, int y1) {
    const Raster& lq = qpyr[lvl];
    const Level& lp = impl_->levels[lvl];
    const QueryStats lqs = query_stats(lq);
    x0 = std::max(x0, 0), y0 = std::max(y0, 0);
    x1 = std::min(x1, lp.gray.width - lq.width), y1 = std::min(y1, lp.gray.height - lq.height);
    Candidate best{x0, y0, -std::numeric_limits<double>::infinity()};
    for (int dy = y0; dy <= y1; ++dy)
      for (int dx = x0; dx <= x1; ++dx) {
        const Candidate c{dx, dy, direct_score(lq, lqs, lp.gray, lp.integral, dx, dy)};
        if (better(c, best)) best = c;
      }
    return best;
  };

  std::vector<Candidate> seeds;
  {
    const Raster& lq = qpyr[top];
    const Level& lp = impl_->levels[top];
    const QueryStats lqs = query_stats(lq);
    const int cw = lp.gray.width - lq.width + 1;
    const int ch = lp.gray.height - lq.height + 1;
    if (cw <= 0 || ch <= 0 || lqs.var_n <= 0) {
      seeds.push_back({0, 0, 0.0});
      top = 0;
    } else {
      std::vector<double> coarse(static_cast<std::size_t>(cw) * static_cast<std::size_t>(ch));
      for (int dy = 0; dy < ch; ++dy)
        for (int dx = 0; dx < cw; ++dx)
          coarse[static_cast<std::size_t>(dy) * static_cast<std::size_t>(cw) + static_cast<std::size_t>(dx)] =
              direct_score(lq, lqs, lp.gray, lp.integral, dx, dy);
      const auto at = [&](int x, int y) {
        return coarse[static_cast<std::size_t>(y) * static_cast<std::size_t>(cw) + static_cast<std::size_t>(x)];
      };
      for (int dy = 0; dy < ch; ++dy) {
        for (int dx = 0; dx < cw; ++dx) {
          const double s = at(dx, dy);
          bool peak = true;
          for (int ny = std::max(dy - 1, 0); ny <= std::min(dy + 1, ch - 1) && peak; ++ny)
            for (int nx = std::max(dx - 1, 0); nx <= std::min(dx + 1, cw - 1); ++nx)
              if (at(nx, ny) > s) {
                peak = false;
                break;
              }
          if (peak) seeds.push_back({dx, dy, s});
        }
      }
      std::sort(seeds.begin(), seeds.end(), better);
      if (seeds.size() > static_cast<std::size_t>(std::max(options.coarse_candidates, 1)))
        seeds.resize(static_cast<std::size_t>(std::max(options.coarse_candidates, 1)));
    }
  }

  const int r = std::max(options.refine_radius, 0);
  Candidate winner{0, 0, -std::numeric_limits<double>::infinity()};
  for (Candidate c : seeds) {
    for (std::size_t lvl = top; lvl-- > 0;) {
      c = search(lvl, 2 * c.dx - r, 2 * c.dx + r, 2 * c.dy - r, 2 * c.dy + r);
    }
    if (top == 0) c = search(0, c.dx - r, c.dx + r, c.dy - r, c.dy + r);
    if (better(c, winner)) winner = c;
  }
  return {winner.dx, winner.dy, winner.score};
}

PanoramaOffset localize_in_panorama(const Raster& query, const Raster& panorama, const LocalizeOptions& options) {
  return PanoramaMatcher(panorama).localize(query, options);
}

}  // namespace aisfuse
