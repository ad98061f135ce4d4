#include "aisfuse/projective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "aisfuse/error.hpp"

namespace aisfuse {
namespace {

constexpr int kSignificantBits = 40;
constexpr double kSingularRatio = 1e-13;
constexpr double kRankTolerance = 1e-9;

// Rounds to kSignificantBits of mantissa; ldexp keeps every step exact.
double snap(double v) {
  if (v == 0.0) return 0.0;
  int e = 0;
  std::frexp(v, &e);
  return std::ldexp(std::round(std::ldexp(v, kSignificantBits - e)), e - kSignificantBits);
}

bool invertible(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) return false;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m);
  const auto& s = svd.singularValues();
  return s(0) > 0.0 && s(2) / s(0) > kSingularRatio;
}

// Translation + isotropic scale taking the points to centroid 0, mean
// distance sqrt(2).
Eigen::Matrix3d conditioning(std::span<const Eigen::Vector2d> pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - c).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw Error(Errc::degenerate_configuration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

Eigen::Vector2d apply_conditioning(const Eigen::Matrix3d& t, const Eigen::Vector2d& p) {
  return {t(0, 0) * p.x() + t(0, 2), t(1, 1) * p.y() + t(1, 2)};
}

}  // namespace

Eigen::Matrix3d canonicalize(const Eigen::Matrix3d& m) {
  const double norm = m.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(Errc::not_invertible, "homography must be finite and non-zero");
  }
  Eigen::Matrix3d out = m / norm;
  for (int i = 0; i < 9; ++i) out.data()[i] = snap(out.data()[i]);
  double sign_ref = out(2, 2);
  if (sign_ref == 0.0) {
    for (int r = 0; r < 3 && sign_ref == 0.0; ++r)
      for (int c = 0; c < 3 && sign_ref == 0.0; ++c) sign_ref = out(r, c);
  }
  if (sign_ref < 0.0) out = -out;
  return out;
}

Homography::Homography(const Eigen::Matrix3d& m) : h_(canonicalize(m)) {
  if (!invertible(h_)) throw Error(Errc::not_invertible, "homography is singular");
  inv_ = h_.inverse();
  inv_ /= inv_.norm();
}

Homography Homography::identity() { return Homography(Eigen::Matrix3d::Identity()); }

Homography estimate_homography(std::span<const Correspondence> corrs) {
  if (corrs.size() < 4) {
    throw Error(Errc::invalid_argument, "homography needs at least 4 correspondences, got " +
                                            std::to_string(corrs.size()));
  }
  const std::size_t n = corrs.size();
  std::vector<Eigen::Vector2d> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = {corrs[i].image.x, corrs[i].image.y};
    dst[i] = {corrs[i].world.lat, corrs[i].world.lon};
    if (!src[i].allFinite() || !dst[i].allFinite()) {
      throw Error(Errc::invalid_argument, "non-finite correspondence");
    }
  }
  const Eigen::Matrix3d t_src = conditioning(src);
  const Eigen::Matrix3d t_dst = conditioning(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d p = apply_conditioning(t_src, src[i]);
    const Eigen::Vector2d q = apply_conditioning(t_dst, dst[i]);
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  // Rank 8 is required for a unique solution; s(7) is the smallest singular
  // value that must stay clear of zero.
  if (s.size() < 8 || !(s(0) > 0.0) || s(7) / s(0) < kRankTolerance) {
    throw Error(Errc::degenerate_configuration,
                "correspondences do not determine a unique homography (collinear points?)");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d denorm = t_dst.inverse() * hn * t_src;
  if (!invertible(denorm / denorm.norm())) {
    throw Error(Errc::degenerate_configuration, "estimated homography is singular");
  }
  return Homography(denorm);
}

HomographyFit fit_homography(std::span<const Correspondence> corrs,
                             const HomographyFitOptions& options) {
  HomographyFit fit{estimate_homography(corrs), {}};
  if (!options.reject_outliers) return fit;

  std::vector<std::size_t> active(corrs.size());
  std::iota(active.begin(), active.end(), std::size_t{0});
  const std::size_t floor = std::max<std::size_t>(options.min_keypoints, 4);
  while (active.size() > floor) {
    std::vector<Correspondence> subset;
    subset.reserve(active.size());
    for (auto i : active) subset.push_back(corrs[i]);
    const ReprojectionReport report = reprojection_report(fit.homography, subset);

    std::size_t worst = active.size();
    double worst_error = options.outlier_threshold_px;
    for (const auto& k : report.keypoints) {
      const double e = k.failed ? std::numeric_limits<double>::infinity() : k.error;
      if (e > worst_error) {
        worst_error = e;
        worst = k.index;
      }
    }
    if (worst == active.size()) break;
    fit.rejected.push_back(active[worst]);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
    subset.erase(subset.begin() + static_cast<std::ptrdiff_t>(worst));
    fit.homography = estimate_homography(subset);
  }
  return fit;
}

GeoPoint apply_homography(const Homography& h, const PixelPoint& p) {
  const Eigen::Vector3d r = h.matrix() * Eigen::Vector3d(p.x, p.y, 1.0);
  if (!(std::abs(r.z()) >= kMinHomogeneousScale)) {
    throw Error(Errc::point_at_infinity, "pixel maps to infinity");
  }
  return {r.x() / r.z(), r.y() / r.z()};
}

PixelPoint project_world_to_image(const Homography& h, const GeoPoint& g) {
  const Eigen::Vector3d r = h.inverse_matrix() * Eigen::Vector3d(g.lat, g.lon, 1.0);
  if (!(std::abs(r.z()) >= kMinHomogeneousScale)) {
    throw Error(Errc::point_at_infinity, "world point maps to infinity in the image");
  }
  return {r.x() / r.z(), r.y() / r.z()};
}

ReprojectionReport reprojection_report(const Homography& h, std::span<const Correspondence> corrs) {
  if (corrs.empty()) throw Error(Errc::invalid_argument, "no correspondences to report on");
  ReprojectionReport report;
  report.keypoints.reserve(corrs.size());
  std::vector<double> errors;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    KeypointError k{i, 0.0, false};
    try {
      const PixelPoint p = project_world_to_image(h, corrs[i].world);
      k.error = std::hypot(p.x - corrs[i].image.x, p.y - corrs[i].image.y);
      if (!std::isfinite(k.error)) k.failed = true;
    } catch (const Error&) {
      k.failed = true;
    }
    if (k.failed) {
      ++report.failed_count;
    } else {
      errors.push_back(k.error);
    }
    report.keypoints.push_back(k);
  }
  report.keypoint_count = errors.size();
  if (errors.empty()) return report;

  const auto [mn, mx] = std::minmax_element(errors.begin(), errors.end());
  report.min_error = *mn;
  report.max_error = *mx;
  const double n = static_cast<double>(errors.size());
  report.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : errors) ss += (e - report.mean_error) * (e - report.mean_error);
  report.std_dev = std::sqrt(ss / n);
  // Summation rounding can push the mean a hair outside [min, max].
  report.mean_error = std::clamp(report.mean_error, report.min_error, report.max_error);
  return report;
}

}  // namespace aisfuse
