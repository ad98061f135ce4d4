#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "aisfuse/types.hpp"

namespace aisfuse {

/// A hand-picked keypoint: its pixel position and its map position.
struct Correspondence {
  PixelPoint image;
  GeoPoint world;
  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Scales `m` to unit Frobenius norm, rounds every element to 40 significant
/// bits and fixes the sign so that h33 >= 0 (or, if h33 is zero, the first
/// non-zero element is positive).
///
/// The rounding is what makes the result exactly scale invariant: for any
/// non-zero lambda, canonicalize(lambda * m) is bit-identical to
/// canonicalize(m), since the noise introduced by the rescale (a few ulps) is
/// far below half a rounding step. Being relative, the rounding costs about
/// 1e-12 of each element and never matters for pixel or degree accuracy.
Eigen::Matrix3d canonicalize(const Eigen::Matrix3d& m);

/// Projective map from image pixels to map coordinates:
///
///   [w*lat, w*lon, w]^T = H [x, y, 1]^T
///
/// Stored in canonical form; the inverse (map to image) is computed once at
/// construction. Immutable and cheap to copy.
class Homography {
 public:
  /// Throws Errc::not_invertible if the matrix is singular.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity();

  const Eigen::Matrix3d& matrix() const noexcept { return h_; }
  /// Inverse of matrix(), scaled to unit Frobenius norm.
  const Eigen::Matrix3d& inverse_matrix() const noexcept { return inv_; }

  double operator()(int row, int col) const { return h_(row, col); }

  friend bool operator==(const Homography& a, const Homography& b) { return a.h_ == b.h_; }

 private:
  Eigen::Matrix3d h_;
  Eigen::Matrix3d inv_;
};

/// |w| below this is treated as a point at infinity.
inline constexpr double kMinHomogeneousScale = 1e-12;

struct HomographyFitOptions {
  /// Iteratively drops the keypoint with the largest reprojection error while
  /// it exceeds `outlier_threshold_px` and more than `min_keypoints` remain.
  bool reject_outliers = false;
  double outlier_threshold_px = 50.0;
  std::size_t min_keypoints = 6;
};

struct HomographyFit {
  Homography homography;
  std::vector<std::size_t> rejected;  // indices into the input, in removal order
};

/// Normalized direct linear transform over all correspondences.
///
/// Both point sets are conditioned (centroid at the origin, mean distance
/// sqrt(2)), the homogeneous system is solved by SVD and the conditioning is
/// undone. Throws Errc::invalid_argument for fewer than 4 correspondences and
/// Errc::degenerate_configuration when the design matrix has a null space of
/// dimension > 1 (e.g. collinear image points) or the solution is singular.
Homography estimate_homography(std::span<const Correspondence> corrs);

HomographyFit fit_homography(std::span<const Correspondence> corrs,
                             const HomographyFitOptions& options = {});

/// Image to map. Throws Errc::point_at_infinity when |w| is below tolerance.
GeoPoint apply_homography(const Homography& h, const PixelPoint& p);

/// Map to image through the inverse matrix.
PixelPoint project_world_to_image(const Homography& h, const GeoPoint& g);

struct KeypointError {
  std::size_t index = 0;
  double error = 0.0;  // pixels
  bool failed = false;  // projection went to infinity; excluded from the stats
};

/// Summary row in the layout of the per-camera transformation error table.
struct ReprojectionReport {
  double max_error = 0.0;
  double min_error = 0.0;
  double mean_error = 0.0;
  double std_dev = 0.0;  // population
  std::size_t keypoint_count = 0;  // keypoints that entered the statistics
  std::size_t failed_count = 0;
  std::vector<KeypointError> keypoints;
};

/// Per-keypoint pixel distance between the observed image position and the
/// projection of its world position.
ReprojectionReport reprojection_report(const Homography& h, std::span<const Correspondence> corrs);

}  // namespace aisfuse
