#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aisfuse/ais.hpp"
#include "aisfuse/frames.hpp"
#include "aisfuse/projective.hpp"
#include "aisfuse/types.hpp"

namespace aisfuse {

using ImageId = std::int64_t;

/// Bounding box in pixels, top-left origin.
struct Detection {
  ImageId image_id = 0;
  std::size_t index = 0;  // position within its image's detection list
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  bool clamped = false;

  PixelPoint center() const { return {x + w / 2.0, y + h / 2.0}; }
  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Throws Errc::invalid_argument unless w and h are positive and finite.
Detection make_detection(ImageId image_id, std::size_t index, double x, double y, double w, double h);

/// Clips the box to [0, width] x [0, height] and sets `clamped` if anything
/// changed. Throws if nothing of the box remains.
void clamp_to_image(Detection& d, int width, int height);

/// Simple polygon over (lat, lon), implicitly closed.
struct RoiPolygon {
  std::vector<GeoPoint> vertices;
  friend bool operator==(const RoiPolygon&, const RoiPolygon&) = default;
};

/// Ray-casting parity test in the (lon, lat) plane; the boundary is inside.
/// Throws Errc::degenerate_configuration for fewer than 3 distinct vertices.
bool point_in_roi(const GeoPoint& p, const RoiPolygon& roi);

inline constexpr double kDefaultWindowSeconds = 30.0;

struct Candidate {
  VesselId vessel_id = 0;
  PositionEstimate estimate;
};

/// Vessels with a fix inside [t - window, t + window] whose estimated
/// position lies in the ROI, ordered by vessel id.
std::vector<Candidate> filter_candidates(const std::map<VesselId, VesselTrack>& tracks, const RoiPolygon& roi,
                                         TimestampMs t, double window_s = kDefaultWindowSeconds);

struct ProjectedCandidate {
  VesselId vessel_id = 0;
  PixelPoint pixel;  // query image coordinates
  bool in_frame = false;
  PositionEstimate estimate;
};

struct Projection {
  std::vector<ProjectedCandidate> points;
  std::size_t dropped = 0;  // candidates that projected to infinity
};

/// World -> image through the inverse of `image_to_world`. With an offset the
/// homography belongs to the panorama and the offset is subtracted to reach
/// query coordinates.
Projection project_candidates(std::span<const Candidate> candidates, const Homography& image_to_world,
                              const std::optional<PanoramaOffset>& offset, int image_width, int image_height);

// -- nearest neighbour -------------------------------------------------------------

/// Static 2-d tree over a point set.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const PixelPoint> points);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  struct Hit {
    std::size_t index = 0;
    double distance = 0.0;
  };

  /// Closest point; among equidistant points the lowest index wins.
  std::optional<Hit> nearest(const PixelPoint& q) const;

  /// Every point within `radius` (inclusive), ordered by index.
  std::vector<Hit> within(const PixelPoint& q, double radius) const;

 private:
  struct Node {
    std::size_t point = 0;
    int axis = 0;
    int left = -1;
    int right = -1;
  };
  int build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth);
  void nearest_rec(int node, const PixelPoint& q, Hit& best, double& best_d2) const;
  void within_rec(int node, const PixelPoint& q, double r2, std::vector<Hit>& out) const;

  std::vector<PixelPoint> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

enum class AssignMode {
  OneToOne,         // globally closest pair first, each side used once
  PaperSequential,  // every point, in input order, takes its nearest box
};

const char* to_string(AssignMode m);
AssignMode assign_mode_from_string(std::string_view s);

inline constexpr double kDefaultMaxDistancePx = 150.0;

struct Pairing {
  std::size_t box = 0;
  std::size_t point = 0;
  double distance = 0.0;
  friend bool operator==(const Pairing&, const Pairing&) = default;
};

/// Pairs ordered by (box, distance, point). In one-to-one mode pairs longer
/// than max_dist are never formed and out-of-frame points are skipped by the
/// caller; paper-sequential mode ignores max_dist.
std::vector<Pairing> nn_assign(std::span<const PixelPoint> boxes, std::span<const PixelPoint> points,
                               AssignMode mode, double max_dist = kDefaultMaxDistancePx);

struct Assignment {
  std::size_t detection = 0;  // index into AssociationResult::detections
  VesselId vessel_id = 0;
  PixelPoint projected;
  double distance = 0.0;
  std::size_t candidate = 0;  // index into AssociationResult::projected
};

struct AssociationResult {
  ImageId image_id = 0;
  std::string camera;
  TimestampMs timestamp = 0;
  std::vector<Detection> detections;
  std::vector<ProjectedCandidate> projected;
  std::vector<Assignment> assignments;
  std::vector<std::size_t> unmatched_candidates;
  std::vector<std::size_t> unmatched_detections;

  /// Closest assignment of a detection, if any.
  const Assignment* best_for(std::size_t detection) const;
};

/// Associates one image. One-to-one mode leaves out-of-frame candidates
/// unassigned; paper-sequential mode offers them to the boxes as well.
AssociationResult associate(ImageId image_id, std::vector<Detection> detections,
                            std::vector<ProjectedCandidate> projected, AssignMode mode,
                            double max_dist = kDefaultMaxDistancePx);

// -- accuracy ------------------------------------------------------------------------

struct AccuracyEntry {
  std::size_t correct = 0;
  std::size_t total_pairs = 0;
  std::optional<double> accuracy;  // percent; absent when total_pairs is 0
};

AccuracyEntry make_accuracy(std::size_t correct, std::size_t total_pairs);

/// "74.79", or "n/a" when undefined.
std::string format_accuracy(const std::optional<double>& percent);

struct AccuracyReport {
  std::map<std::string, AccuracyEntry> per_camera;
  AccuracyEntry total;
  std::size_t unverified = 0;  // assignments without a ground-truth entry
};

/// (image, detection index) -> vessel that truly belongs to the box, or
/// nullopt if the box has no vessel.
using GroundTruth = std::map<std::pair<ImageId, std::size_t>, std::optional<VesselId>>;

/// Every assignment whose detection has a ground-truth entry is a pair; it
/// is correct when the vessel ids agree.
AccuracyReport compute_accuracy(std::span<const AssociationResult> results, const GroundTruth& truth);

}  // namespace aisfuse
