#include "aisfuse/association.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <tuple>

#include "aisfuse/error.hpp"

namespace aisfuse {

Detection make_detection(ImageId image_id, std::size_t index, double x, double y, double w, double h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
    throw Error(Errc::invalid_argument, "non-finite bounding box");
  }
  if (w <= 0.0 || h <= 0.0) throw Error(Errc::invalid_argument, "bounding box must have positive size");
  return Detection{image_id, index, x, y, w, h, false};
}

void clamp_to_image(Detection& d, int width, int height) {
  const double x0 = std::clamp(d.x, 0.0, static_cast<double>(width));
  const double y0 = std::clamp(d.y, 0.0, static_cast<double>(height));
  const double x1 = std::clamp(d.x + d.w, 0.0, static_cast<double>(width));
  const double y1 = std::clamp(d.y + d.h, 0.0, static_cast<double>(height));
  if (x1 <= x0 || y1 <= y0) throw Error(Errc::invalid_argument, "bounding box lies outside the image");
  if (x0 != d.x || y0 != d.y || x1 - x0 != d.w || y1 - y0 != d.h) {
    d.x = x0;
    d.y = y0;
    d.w = x1 - x0;
    d.h = y1 - y0;
    d.clamped = true;
  }
}

// -- ROI ---------------------------------------------------------------------------

namespace {

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  constexpr double kEps = 1e-12;
  const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  const double scale = std::max({std::abs(b.lon - a.lon), std::abs(b.lat - a.lat), 1.0});
  if (std::abs(cross) > kEps * scale) return false;
  return p.lon >= std::min(a.lon, b.lon) - kEps && p.lon <= std::max(a.lon, b.lon) + kEps &&
         p.lat >= std::min(a.lat, b.lat) - kEps && p.lat <= std::max(a.lat, b.lat) + kEps;
}

void check_polygon(const RoiPolygon& roi) {
  std::vector<GeoPoint> distinct;
  for (const auto& v : roi.vertices) {
    if (!std::isfinite(v.lat) || !std::isfinite(v.lon)) {
      throw Error(Errc::invalid_argument, "non-finite ROI vertex");
    }
    if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
    if (distinct.size() >= 3) return;
  }
  throw Error(Errc::degenerate_configuration, "ROI needs at least 3 distinct vertices");
}

}  // namespace

bool point_in_roi(const GeoPoint& p, const RoiPolygon& roi) {
  check_polygon(roi);
  const auto& v = roi.vertices;
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if (on_segment(p, v[j], v[i])) return true;
    if ((v[i].lat > p.lat) != (v[j].lat > p.lat)) {
      const double lon_cross = v[j].lon + (p.lat - v[j].lat) * (v[i].lon - v[j].lon) / (v[i].lat - v[j].lat);
      if (p.lon < lon_cross) inside = !inside;
    }
  }
  return inside;
}

std::vector<Candidate> filter_candidates(const std::map<VesselId, VesselTrack>& tracks, const RoiPolygon& roi,
                                         TimestampMs t, double window_s) {
  if (!(window_s > 0.0)) throw Error(Errc::invalid_argument, "time window must be positive");
  check_polygon(roi);
  std::vector<Candidate> out;
  for (const auto& [id, track] : tracks) {
    auto est = interpolate_position(track, t, window_s);
    if (est && point_in_roi(est->position, roi)) out.push_back({id, std::move(*est)});
  }
  return out;
}

Projection project_candidates(std::span<const Candidate> candidates, const Homography& image_to_world,
                              const std::optional<PanoramaOffset>& offset, int image_width, int image_height) {
  Projection out;
  out.points.reserve(candidates.size());
  for (const auto& c : candidates) {
    PixelPoint px;
    try {
      px = project_world_to_image(image_to_world, c.estimate.position);
    } catch (const Error& e) {
      if (e.code() != Errc::point_at_infinity) throw;
      ++out.dropped;
      continue;
    }
    if (offset) px = panorama_to_query(px, *offset);
    const bool in_frame = px.x >= 0.0 && px.y >= 0.0 && px.x < image_width && px.y < image_height;
    out.points.push_back({c.vessel_id, px, in_frame, c.estimate});
  }
  return out;
}

// -- k-d tree ------------------------------------------------------------------------

namespace {

double dist2(const PixelPoint& a, const PixelPoint& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double coord(const PixelPoint& p, int axis) { return axis == 0 ? p.x : p.y; }

}  // namespace

KdTree::KdTree(std::span<const PixelPoint> points) : points_(points.begin(), points.end()) {
  std::vector<std::size_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, idx.size(), 0);
}

int KdTree::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 2;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(mid),
                   idx.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                     const double ca = coord(points_[a], axis), cb = coord(points_[b], axis);
                     return ca != cb ? ca < cb : a < b;
                   });
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[mid], axis, -1, -1});
  const int left = build(idx, lo, mid, depth + 1);
  const int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree::nearest_rec(int node, const PixelPoint& q, Hit& best, double& best_d2) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const double d2 = dist2(points_[n.point], q);
  if (d2 < best_d2 || (d2 == best_d2 && n.point < best.index)) {
    best_d2 = d2;
    best.index = n.point;
  }
  const double delta = coord(q, n.axis) - coord(points_[n.point], n.axis);
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  nearest_rec(near, q, best, best_d2);
  if (delta * delta <= best_d2) nearest_rec(far, q, best, best_d2);
}

std::optional<KdTree::Hit> KdTree::nearest(const PixelPoint& q) const {
  if (root_ < 0) return std::nullopt;
  Hit best{points_.size(), 0.0};
  double best_d2 = std::numeric_limits<double>::infinity();
  nearest_rec(root_, q, best, best_d2);
  best.distance = std::sqrt(best_d2);
  return best;
}

void KdTree::within_rec(int node, const PixelPoint& q, double r2, std::vector<Hit>& out) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const double d2 = dist2(points_[n.point], q);
  if (d2 <= r2) out.push_back({n.point, std::sqrt(d2)});
  const double delta = coord(q, n.axis) - coord(points_[n.point], n.axis);
  if (delta <= 0 || delta * delta <= r2) within_rec(n.left, q, r2, out);
  if (delta >= 0 || delta * delta <= r2) within_rec(n.right, q, r2, out);
}

std::vector<KdTree::Hit> KdTree::within(const PixelPoint& q, double radius) const {
  std::vector<Hit> out;
  if (radius < 0) return out;
  within_rec(root_, q, radius * radius, out);
  std::sort(out.begin(), out.end(), [](const Hit& a, const Hit& b) { return a.index < b.index; });
  return out;
}

// -- assignment ------------------------------------------------------------------------

const char* to_string(AssignMode m) {
  return m == AssignMode::OneToOne ? "one-to-one" : "paper-sequential";
}

AssignMode assign_mode_from_string(std::string_view s) {
  if (s == "one-to-one") return AssignMode::OneToOne;
  if (s == "paper-sequential") return AssignMode::PaperSequential;
  throw Error(Errc::config_error, "unknown association mode '" + std::string(s) + "'");
}

std::vector<Pairing> nn_assign(std::span<const PixelPoint> boxes, std::span<const PixelPoint> points,
                               AssignMode mode, double max_dist) {
  std::vector<Pairing> out;
  if (boxes.empty() || points.empty()) return out;
  const KdTree tree(boxes);

  if (mode == AssignMode::PaperSequential) {
    for (std::size_t p = 0; p < points.size(); ++p) {
      const auto hit = tree.nearest(points[p]);
      out.push_back({hit->index, p, hit->distance});
    }
  } else {
    struct Edge {
      double d2;
      std::size_t point, box;
    };
    std::vector<Edge> edges;
    const double r2 = max_dist * max_dist;
    for (std::size_t p = 0; p < points.size(); ++p) {
      for (const auto& hit : tree.within(points[p], max_dist)) {
        const double d2 = dist2(boxes[hit.index], points[p]);
        if (d2 <= r2) edges.push_back({d2, p, hit.index});
      }
    }
    // Equal distances: earlier point first, then the box's position, so the
    // outcome does not depend on the order of the boxes.
    std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
      const auto& ba = boxes[a.box];
      const auto& bb = boxes[b.box];
      return std::tie(a.d2, a.point, ba.x, ba.y, a.box) < std::tie(b.d2, b.point, bb.x, bb.y, b.box);
    });
    std::vector<bool> box_used(boxes.size()), point_used(points.size());
    for (const auto& e : edges) {
      if (box_used[e.box] || point_used[e.point]) continue;
      box_used[e.box] = point_used[e.point] = true;
      out.push_back({e.box, e.point, std::sqrt(e.d2)});
    }
  }
  std::sort(out.begin(), out.end(), [](const Pairing& a, const Pairing& b) {
    return std::tie(a.box, a.distance, a.point) < std::tie(b.box, b.distance, b.point);
  });
  return out;
}

const Assignment* AssociationResult::best_for(std::size_t detection) const {
  const Assignment* best = nullptr;
  for (const auto& a : assignments) {
    if (a.detection == detection && (!best || a.distance < best->distance)) best = &a;
  }
  return best;
}

AssociationResult associate(ImageId image_id, std::vector<Detection> detections,
                            std::vector<ProjectedCandidate> projected, AssignMode mode, double max_dist) {
  AssociationResult r;
  r.image_id = image_id;
  r.detections = std::move(detections);
  r.projected = std::move(projected);

  std::vector<PixelPoint> centers;
  centers.reserve(r.detections.size());
  for (const auto& d : r.detections) centers.push_back(d.center());

  std::vector<PixelPoint> pts;
  std::vector<std::size_t> pt_index;
  for (std::size_t i = 0; i < r.projected.size(); ++i) {
    if (mode == AssignMode::OneToOne && !r.projected[i].in_frame) continue;
    pts.push_back(r.projected[i].pixel);
    pt_index.push_back(i);
  }

  std::vector<bool> det_used(r.detections.size()), cand_used(r.projected.size());
  for (const auto& p : nn_assign(centers, pts, mode, max_dist)) {
    const std::size_t c = pt_index[p.point];
    r.assignments.push_back({p.box, r.projected[c].vessel_id, r.projected[c].pixel, p.distance, c});
    det_used[p.box] = true;
    cand_used[c] = true;
  }
  for (std::size_t i = 0; i < det_used.size(); ++i)
    if (!det_used[i]) r.unmatched_detections.push_back(i);
  for (std::size_t i = 0; i < cand_used.size(); ++i)
    if (!cand_used[i]) r.unmatched_candidates.push_back(i);
  return r;
}

// -- accuracy ---------------------------------------------------------------------------

AccuracyEntry make_accuracy(std::size_t correct, std::size_t total_pairs) {
  if (correct > total_pairs) throw Error(Errc::invalid_argument, "more correct pairs than pairs");
  AccuracyEntry e{correct, total_pairs, std::nullopt};
  if (total_pairs > 0) e.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(total_pairs);
  return e;
}

std::string format_accuracy(const std::optional<double>& percent) {
  if (!percent) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *percent);
  return buf;
}

AccuracyReport compute_accuracy(std::span<const AssociationResult> results, const GroundTruth& truth) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  AccuracyReport report;
  for (const auto& r : results) {
    auto& [correct, total] = counts[r.camera];
    for (const auto& a : r.assignments) {
      const auto it = truth.find({r.image_id, r.detections[a.detection].index});
      if (it == truth.end()) {
        ++report.unverified;
        continue;
      }
      ++total;
      if (it->second && *it->second == a.vessel_id) ++correct;
    }
  }
  std::size_t all_correct = 0, all_total = 0;
  for (const auto& [camera, c] : counts) {
    report.per_camera[camera] = make_accuracy(c.first, c.second);
    all_correct += c.first;
    all_total += c.second;
  }
  report.total = make_accuracy(all_correct, all_total);
  return report;
}

}  // namespace aisfuse
