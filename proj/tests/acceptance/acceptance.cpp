// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "aisfuse/ais.hpp"
#include "aisfuse/association.hpp"
#include "aisfuse/dataset_io.hpp"
#include "aisfuse/frames.hpp"
#include "aisfuse/geodesy.hpp"
#include "aisfuse/pipeline.hpp"
#include "aisfuse/projective.hpp"
#include "fixtures.hpp"
#include "scene.hpp"

using namespace aisfuse;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome accuracy_arithmetic() {
  const auto a = make_accuracy(961, 1285);
  const auto b = make_accuracy(625, 664);
  const std::string sa = format_accuracy(a.accuracy), sb = format_accuracy(b.accuracy);
  return {sa == "74.79" && sb == "94.13", "961/1285 -> " + sa + ", 625/664 -> " + sb};
}

Outcome homography_recovery() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst_elem = 0.0, worst_forward = 0.0, worst_back = 0.0, worst_world = 0.0;
  for (int m = 0; m < 100; ++m) {
    const Eigen::Matrix3d gen = fixtures::random_homography(rng);
    const auto corrs = fixtures::exact_correspondences(gen, 8, rng);
    const Homography est = estimate_homography(corrs);
    worst_elem = std::max(worst_elem, (est.matrix() - canonicalize(gen)).cwiseAbs().maxCoeff());
    for (const auto& c : fixtures::exact_correspondences(gen, 100, rng)) {
      const GeoPoint w = apply_homography(est, c.image);
      const double wn = std::hypot(c.world.lat, c.world.lon);
      worst_forward = std::max(worst_forward, std::hypot(w.lat - c.world.lat, w.lon - c.world.lon) / wn);
      const PixelPoint back = project_world_to_image(est, w);
      const double pn = std::hypot(c.image.x, c.image.y);
      worst_back = std::max(worst_back, std::hypot(back.x - c.image.x, back.y - c.image.y) / pn);
      const GeoPoint again = apply_homography(est, project_world_to_image(est, c.world));
      worst_world = std::max(worst_world, std::hypot(again.lat - c.world.lat, again.lon - c.world.lon) / wn);
    }
  }
  const double secs = seconds_since(t0);
  return {worst_elem < 1e-6 && worst_forward < 1e-9 && worst_back < 1e-9 && worst_world < 1e-9 && secs < 5.0,
          fmt("max element error %.3g, world %.3g relative, round trips %.3g (image) %.3g (world) relative, %.2f s",
              worst_elem, worst_forward, worst_back, worst_world, secs)};
}

Outcome scale_invariance() {
  std::mt19937_64 rng(2002);
  const Eigen::Matrix3d m = fixtures::random_homography(rng);
  const Homography base(m);
  const auto pts = fixtures::exact_correspondences(m, 100, rng);
  bool ok = true;
  for (double lambda : {-3.0, 0.5, 7.0}) {
    const Homography scaled(lambda * m);
    ok = ok && scaled == base && scaled.inverse_matrix() == base.inverse_matrix();
    for (const auto& c : pts) {
      ok = ok && apply_homography(scaled, c.image) == apply_homography(base, c.image);
      ok = ok && project_world_to_image(scaled, c.world) == project_world_to_image(base, c.world);
    }
  }
  return {ok, "lambda in {-3, 0.5, 7}, 100 points, bitwise comparison"};
}

Outcome geodesic_oracle() {
  const auto rows = fixtures::geodesic_oracle();
  const auto t0 = Clock::now();
  double worst_d = 0.0, worst_az = 0.0;
  for (const auto& r : rows) {
    const auto g = inverse_geodesic({r.lat1, r.lon1}, {r.lat2, r.lon2});
    worst_d = std::max(worst_d, std::abs(g.distance - r.distance));
    double daz = std::abs(g.azimuth - r.azimuth);
    daz = std::min(daz, 360.0 - daz);
    worst_az = std::max(worst_az, daz);
  }
  const double secs = seconds_since(t0);
  return {rows.size() == 1000 && worst_d < 1e-3 && worst_az < 1e-6 && secs < 5.0,
          fmt("%zu pairs, max distance error %.3g m, max azimuth error %.3g deg, %.3f s", rows.size(), worst_d,
              worst_az, secs)};
}

Outcome ncc_localization() {
  const Raster pano = fixtures::textured_panorama(4000, 1000, 31);
  const PanoramaMatcher matcher(pano);
  std::mt19937 rng(4242);
  constexpr int kW = 320, kH = 240;
  std::uniform_int_distribution<int> ux(0, pano.width - kW), uy(0, pano.height - kH);
  int exact = 0, noisy_exact = 0, pyramid_same = 0;
  double worst_score = 1.0;
  LocalizeOptions pyramid;
  pyramid.mode = SearchMode::Pyramid;
  for (int i = 0; i < 50; ++i) {
    const int dx = ux(rng), dy = uy(rng);
    const Raster q = crop(pano, dx, dy, kW, kH);
    const PanoramaOffset off = matcher.localize(q);
    worst_score = std::min(worst_score, off.score);
    if (off.dx == dx && off.dy == dy && off.score >= 1.0 - 1e-6) ++exact;
    const PanoramaOffset coarse = matcher.localize(q, pyramid);
    if (coarse.dx == off.dx && coarse.dy == off.dy) ++pyramid_same;
    const PanoramaOffset n = matcher.localize(fixtures::add_noise(q, 5.0, 900u + static_cast<unsigned>(i)));
    if (n.dx == dx && n.dy == dy) ++noisy_exact;
  }
  return {exact == 50 && noisy_exact >= 48 && pyramid_same == 50,
          fmt("exact %d/50 (min score %.9f), noisy %d/50, pyramid agrees %d/50", exact, worst_score, noisy_exact,
              pyramid_same)};
}

Outcome kdtree_equivalence() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<PixelPoint> pts(1000);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const KdTree tree(pts);
  int agree = 0;
  for (int q = 0; q < 1000; ++q) {
    const PixelPoint query{u(rng), u(rng)};
    const auto d2 = [&](const PixelPoint& p) {
      const double dx = p.x - query.x, dy = p.y - query.y;
      return dx * dx + dy * dy;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (d2(pts[i]) < d2(pts[best])) best = i;
    }
    const auto hit = tree.nearest(query);
    if (hit && hit->index == best && hit->distance == std::sqrt(d2(pts[best]))) ++agree;
  }
  return {agree == 1000, fmt("%d/1000 queries match the linear scan", agree)};
}

Outcome end_to_end_scene() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  {
    scene::TempDir dir("accept_scene");
    auto written = scene::write_scene(scene::default_scene(), dir.path());
    written.config.options.mode = AssignMode::OneToOne;
    written.config.options.max_dist = 150.0;
    const RunSummary s = run_pipeline(written.config);
    if (!s.accuracy) return {false, "no accuracy report"};
    const auto& total = s.accuracy->total;
    ok = ok && total.accuracy && *total.accuracy == 100.0 &&
         total.total_pairs == written.truth.owner.size() && s.processed == 5;
    detail += "one-to-one " + format_accuracy(total.accuracy) + "% over " + std::to_string(total.total_pairs) +
              " pairs";
  }
  {
    scene::TempDir dir("accept_offframe");
    auto written = scene::write_scene(scene::scene_with_offframe_vessel(), dir.path());
    written.config.options.mode = AssignMode::PaperSequential;
    run_pipeline(written.config);
    std::size_t cross = 0;
    for (const auto& r : load_results(*written.config.results_out)) {
      for (const auto& a : r.assignments) {
        const auto truth = written.truth.owner.find({r.image_id, r.detections[a.detection].index});
        if (!r.projected[a.candidate].in_frame && truth != written.truth.owner.end() && truth->second != a.vessel_id)
          ++cross;
      }
    }
    ok = ok && cross >= 1;
    detail += "; paper-sequential cross-boundary mis-assignments " + std::to_string(cross);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 30.0, detail + fmt(", %.2f s", secs)};
}

Outcome interpolation() {
  AisRecord a, b;
  a.vessel_id = b.vessel_id = 1;
  a.timestamp = 0;
  a.position = {53.0, 9.0};
  b.timestamp = 60'000;
  b.position = {53.0, 9.006};
  const VesselTrack track{1, {a, b}};
  const auto node = interpolate_position(track, 60'000, 30.0);
  const auto mid = interpolate_position(track, 30'000, 30.0);
  AisRecord single = a;
  single.timestamp = 10'000;
  single.position = {53.5, 9.9};
  const auto raw = interpolate_position(VesselTrack{1, {single}}, 25'000, 30.0);
  const bool node_ok = node && node->position == b.position && node->source == PositionSource::Exact;
  const bool mid_ok = mid && mid->position == GeoPoint{53.0, 9.003} && mid->source == PositionSource::Interpolated;
  const bool raw_ok = raw && raw->position == single.position && raw->source == PositionSource::Raw;
  return {node_ok && mid_ok && raw_ok, fmt("node %s, midpoint %s, single-fix fallback %s", node_ok ? "exact" : "off",
                                           mid_ok ? "exact" : "off", raw_ok ? "raw" : "off")};
}

Outcome annotation_round_trip() {
  AisRecord snap;
  snap.vessel_id = 211234560;
  snap.position = {53.542968, 9.935401};
  snap.heading = 268.3;
  snap.cog = 271.38;
  snap.length = 29;
  snap.width = 7;
  snap.sog = 8.73;
  snap.ship_type = 70;
  AssociationResult r;
  r.image_id = 0;
  r.detections = {make_detection(0, 0, 363.0, 602.0, 199.0, 56.0)};
  ProjectedCandidate pc;
  pc.vessel_id = snap.vessel_id;
  pc.pixel = {462.0, 630.0};
  pc.in_frame = true;
  pc.estimate.position = snap.position;
  pc.estimate.snapshot = snap;
  r.projected = {pc};
  r.assignments = {{0, snap.vessel_id, pc.pixel, 0.5, 0}};
  IdentityAnonymizer anon;
  const AnnotationDocument doc = export_annotations(std::span(&r, 1), anon);
  const std::string text = write_annotations(doc);
  const AnnotationDocument back = parse_annotations(text);
  bool ok = back == doc && back.annotations.size() == 1 && back.annotations[0].vessel_info;
  if (ok) {
    const auto& a = back.annotations[0];
    const auto& v = *a.vessel_info;
    ok = a.bbox == std::array<double, 4>{363.0, 602.0, 199.0, 56.0} && v.type == 70 && v.speed == 8.73 &&
         v.heading == 268.3 && v.course == 271.38 && v.length == 29.0 && v.width == 7.0 &&
         v.position == GeoPoint{53.542968, 9.935401} && text.find("\"latitude\": \"53.542968\"") != std::string::npos &&
         text.find("\"longitude\": \"9.935401\"") != std::string::npos && write_annotations(back) == text;
  }
  return {ok, "bbox [363, 602, 199, 56], type 70, speed 8.73, text stable across a second write"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"accuracy-arithmetic", accuracy_arithmetic},
      {"homography-recovery", homography_recovery},
      {"scale-invariance", scale_invariance},
      {"geodesic-oracle", geodesic_oracle},
      {"ncc-localization", ncc_localization},
      {"kdtree-equivalence", kdtree_equivalence},
      {"end-to-end-scene", end_to_end_scene},
      {"interpolation", interpolation},
      {"annotation-round-trip", annotation_round_trip},
  };
  int failed = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
