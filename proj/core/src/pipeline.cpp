#include "aisfuse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <numeric>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "aisfuse/error.hpp"

namespace aisfuse {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Runs fn(i) for i in [0, n) on a small pool; fn must not throw.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

struct Prepared {
  const CameraContext* camera = nullptr;
  HistogramVec histogram;
  int width = 0;
  int height = 0;
  std::optional<FrameClass> frame_class;
  bool failed = false;
  std::string error;
};

}  // namespace

void validate(const PipelineConfig& cfg) {
  const auto require = [](const fs::path& p, const char* what) {
    if (p.empty() || !fs::exists(p)) throw Error(Errc::config_error, std::string(what) + " not found: " + p.string());
  };
  if (cfg.profiles.empty()) throw Error(Errc::config_error, "no camera profile given");
  for (const auto& p : cfg.profiles) require(p, "camera profile");
  if (cfg.ais_sources.empty()) throw Error(Errc::config_error, "no AIS source given");
  for (const auto& p : cfg.ais_sources) require(p, "AIS source");
  require(cfg.manifest, "manifest");
  require(cfg.image_dir, "image directory");
  require(cfg.detections_dir, "detections directory");
  if (cfg.ground_truth) require(*cfg.ground_truth, "ground truth");
  if (!(cfg.options.window_s > 0.0)) throw Error(Errc::config_error, "time window must be positive");
  if (!(cfg.options.max_dist > 0.0)) throw Error(Errc::config_error, "max_dist must be positive");
  if (cfg.annotations_out.empty()) throw Error(Errc::config_error, "no annotation output path given");
}

CameraContext make_camera_context(CameraProfile profile, const fs::path& base_dir) {
  validate(profile);
  if (profile.roi.vertices.empty()) {
    throw Error(Errc::config_error, "profile '" + profile.name + "' has no region of interest");
  }
  CameraContext ctx;
  switch (profile.type) {
    case CameraType::Fixed:
      ctx.primary = profile_homography(profile, CalibrationView::Primary);
      break;
    case CameraType::Panning:
      ctx.panorama = profile_homography(profile, CalibrationView::Primary);
      break;
    case CameraType::Dual:
      ctx.primary = profile_homography(profile, CalibrationView::Primary);
      ctx.panorama = profile_homography(profile, CalibrationView::Panorama);
      break;
  }
  if (profile.panorama_path) {
    fs::path pano = *profile.panorama_path;
    if (pano.is_relative() && !base_dir.empty()) pano = base_dir / pano;
    ctx.matcher = std::make_shared<const PanoramaMatcher>(load_raster(pano));
  }
  ctx.profile = std::move(profile);
  return ctx;
}

const char* to_string(FrameStatus s) {
  switch (s) {
    case FrameStatus::Processed: return "processed";
    case FrameStatus::SkippedDuplicate: return "skipped-duplicate";
    case FrameStatus::SkippedEmpty: return "skipped-empty";
    case FrameStatus::SkippedTransition: return "skipped-transition";
    case FrameStatus::Failed: return "failed";
  }
  return "?";
}

RunOutput process_frames(const std::map<std::string, CameraContext>& cameras,
                         const std::map<VesselId, VesselTrack>& tracks, std::span<const FrameJob> frames,
                         const RasterLoader& load, const RunOptions& options) {
  RunOutput out;
  RunSummary& sum = out.summary;
  sum.frames_input = frames.size();

  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return frames[a].entry.id < frames[b].entry.id;
  });
  {
    std::set<ImageId> ids;
    for (const auto& f : frames) {
      if (!ids.insert(f.entry.id).second) {
        throw Error(Errc::config_error, "duplicate image id " + std::to_string(f.entry.id));
      }
    }
  }

  std::vector<FrameOutcome> outcome(frames.size());
  std::vector<Prepared> prep(frames.size());

  // Decode and fingerprint.
  auto t0 = Clock::now();
  parallel_for(frames.size(), options.workers, [&](std::size_t i) {
    const auto& job = frames[i];
    auto& p = prep[i];
    outcome[i].image_id = job.entry.id;
    try {
      const auto it = cameras.find(job.entry.camera);
      if (it == cameras.end()) throw Error(Errc::config_error, "unknown camera '" + job.entry.camera + "'");
      p.camera = &it->second;
      const Raster img = load(job.entry);
      validate(img);
      p.width = img.width;
      p.height = img.height;
      p.histogram = compute_histogram(img);
      if (p.camera->profile.type == CameraType::Dual) {
        p.frame_class = classify_histogram(p.histogram, p.camera->profile.reference_histograms);
      }
    } catch (const std::exception& e) {
      p.failed = true;
      p.error = e.what();
    }
  });
  sum.timings_ms["decode"] = elapsed_ms(t0);

  // Duplicate rings run per camera in time order.
  t0 = Clock::now();
  std::vector<std::size_t> by_time = order;
  std::stable_sort(by_time.begin(), by_time.end(), [&](std::size_t a, std::size_t b) {
    return frames[a].entry.timestamp < frames[b].entry.timestamp;
  });
  std::map<std::string, DuplicateFilter> rings;
  std::vector<std::size_t> work;
  for (std::size_t i : by_time) {
    auto& oc = outcome[i];
    const auto& p = prep[i];
    if (p.failed) {
      oc.status = FrameStatus::Failed;
      oc.error = p.error;
      continue;
    }
    auto [ring, inserted] = rings.try_emplace(frames[i].entry.camera, options.duplicate_threshold);
    if (ring->second.check_and_accept(p.histogram)) {
      oc.status = FrameStatus::SkippedDuplicate;
      continue;
    }
    oc.frame_class = p.frame_class;
    if (p.frame_class == FrameClass::Transition) {
      oc.status = FrameStatus::SkippedTransition;
      continue;
    }
    work.push_back(i);
  }
  sum.timings_ms["deduplicate"] = elapsed_ms(t0);

  // Associate.
  t0 = Clock::now();
  std::vector<std::optional<AssociationResult>> results(frames.size());
  parallel_for(work.size(), options.workers, [&](std::size_t w) {
    const std::size_t i = work[w];
    const auto& job = frames[i];
    const auto& p = prep[i];
    const CameraContext& cam = *p.camera;
    auto& oc = outcome[i];
    try {
      const bool panning = cam.profile.type == CameraType::Panning ||
                           (cam.profile.type == CameraType::Dual && p.frame_class == FrameClass::Panning);
      auto candidates = filter_candidates(tracks, cam.profile.roi, job.entry.timestamp, options.window_s);
      if (job.detections.empty() && candidates.empty()) {
        oc.status = FrameStatus::SkippedEmpty;
        return;
      }
      std::optional<PanoramaOffset> offset;
      const Homography* h = nullptr;
      if (panning) {
        if (!cam.matcher || !cam.panorama) throw Error(Errc::config_error, "camera has no panorama calibration");
        offset = cam.matcher->localize(load(job.entry), options.localize);
        oc.offset = offset;
        h = &*cam.panorama;
      } else {
        if (!cam.primary) throw Error(Errc::config_error, "camera has no fixed-view calibration");
        h = &*cam.primary;
      }
      Projection proj = project_candidates(candidates, *h, offset, p.width, p.height);
      oc.projection_dropped = proj.dropped;

      std::vector<Detection> dets = job.detections;
      for (std::size_t k = 0; k < dets.size(); ++k) {
        dets[k].image_id = job.entry.id;
        clamp_to_image(dets[k], p.width, p.height);
      }
      AssociationResult r = associate(job.entry.id, std::move(dets), std::move(proj.points), options.mode,
                                      options.max_dist);
      r.camera = job.entry.camera;
      r.timestamp = job.entry.timestamp;
      results[i] = std::move(r);
      oc.status = FrameStatus::Processed;
    } catch (const std::exception& e) {
      oc.status = FrameStatus::Failed;
      oc.error = e.what();
    }
  });
  sum.timings_ms["associate"] = elapsed_ms(t0);

  for (std::size_t i : order) {
    const auto& oc = outcome[i];
    switch (oc.status) {
      case FrameStatus::Processed: ++sum.processed; break;
      case FrameStatus::SkippedDuplicate: ++sum.skipped_duplicate; break;
      case FrameStatus::SkippedEmpty: ++sum.skipped_empty; break;
      case FrameStatus::SkippedTransition: ++sum.skipped_transition; break;
      case FrameStatus::Failed:
        ++sum.failed;
        spdlog::warn("frame {} failed: {}", oc.image_id, oc.error);
        break;
    }
    sum.projection_dropped += oc.projection_dropped;
    out.frames.push_back(oc);
    if (results[i]) {
      sum.associations += results[i]->assignments.size();
      out.results.push_back(std::move(*results[i]));
    }
  }
  return out;
}

TrackSet load_tracks(std::span<const fs::path> sources) {
  std::vector<AisRecord> all;
  for (const auto& src : sources) {
    auto ext = src.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".csv" || ext == ".tsv") {
      auto t = load_tabular(src);
      if (t.skipped_rows) spdlog::warn("{}: {} rows skipped", src.string(), t.skipped_rows);
      all.insert(all.end(), t.records.begin(), t.records.end());
    } else {
      auto d = decode_nmea_file(src);
      spdlog::info("{}: {} records from {} lines ({} checksum errors)", src.string(), d.stats.records,
                   d.stats.lines, d.stats.checksum_errors);
      all.insert(all.end(), d.records.begin(), d.records.end());
    }
  }
  return build_tracks(all);
}

std::vector<FrameJob> load_frame_jobs(const DatasetManifest& manifest, const fs::path& detections_dir,
                                      DetectionFormat format, const std::map<std::string, CameraContext>& cameras,
                                      std::size_t* line_errors) {
  std::vector<FrameJob> jobs;
  for (const auto& e : manifest.images) {
    FrameJob job{e, {}};
    const auto cam = cameras.find(e.camera);
    const fs::path det = detections_dir / (fs::path(e.path).stem().string() + ".txt");
    if (cam != cameras.end() && fs::exists(det)) {
      auto imp = import_detections(det, format, cam->second.profile.width, cam->second.profile.height, e.id);
      for (const auto& err : imp.errors) spdlog::warn("{}:{}: {}", det.string(), err.line, err.message);
      if (line_errors) *line_errors += imp.errors.size();
      job.detections = std::move(imp.detections);
    }
    jobs.push_back(std::move(job));
  }
  return jobs;
}

RasterLoader file_loader(const fs::path& image_dir) {
  return [image_dir](const ImageEntry& e) {
    fs::path p = e.path;
    if (p.is_relative()) p = image_dir / p;
    Raster r = load_raster(p);
    r.timestamp = e.timestamp;
    r.camera_id = e.camera;
    return r;
  };
}

RunSummary run_pipeline(const PipelineConfig& cfg) {
  validate(cfg);
  const auto start = Clock::now();

  auto t0 = Clock::now();
  std::map<std::string, CameraContext> cameras;
  for (const auto& path : cfg.profiles) {
    CameraContext ctx = make_camera_context(load_camera_profile(path), path.parent_path());
    const std::string name = ctx.profile.name;
    if (!cameras.emplace(name, std::move(ctx)).second) {
      throw Error(Errc::config_error, "two profiles named '" + name + "'");
    }
  }
  const double t_profiles = elapsed_ms(t0);

  t0 = Clock::now();
  const TrackSet tracks = load_tracks(cfg.ais_sources);
  const double t_ais = elapsed_ms(t0);

  const DatasetManifest manifest = load_manifest(cfg.manifest);
  std::size_t line_errors = 0;
  const auto jobs = load_frame_jobs(manifest, cfg.detections_dir, cfg.detection_format, cameras, &line_errors);

  RunOutput out = process_frames(cameras, tracks.tracks, jobs, file_loader(cfg.image_dir), cfg.options);
  RunSummary& sum = out.summary;
  sum.detection_line_errors = line_errors;
  sum.timings_ms["profiles"] = t_profiles;
  sum.timings_ms["ais"] = t_ais;

  if (cfg.ground_truth) {
    const auto decisions = load_decisions(*cfg.ground_truth);
    sum.accuracy = compute_accuracy(out.results, resolve_ground_truth(decisions));
  }

  t0 = Clock::now();
  auto anonymizer = make_anonymizer(cfg.anonymizer);
  const AnnotationDocument doc = export_annotations(out.results, *anonymizer);
  check_references(manifest, doc);
  write_text_file(cfg.annotations_out, write_annotations(doc));
  if (cfg.results_out) save_results(*cfg.results_out, out.results);
  sum.timings_ms["export"] = elapsed_ms(t0);
  sum.timings_ms["total"] = elapsed_ms(start);

  if (cfg.summary_out) write_text_file(*cfg.summary_out, summary_to_json(sum).dump(2) + "\n");
  spdlog::info("{} frames: {} processed, {} duplicate, {} empty, {} transition, {} failed; {} associations",
               sum.frames_input, sum.processed, sum.skipped_duplicate, sum.skipped_empty, sum.skipped_transition,
               sum.failed, sum.associations);
  return sum;
}

ojson accuracy_to_json(const AccuracyReport& r) {
  const auto entry = [](const AccuracyEntry& e) {
    return ojson{{"correct", e.correct},
                 {"total_pairs", e.total_pairs},
                 {"accuracy", e.accuracy ? ojson(*e.accuracy) : ojson(nullptr)},
                 {"display", format_accuracy(e.accuracy)}};
  };
  ojson cams = ojson::object();
  for (const auto& [name, e] : r.per_camera) cams[name] = entry(e);
  return ojson{{"per_camera", cams}, {"total", entry(r.total)}, {"unverified", r.unverified}};
}

ojson summary_to_json(const RunSummary& s) {
  ojson j{{"frames_input", s.frames_input},
          {"processed", s.processed},
          {"skipped_duplicate", s.skipped_duplicate},
          {"skipped_empty", s.skipped_empty},
          {"skipped_transition", s.skipped_transition},
          {"failed", s.failed},
          {"associations", s.associations},
          {"detection_line_errors", s.detection_line_errors},
          {"projection_dropped", s.projection_dropped}};
  j["accuracy"] = s.accuracy ? accuracy_to_json(*s.accuracy) : ojson(nullptr);
  ojson t = ojson::object();
  for (const auto& [k, v] : s.timings_ms) t[k] = v;
  j["timings_ms"] = t;
  return j;
}

}  // namespace aisfuse
