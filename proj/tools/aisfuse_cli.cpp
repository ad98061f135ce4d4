// aisfuse command line: run, calibrate, fit, eval, decode-ais.

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "aisfuse/ais.hpp"
#include "aisfuse/dataset_io.hpp"
#include "aisfuse/error.hpp"
#include "aisfuse/pipeline.hpp"
#include "aisfuse/service.hpp"
#include "aisfuse/timeutil.hpp"

namespace fs = std::filesystem;
using namespace aisfuse;

namespace {

struct RunFlags {
  std::vector<std::string> profiles;
  std::vector<std::string> ais;
  std::string manifest;
  std::string images;
  std::string detections;
  std::string detection_format = "yolo";
  double window = kDefaultWindowSeconds;
  std::string mode = "one-to-one";
  double max_dist = kDefaultMaxDistancePx;
  double duplicate_threshold = kDefaultDuplicateThreshold;
  std::string search = "exhaustive";
  unsigned workers = 0;
  std::string anonymizer = "sequential";
  std::string ground_truth;
  std::string annotations = "annotations.json";
  std::string results;
  std::string summary;
};

void add_run_flags(CLI::App* app, RunFlags& f, bool outputs) {
  app->add_option("--profile", f.profiles, "Camera profile (repeat per camera)")->required();
  app->add_option("--ais", f.ais, "AIS source: NMEA log or CSV table (repeatable)");
  app->add_option("--manifest", f.manifest, "Dataset manifest with image timestamps");
  app->add_option("--images", f.images, "Image directory");
  app->add_option("--detections", f.detections, "Directory of per-image detection files");
  app->add_option("--detection-format", f.detection_format, "yolo or pixel")
      ->check(CLI::IsMember({"yolo", "yolo-normalized", "pixel", "pixel-list"}));
  app->add_option("--window", f.window, "Half-width of the AIS time window in seconds")
      ->check(CLI::PositiveNumber);
  app->add_option("--mode", f.mode, "Association mode")->check(CLI::IsMember({"one-to-one", "paper-sequential"}));
  app->add_option("--max-dist", f.max_dist, "Largest pixel distance for a one-to-one pair")
      ->check(CLI::PositiveNumber);
  app->add_option("--duplicate-threshold", f.duplicate_threshold, "Histogram distance below which frames repeat");
  app->add_option("--search", f.search, "Panorama search")->check(CLI::IsMember({"exhaustive", "pyramid"}));
  app->add_option("--workers", f.workers, "Worker threads, 0 for all cores");
  if (!outputs) return;
  app->add_option("--anonymizer", f.anonymizer, "identity, sequential or hash:<salt>");
  app->add_option("--ground-truth", f.ground_truth, "Decision log for accuracy");
  app->add_option("--annotations", f.annotations, "Annotation output");
  app->add_option("--results", f.results, "Association results output");
  app->add_option("--summary", f.summary, "Run summary output");
}

PipelineConfig to_config(const RunFlags& f) {
  PipelineConfig c;
  for (const auto& p : f.profiles) c.profiles.emplace_back(p);
  for (const auto& p : f.ais) c.ais_sources.emplace_back(p);
  c.manifest = f.manifest;
  c.image_dir = f.images;
  c.detections_dir = f.detections;
  c.detection_format = detection_format_from_string(f.detection_format);
  c.options.window_s = f.window;
  c.options.mode = assign_mode_from_string(f.mode);
  c.options.max_dist = f.max_dist;
  c.options.duplicate_threshold = f.duplicate_threshold;
  c.options.localize.mode = f.search == "pyramid" ? SearchMode::Pyramid : SearchMode::Exhaustive;
  c.options.workers = f.workers;
  c.anonymizer = f.anonymizer;
  if (!f.ground_truth.empty()) c.ground_truth = f.ground_truth;
  c.annotations_out = f.annotations;
  if (!f.results.empty()) c.results_out = f.results;
  if (!f.summary.empty()) c.summary_out = f.summary;
  return c;
}

CalibrationService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

void print_record_csv(const AisRecord& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
  std::cout << r.vessel_id << ',' << format_iso8601(r.timestamp) << ',';
  std::printf("%.7f,%.7f,", r.position.lat, r.position.lon);
  std::cout << opt(r.sog) << ',' << opt(r.cog) << ',' << opt(r.heading) << ','
            << (r.ship_type ? std::to_string(*r.ship_type) : std::string()) << ',' << opt(r.length) << ','
            << opt(r.width) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuse vessel detections with AIS data through camera homographies"};
  app.set_config("--config", "", "TOML or INI file with flag values");
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Associate detections with AIS data and export annotations");
  add_run_flags(run, run_flags, true);

  RunFlags cal_flags;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string gt_log = "groundtruth.jsonl";
  auto* cal = app.add_subcommand("calibrate", "Serve the calibration and verification HTTP API");
  add_run_flags(cal, cal_flags, false);
  cal->add_option("--host", host, "Bind address");
  cal->add_option("--port", port, "Port, 0 for any free port");
  cal->add_option("--ground-truth-log", gt_log, "Append-only decision log");

  std::string fit_profile, fit_view = "primary";
  bool fit_reject = false, fit_write = false;
  double fit_threshold = 50.0;
  auto* fit = app.add_subcommand("fit", "Fit a profile's homography and print the reprojection report");
  fit->add_option("--profile", fit_profile, "Camera profile")->required()->check(CLI::ExistingFile);
  fit->add_option("--view", fit_view, "primary or panorama")->check(CLI::IsMember({"primary", "panorama"}));
  fit->add_flag("--reject-outliers", fit_reject, "Drop the worst keypoint while it exceeds the threshold");
  fit->add_option("--threshold", fit_threshold, "Outlier threshold in pixels");
  fit->add_flag("--write", fit_write, "Store the fitted matrix in the profile");

  std::string eval_results, eval_truth;
  auto* eval = app.add_subcommand("eval", "Accuracy of saved results against a decision log");
  eval->add_option("--results", eval_results, "Association results")->required()->check(CLI::ExistingFile);
  eval->add_option("--ground-truth", eval_truth, "Decision log")->required()->check(CLI::ExistingFile);

  std::vector<std::string> decode_inputs;
  std::string decode_fallback;
  auto* decode = app.add_subcommand("decode-ais", "Decode NMEA logs to CSV on stdout");
  decode->add_option("inputs", decode_inputs, "NMEA files")->required()->check(CLI::ExistingFile);
  decode->add_option("--fallback-time", decode_fallback, "Timestamp for lines without one (ISO-8601)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run) {
      const RunSummary s = run_pipeline(to_config(run_flags));
      std::cout << summary_to_json(s).dump(2) << '\n';
      return 0;
    }
    if (*cal) {
      PipelineConfig cfg = to_config(cal_flags);
      CalibrationService service(load_session(cfg, gt_log));
      const int bound = service.bind(host, port);
      spdlog::info("listening on http://{}:{}", host, bound);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.listen();
      g_service = nullptr;
      return 0;
    }
    if (*fit) {
      CameraProfile p = load_camera_profile(fit_profile);
      const auto view = fit_view == "panorama" ? CalibrationView::Panorama : CalibrationView::Primary;
      const auto corrs = active_keypoints(p, view);
      HomographyFitOptions opt;
      opt.reject_outliers = fit_reject;
      opt.outlier_threshold_px = fit_threshold;
      const HomographyFit f = fit_homography(corrs, opt);
      std::vector<Correspondence> kept;
      for (std::size_t i = 0; i < corrs.size(); ++i) {
        if (std::find(f.rejected.begin(), f.rejected.end(), i) == f.rejected.end()) kept.push_back(corrs[i]);
      }
      const ReprojectionReport rep = reprojection_report(f.homography, kept);
      nlohmann::ordered_json j;
      nlohmann::ordered_json m = nlohmann::ordered_json::array();
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m.push_back(f.homography.matrix()(r, c));
      j["homography"] = m;
      j["rejected"] = f.rejected;
      j["max_error"] = rep.max_error;
      j["min_error"] = rep.min_error;
      j["mean_error"] = rep.mean_error;
      j["std_dev"] = rep.std_dev;
      j["keypoint_count"] = rep.keypoint_count;
      std::cout << j.dump(2) << '\n';
      if (fit_write) {
        Matrix9 h{};
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) h[static_cast<std::size_t>(r * 3 + c)] = f.homography.matrix()(r, c);
        (view == CalibrationView::Primary ? p.homography : p.panorama_homography) = h;
        save_camera_profile(fit_profile, p);
      }
      return 0;
    }
    if (*eval) {
      const auto results = load_results(eval_results);
      const auto decisions = load_decisions(eval_truth);
      std::cout << accuracy_to_json(compute_accuracy(results, resolve_ground_truth(decisions))).dump(2) << '\n';
      return 0;
    }
    if (*decode) {
      TimestampMs fallback = 0;
      if (!decode_fallback.empty()) {
        const auto t = parse_timestamp(decode_fallback);
        if (!t) throw Error(Errc::invalid_argument, "bad --fallback-time");
        fallback = *t;
      }
      std::cout << "mmsi,timestamp,latitude,longitude,speed,course,heading,type,length,width\n";
      for (const auto& in : decode_inputs) {
        const DecodeResult d = decode_nmea_file(in, fallback);
        for (const auto& r : d.records) print_record_csv(r);
        spdlog::info("{}: {} lines, {} records, {} checksum errors, {} malformed", in, d.stats.lines,
                     d.stats.records, d.stats.checksum_errors, d.stats.malformed);
      }
      return 0;
    }
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
