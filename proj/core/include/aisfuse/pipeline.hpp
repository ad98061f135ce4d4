#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aisfuse/ais.hpp"
#include "aisfuse/association.hpp"
#include "aisfuse/dataset_io.hpp"
#include "aisfuse/frames.hpp"
#include "aisfuse/projective.hpp"

namespace aisfuse {

struct RunOptions {
  double window_s = kDefaultWindowSeconds;
  AssignMode mode = AssignMode::OneToOne;
  double max_dist = kDefaultMaxDistancePx;
  double duplicate_threshold = kDefaultDuplicateThreshold;
  LocalizeOptions localize;
  unsigned workers = 0;  // 0 picks the hardware concurrency
};

struct PipelineConfig {
  std::vector<std::filesystem::path> profiles;     // one per camera, matched by name
  std::vector<std::filesystem::path> ais_sources;  // .csv/.tsv are tabular, anything else NMEA
  std::filesystem::path manifest;                  // images with camera and timestamp
  std::filesystem::path image_dir;                 // manifest paths resolve against this
  std::filesystem::path detections_dir;            // <image stem>.txt; a missing file means no boxes
  DetectionFormat detection_format = DetectionFormat::YoloNormalized;
  RunOptions options;
  std::string anonymizer = "sequential";
  std::optional<std::filesystem::path> ground_truth;  // decision log
  std::filesystem::path annotations_out;
  std::optional<std::filesystem::path> results_out;
  std::optional<std::filesystem::path> summary_out;
};

/// Throws Errc::config_error for missing paths or a non-positive window.
void validate(const PipelineConfig& cfg);

/// One camera, ready for concurrent read-only use.
struct CameraContext {
  CameraProfile profile;
  std::optional<Homography> primary;   // image -> world
  std::optional<Homography> panorama;  // panorama image -> world
  std::shared_ptr<const PanoramaMatcher> matcher;
};

/// Fits the homographies a camera's type needs and prepares the panorama.
/// Relative panorama paths resolve against `base_dir`.
CameraContext make_camera_context(CameraProfile profile, const std::filesystem::path& base_dir = {});

struct FrameJob {
  ImageEntry entry;
  std::vector<Detection> detections;
};

enum class FrameStatus { Processed, SkippedDuplicate, SkippedEmpty, SkippedTransition, Failed };

const char* to_string(FrameStatus s);

struct FrameOutcome {
  ImageId image_id = 0;
  FrameStatus status = FrameStatus::Processed;
  std::optional<FrameClass> frame_class;
  std::optional<PanoramaOffset> offset;
  std::size_t projection_dropped = 0;
  std::string error;
};

struct RunSummary {
  std::size_t frames_input = 0;
  std::size_t processed = 0;
  std::size_t skipped_duplicate = 0;
  std::size_t skipped_empty = 0;
  std::size_t skipped_transition = 0;
  std::size_t failed = 0;
  std::size_t associations = 0;
  std::size_t detection_line_errors = 0;
  std::size_t projection_dropped = 0;
  std::optional<AccuracyReport> accuracy;
  std::map<std::string, double> timings_ms;

  bool conserved() const {
    return processed + skipped_duplicate + skipped_empty + skipped_transition + failed == frames_input;
  }
};

struct RunOutput {
  RunSummary summary;
  std::vector<AssociationResult> results;  // processed frames, by image id
  std::vector<FrameOutcome> frames;        // every input frame, by image id
};

using RasterLoader = std::function<Raster(const ImageEntry&)>;

/// Per frame: duplicate check against the camera's recent frames, frame
/// class for dual cameras (transition frames are dropped), panorama
/// localization, AIS candidate filtering, projection and association.
/// Frames without detections and without candidates are skipped as empty.
/// A failing frame is recorded and never aborts the run.
RunOutput process_frames(const std::map<std::string, CameraContext>& cameras,
                         const std::map<VesselId, VesselTrack>& tracks, std::span<const FrameJob> frames,
                         const RasterLoader& load, const RunOptions& options);

/// Loads AIS data from every source and builds tracks.
TrackSet load_tracks(std::span<const std::filesystem::path> sources);

/// Reads the detection file of every manifest image.
std::vector<FrameJob> load_frame_jobs(const DatasetManifest& manifest, const std::filesystem::path& detections_dir,
                                      DetectionFormat format, const std::map<std::string, CameraContext>& cameras,
                                      std::size_t* line_errors = nullptr);

RasterLoader file_loader(const std::filesystem::path& image_dir);

/// Runs the whole chain from files and writes the configured outputs.
RunSummary run_pipeline(const PipelineConfig& cfg);

nlohmann::ordered_json summary_to_json(const RunSummary& s);
nlohmann::ordered_json accuracy_to_json(const AccuracyReport& r);

}  // namespace aisfuse
