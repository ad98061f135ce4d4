#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aisfuse/ais.hpp"
#include "aisfuse/association.hpp"
#include "aisfuse/frames.hpp"
#include "aisfuse/projective.hpp"

namespace aisfuse {

// -- camera profiles -------------------------------------------------------------------

inline constexpr int kProfileVersion = 1;

enum class CameraType { Fixed, Panning, Dual };

const char* to_string(CameraType t);
CameraType camera_type_from_string(std::string_view s);

struct ProfileKeypoint {
  Correspondence corr;
  bool enabled = true;
  friend bool operator==(const ProfileKeypoint&, const ProfileKeypoint&) = default;
};

using Matrix9 = std::array<double, 9>;  // row-major 3x3

/// Which keypoint set a homography belongs to. Fixed cameras only have the
/// primary view; panning cameras calibrate the panorama as their primary
/// view; dual cameras carry both.
enum class CalibrationView { Primary, Panorama };

struct CameraProfile {
  std::string name;
  CameraType type = CameraType::Fixed;
  int width = 0;
  int height = 0;
  GeoPoint location;
  std::string direction;
  std::vector<ProfileKeypoint> keypoints;
  std::vector<ProfileKeypoint> panorama_keypoints;  // dual cameras
  RoiPolygon roi;
  std::optional<std::string> panorama_path;  // relative paths resolve against the profile file
  std::optional<Matrix9> homography;
  std::optional<Matrix9> panorama_homography;
  std::map<FrameClass, std::vector<HistogramVec>> reference_histograms;

  friend bool operator==(const CameraProfile&, const CameraProfile&) = default;
};

/// Throws Errc::config_error when an invariant is broken: positive
/// resolution, panorama for panning and dual cameras, reference histograms
/// for all three classes on dual cameras.
void validate(const CameraProfile& p);

nlohmann::ordered_json profile_to_json(const CameraProfile& p);
CameraProfile profile_from_json(const nlohmann::json& j);

CameraProfile load_camera_profile(const std::filesystem::path& path);
void save_camera_profile(const std::filesystem::path& path, const CameraProfile& p);

/// Enabled keypoints of a view.
std::vector<Correspondence> active_keypoints(const CameraProfile& p, CalibrationView view);

/// Image -> world homography of a view; fitted from the enabled keypoints
/// and cached in the profile when missing. Throws Errc::config_error with
/// fewer than 4 enabled keypoints.
Homography profile_homography(CameraProfile& p, CalibrationView view = CalibrationView::Primary);

// -- detections ----------------------------------------------------------------------------

enum class DetectionFormat {
  YoloNormalized,  // class cx cy w h, all relative to the image size
  PixelList,       // x y w h in pixels, top-left origin
};

DetectionFormat detection_format_from_string(std::string_view s);

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct DetectionImport {
  std::vector<Detection> detections;
  std::vector<LineError> errors;  // offending lines are skipped
};

DetectionImport parse_detections(std::string_view text, DetectionFormat format, int image_width,
                                 int image_height, ImageId image_id = 0);
DetectionImport import_detections(const std::filesystem::path& path, DetectionFormat format, int image_width,
                                  int image_height, ImageId image_id = 0);

/// class cx cy w h relative to the image, inverse of the yolo import.
std::array<double, 4> normalize_detection(const Detection& d, int image_width, int image_height);

// -- annotations ---------------------------------------------------------------------------

inline constexpr int kVesselCategoryId = 1;

struct VesselInfo {
  std::optional<int> type;
  GeoPoint position;  // written as 6-decimal strings
  std::optional<double> heading;
  std::optional<double> course;
  std::optional<double> length;
  std::optional<double> width;
  std::optional<double> speed;

  friend bool operator==(const VesselInfo&, const VesselInfo&) = default;
};

struct AnnotationRecord {
  ImageId image_id = 0;
  std::array<double, 4> bbox{};  // x, y, w, h
  int category_id = kVesselCategoryId;
  std::optional<std::uint64_t> unique_id;
  std::optional<VesselInfo> vessel_info;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct AnnotationDocument {
  std::vector<AnnotationRecord> annotations;
  friend bool operator==(const AnnotationDocument&, const AnnotationDocument&) = default;
};

VesselInfo vessel_info_from(const AisRecord& snapshot, const GeoPoint& position);

/// One record per detection. Matched detections carry the closest vessel's
/// info with its id passed through the anonymizer. Sorted by image then box.
AnnotationDocument export_annotations(std::span<const AssociationResult> results, Anonymizer& anonymizer);

/// Deterministic text, two-space indent, trailing newline.
std::string write_annotations(const AnnotationDocument& doc);
AnnotationDocument parse_annotations(std::string_view text);

// -- manifest -------------------------------------------------------------------------------

struct ImageEntry {
  ImageId id = 0;
  std::string path;
  std::string camera;
  TimestampMs timestamp = 0;
  friend bool operator==(const ImageEntry&, const ImageEntry&) = default;
};

struct DatasetManifest {
  std::vector<ImageEntry> images;
  std::vector<std::string> annotation_files;
  std::map<ImageId, std::string> splits;  // "train", "val" or "test"
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Throws Errc::config_error on duplicate image ids, unknown split tags or
/// splits naming unknown images.
void validate(const DatasetManifest& m);

/// Throws Errc::config_error if an annotation references an unknown image.
void check_references(const DatasetManifest& m, const AnnotationDocument& doc);

DatasetManifest manifest_from_json(const nlohmann::json& j);
nlohmann::ordered_json manifest_to_json(const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

// -- ground truth ---------------------------------------------------------------------------

enum class Verdict { Confirm, Reject, Reassign };

const char* to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct GroundTruthDecision {
  ImageId image_id = 0;
  std::size_t detection = 0;
  Verdict verdict = Verdict::Confirm;
  std::optional<VesselId> vessel_id;  // proposed (confirm) or corrected (reassign)
  TimestampMs recorded_at = 0;
};

nlohmann::ordered_json decision_to_json(const GroundTruthDecision& d);
GroundTruthDecision decision_from_json(const nlohmann::json& j);

/// Appends one JSON line.
void append_decision(const std::filesystem::path& path, const GroundTruthDecision& d);
std::vector<GroundTruthDecision> load_decisions(const std::filesystem::path& path);

/// Last decision per detection wins; rejections map to "no vessel".
GroundTruth resolve_ground_truth(std::span<const GroundTruthDecision> decisions);

// -- results ---------------------------------------------------------------------------------

nlohmann::ordered_json result_to_json(const AssociationResult& r);
AssociationResult result_from_json(const nlohmann::json& j);
void save_results(const std::filesystem::path& path, std::span<const AssociationResult> results);
std::vector<AssociationResult> load_results(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace aisfuse
