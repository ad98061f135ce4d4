#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aisfuse/pipeline.hpp"

namespace aisfuse {

/// Everything the calibration service works on. Mutations stay in memory
/// until POST /profile/save.
struct ServiceSession {
  CameraProfile profile;
  std::filesystem::path profile_path;
  std::filesystem::path profile_dir;  // base for a relative panorama path
  std::map<ImageId, ImageEntry> frames;
  std::filesystem::path image_dir;
  std::map<ImageId, std::vector<Detection>> detections;
  std::map<VesselId, VesselTrack> tracks;
  std::filesystem::path ground_truth_log;
  RunOptions options;
};

/// Builds a session from the first profile of a pipeline config.
ServiceSession load_session(const PipelineConfig& cfg, const std::filesystem::path& ground_truth_log);

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

class CalibrationService {
 public:
  explicit CalibrationService(ServiceSession session);
  ~CalibrationService();

  CalibrationService(const CalibrationService&) = delete;
  CalibrationService& operator=(const CalibrationService&) = delete;

  /// Transport-free entry point; `params` holds the query string.
  HttpReply handle(const std::string& method, const std::string& path,
                   const std::map<std::string, std::string>& params, const std::string& body);

  /// Binds to a free port when `port` is 0 and returns the bound port.
  int bind(const std::string& host, int port = 0);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aisfuse
