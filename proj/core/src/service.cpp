#include "aisfuse/service.hpp"

#include <charconv>
#include <chrono>
#include <mutex>
#include <shared_mutex>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "aisfuse/error.hpp"

namespace aisfuse {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

ServiceSession load_session(const PipelineConfig& cfg, const fs::path& ground_truth_log) {
  if (cfg.profiles.empty()) throw Error(Errc::config_error, "no camera profile given");
  ServiceSession s;
  s.profile_path = cfg.profiles.front();
  s.profile_dir = s.profile_path.parent_path();
  s.profile = load_camera_profile(s.profile_path);
  s.image_dir = cfg.image_dir;
  s.ground_truth_log = ground_truth_log;
  s.options = cfg.options;
  if (!cfg.ais_sources.empty()) s.tracks = load_tracks(cfg.ais_sources).tracks;
  if (!cfg.manifest.empty()) {
    const DatasetManifest m = load_manifest(cfg.manifest);
    for (const auto& e : m.images) {
      if (e.camera != s.profile.name) continue;
      s.frames[e.id] = e;
    }
    if (!cfg.detections_dir.empty()) {
      std::map<std::string, CameraContext> cams;
      CameraContext ctx;
      ctx.profile = s.profile;
      cams.emplace(s.profile.name, std::move(ctx));
      for (auto& job : load_frame_jobs(m, cfg.detections_dir, cfg.detection_format, cams)) {
        if (s.frames.count(job.entry.id)) s.detections[job.entry.id] = std::move(job.detections);
      }
    }
  }
  return s;
}

namespace {

struct HttpError : std::runtime_error {
  int status;
  HttpError(int st, const std::string& msg) : std::runtime_error(msg), status(st) {}
};

HttpReply json_reply(const ojson& j, int status = 200) { return {status, "application/json", j.dump()}; }

HttpReply error_reply(int status, const std::string& reason) {
  return json_reply(ojson{{"error", reason}}, status);
}

int status_for(Errc c) {
  switch (c) {
    case Errc::invalid_argument:
    case Errc::parse_error:
    case Errc::missing_column: return 400;
    case Errc::io_error: return 500;
    default: return 422;
  }
}

double number_param(const std::map<std::string, std::string>& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) throw HttpError(400, "missing query parameter '" + key + "'");
  double v = 0.0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw HttpError(400, "query parameter '" + key + "' is not a number");
  }
  return v;
}

CalibrationView view_param(const std::map<std::string, std::string>& params) {
  const auto it = params.find("view");
  if (it == params.end() || it->second == "primary") return CalibrationView::Primary;
  if (it->second == "panorama") return CalibrationView::Panorama;
  throw HttpError(400, "view must be 'primary' or 'panorama'");
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string::npos ? path.size() : j;
    if (end > i) parts.push_back(path.substr(i, end - i));
    i = end;
  }
  return parts;
}

ImageId image_id_param(const std::string& s) {
  ImageId id = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw HttpError(404, "no frame '" + s + "'");
  return id;
}

ojson matrix_json(const Eigen::Matrix3d& m) {
  ojson a = ojson::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

std::string content_type_for(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".bmp") return "image/bmp";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  return "application/octet-stream";
}

}  // namespace

struct CalibrationService::Impl {
  ServiceSession session;
  std::shared_mutex profile_mutex;
  std::mutex log_mutex;
  std::mutex matcher_mutex;
  std::shared_ptr<const PanoramaMatcher> matcher;
  httplib::Server server;

  std::vector<ProfileKeypoint>& keypoints(CalibrationView v) {
    return v == CalibrationView::Primary ? session.profile.keypoints : session.profile.panorama_keypoints;
  }
  std::optional<Matrix9>& cached(CalibrationView v) {
    return v == CalibrationView::Primary ? session.profile.homography : session.profile.panorama_homography;
  }

  // Caller holds profile_mutex (shared is enough).
  Homography current_homography(CalibrationView v) {
    if (const auto& c = cached(v)) {
      Eigen::Matrix3d m;
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) m(r, k) = (*c)[static_cast<std::size_t>(r * 3 + k)];
      return Homography(m);
    }
    CameraProfile copy = session.profile;
    return profile_homography(copy, v);
  }

  std::shared_ptr<const PanoramaMatcher> panorama_matcher() {
    std::lock_guard lock(matcher_mutex);
    if (!matcher) {
      std::string rel;
      {
        std::shared_lock plock(profile_mutex);
        if (!session.profile.panorama_path) throw Error(Errc::config_error, "profile has no panorama");
        rel = *session.profile.panorama_path;
      }
      fs::path p = rel;
      if (p.is_relative()) p = session.profile_dir / p;
      matcher = std::make_shared<const PanoramaMatcher>(load_raster(p));
    }
    return matcher;
  }

  HttpReply get_profile() {
    std::shared_lock lock(profile_mutex);
    return json_reply(profile_to_json(session.profile));
  }

  HttpReply put_keypoints(const std::map<std::string, std::string>& params, const std::string& body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw HttpError(400, std::string("body is not JSON: ") + e.what());
    }
    CalibrationView view = view_param(params);
    if (j.is_object() && j.contains("view")) view = view_param({{"view", j.at("view").get<std::string>()}});
    const json& arr = j.is_array() ? j : j.at("keypoints");
    std::vector<ProfileKeypoint> kps;
    try {
      for (const auto& k : arr) {
        kps.push_back({{{k.at("x").get<double>(), k.at("y").get<double>()},
                        {k.at("lat").get<double>(), k.at("lon").get<double>()}},
                       k.value("enabled", true)});
      }
    } catch (const json::exception& e) {
      throw HttpError(400, std::string("bad keypoint: ") + e.what());
    }
    std::unique_lock lock(profile_mutex);
    keypoints(view) = std::move(kps);
    cached(view).reset();
    return json_reply(ojson{{"view", view == CalibrationView::Primary ? "primary" : "panorama"},
                            {"count", keypoints(view).size()}});
  }

  HttpReply fit(const std::map<std::string, std::string>& params) {
    const CalibrationView view = view_param(params);
    std::unique_lock lock(profile_mutex);
    std::vector<std::size_t> active;
    const auto& kps = keypoints(view);
    for (std::size_t i = 0; i < kps.size(); ++i)
      if (kps[i].enabled) active.push_back(i);
    if (active.size() < 4) {
      return error_reply(422, "fit needs at least 4 enabled keypoints, have " + std::to_string(active.size()));
    }
    cached(view).reset();
    const Homography h = profile_homography(session.profile, view);
    const auto corrs = active_keypoints(session.profile, view);
    const ReprojectionReport rep = reprojection_report(h, corrs);
    ojson per = ojson::array();
    for (const auto& k : rep.keypoints) {
      per.push_back(ojson{{"index", active[k.index]}, {"error", k.error}, {"failed", k.failed}});
    }
    return json_reply(ojson{{"view", view == CalibrationView::Primary ? "primary" : "panorama"},
                            {"homography", matrix_json(h.matrix())},
                            {"report",
                             {{"max_error", rep.max_error},
                              {"min_error", rep.min_error},
                              {"mean_error", rep.mean_error},
                              {"std_dev", rep.std_dev},
                              {"keypoint_count", rep.keypoint_count},
                              {"failed_count", rep.failed_count},
                              {"keypoints", per}}}});
  }

  HttpReply project(const std::map<std::string, std::string>& params) {
    const GeoPoint g{number_param(params, "lat"), number_param(params, "lon")};
    std::shared_lock lock(profile_mutex);
    const PixelPoint p = project_world_to_image(current_homography(view_param(params)), g);
    return json_reply(ojson{{"x", p.x}, {"y", p.y}});
  }

  HttpReply unproject(const std::map<std::string, std::string>& params) {
    const PixelPoint p{number_param(params, "x"), number_param(params, "y")};
    std::shared_lock lock(profile_mutex);
    const GeoPoint g = apply_homography(current_homography(view_param(params)), p);
    return json_reply(ojson{{"lat", g.lat}, {"lon", g.lon}});
  }

  const ImageEntry& frame(ImageId id) {
    const auto it = session.frames.find(id);
    if (it == session.frames.end()) throw HttpError(404, "no frame " + std::to_string(id));
    return it->second;
  }

  fs::path frame_path(const ImageEntry& e) {
    fs::path p = e.path;
    return p.is_relative() ? session.image_dir / p : p;
  }

  HttpReply get_frame(ImageId id) {
    const fs::path p = frame_path(frame(id));
    return {200, content_type_for(p), read_text_file(p)};
  }

  HttpReply frame_associations(ImageId id, const std::map<std::string, std::string>& params) {
    const ImageEntry& e = frame(id);
    RunOptions opt = session.options;
    if (params.count("window")) opt.window_s = number_param(params, "window");
    if (!(opt.window_s > 0.0)) throw HttpError(400, "window must be positive");
    if (params.count("max_dist")) opt.max_dist = number_param(params, "max_dist");
    if (const auto it = params.find("mode"); it != params.end()) {
      try {
        opt.mode = assign_mode_from_string(it->second);
      } catch (const Error& err) {
        throw HttpError(400, err.what());
      }
    }
    Raster img = load_raster(frame_path(e));

    std::shared_lock lock(profile_mutex);
    const CameraProfile& prof = session.profile;
    std::optional<FrameClass> cls;
    if (prof.type == CameraType::Dual) cls = classify_frame(img, prof.reference_histograms);
    const bool panning = prof.type == CameraType::Panning || cls == FrameClass::Panning;
    if (cls == FrameClass::Transition) {
      return json_reply(ojson{{"image_id", id}, {"frame_class", "transition"}, {"result", nullptr}});
    }
    const CalibrationView view =
        (prof.type == CameraType::Dual && panning) ? CalibrationView::Panorama : CalibrationView::Primary;
    const Homography h = current_homography(view);
    std::optional<PanoramaOffset> offset;
    if (panning) {
      lock.unlock();
      offset = panorama_matcher()->localize(img, opt.localize);
      lock.lock();
    }
    const auto cands = filter_candidates(session.tracks, prof.roi, e.timestamp, opt.window_s);
    Projection proj = project_candidates(cands, h, offset, img.width, img.height);
    std::vector<Detection> dets;
    if (const auto it = session.detections.find(id); it != session.detections.end()) dets = it->second;
    for (auto& d : dets) clamp_to_image(d, img.width, img.height);
    AssociationResult r = associate(id, std::move(dets), std::move(proj.points), opt.mode, opt.max_dist);
    r.camera = e.camera;
    r.timestamp = e.timestamp;
    ojson j{{"image_id", id},
            {"mode", to_string(opt.mode)},
            {"window", opt.window_s},
            {"frame_class", cls ? ojson(to_string(*cls)) : ojson(nullptr)},
            {"offset", offset ? ojson{{"dx", offset->dx}, {"dy", offset->dy}, {"score", offset->score}}
                              : ojson(nullptr)},
            {"dropped", proj.dropped},
            {"result", result_to_json(r)}};
    return json_reply(j);
  }

  HttpReply post_groundtruth(ImageId id, const std::string& body) {
    frame(id);
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw HttpError(400, std::string("body is not JSON: ") + e.what());
    }
    j["image_id"] = id;
    GroundTruthDecision d = decision_from_json(j);
    d.recorded_at = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    std::lock_guard lock(log_mutex);
    append_decision(session.ground_truth_log, d);
    return json_reply(decision_to_json(d), 201);
  }

  HttpReply get_groundtruth() {
    std::lock_guard lock(log_mutex);
    ojson arr = ojson::array();
    if (fs::exists(session.ground_truth_log)) {
      for (const auto& d : load_decisions(session.ground_truth_log)) arr.push_back(decision_to_json(d));
    }
    return json_reply(ojson{{"decisions", arr}});
  }

  HttpReply save_profile() {
    std::shared_lock lock(profile_mutex);
    save_camera_profile(session.profile_path, session.profile);
    return json_reply(ojson{{"saved", session.profile_path.string()}});
  }

  HttpReply route(const std::string& method, const std::string& path,
                  const std::map<std::string, std::string>& params, const std::string& body) {
    const auto parts = split_path(path);
    const auto is = [&](const char* m, std::initializer_list<const char*> segs) {
      if (method != m || parts.size() != segs.size()) return false;
      std::size_t i = 0;
      for (const char* s : segs) {
        if (*s != '*' && parts[i] != s) return false;
        ++i;
      }
      return true;
    };
    if (is("GET", {"profile"})) return get_profile();
    if (is("PUT", {"profile", "keypoints"})) return put_keypoints(params, body);
    if (is("POST", {"profile", "save"})) return save_profile();
    if (is("POST", {"fit"})) return fit(params);
    if (is("GET", {"project"})) return project(params);
    if (is("GET", {"unproject"})) return unproject(params);
    if (is("GET", {"frame", "*"})) return get_frame(image_id_param(parts[1]));
    if (is("GET", {"frame", "*", "associations"})) return frame_associations(image_id_param(parts[1]), params);
    if (is("POST", {"groundtruth", "*"})) return post_groundtruth(image_id_param(parts[1]), body);
    if (is("GET", {"groundtruth"})) return get_groundtruth();
    return error_reply(404, "no route for " + method + " " + path);
  }
};

CalibrationService::CalibrationService(ServiceSession session) : impl_(std::make_unique<Impl>()) {
  impl_->session = std::move(session);
  const auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params.emplace(k, v);
    const HttpReply r = handle(req.method, req.path, params, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->server.Get(".*", forward);
  impl_->server.Put(".*", forward);
  impl_->server.Post(".*", forward);
}

CalibrationService::~CalibrationService() { stop(); }

HttpReply CalibrationService::handle(const std::string& method, const std::string& path,
                                     const std::map<std::string, std::string>& params, const std::string& body) {
  try {
    return impl_->route(method, path, params, body);
  } catch (const HttpError& e) {
    return error_reply(e.status, e.what());
  } catch (const Error& e) {
    return error_reply(status_for(e.code()), e.what());
  } catch (const std::exception& e) {
    spdlog::error("{} {}: {}", method, path, e.what());
    return error_reply(500, e.what());
  }
}

int CalibrationService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error(Errc::io_error, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void CalibrationService::listen() { impl_->server.listen_after_bind(); }

void CalibrationService::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace aisfuse
