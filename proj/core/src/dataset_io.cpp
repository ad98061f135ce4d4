#include "aisfuse/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "aisfuse/error.hpp"
#include "aisfuse/geodesy.hpp"
#include "aisfuse/timeutil.hpp"

namespace aisfuse {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

namespace {

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, what + ": " + e.what());
  }
}

// Wraps nlohmann's typed access so schema errors surface as config errors.
template <typename F>
auto schema_guard(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, what + ": " + e.what());
  }
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

// Whole values print without a fraction, as in the published sample.
ojson dimension(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::floor(*v) == *v && std::abs(*v) < 1e15) return static_cast<std::int64_t>(*v);
  return *v;
}

std::optional<double> read_optional(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string coordinate_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double coordinate_value(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(Errc::parse_error, "bad coordinate '" + s + "'");
    }
    return v;
  }
  return j.get<double>();
}

ojson point_json(const GeoPoint& p) { return ojson{{"lat", p.lat}, {"lon", p.lon}}; }
GeoPoint point_from(const json& j) { return {j.at("lat").get<double>(), j.at("lon").get<double>()}; }

ojson keypoints_json(const std::vector<ProfileKeypoint>& kps) {
  ojson arr = ojson::array();
  for (const auto& k : kps) {
    arr.push_back(ojson{{"x", k.corr.image.x},
                        {"y", k.corr.image.y},
                        {"lat", k.corr.world.lat},
                        {"lon", k.corr.world.lon},
                        {"enabled", k.enabled}});
  }
  return arr;
}

std::vector<ProfileKeypoint> keypoints_from(const json& arr) {
  std::vector<ProfileKeypoint> out;
  for (const auto& k : arr) {
    out.push_back({{{k.at("x").get<double>(), k.at("y").get<double>()},
                    {k.at("lat").get<double>(), k.at("lon").get<double>()}},
                   k.value("enabled", true)});
  }
  return out;
}

std::optional<Matrix9> matrix_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  Matrix9 m{};
  if (it->size() != 9) throw Error(Errc::config_error, std::string(key) + " needs 9 values");
  for (std::size_t i = 0; i < 9; ++i) m[i] = (*it)[i].get<double>();
  return m;
}

Eigen::Matrix3d to_eigen(const Matrix9& m) {
  Eigen::Matrix3d e;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) e(r, c) = m[static_cast<std::size_t>(r * 3 + c)];
  return e;
}

Matrix9 from_eigen(const Eigen::Matrix3d& e) {
  Matrix9 m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m[static_cast<std::size_t>(r * 3 + c)] = e(r, c);
  return m;
}

}  // namespace

// -- camera profiles ---------------------------------------------------------------------

const char* to_string(CameraType t) {
  switch (t) {
    case CameraType::Fixed: return "fixed";
    case CameraType::Panning: return "panning";
    case CameraType::Dual: return "dual";
  }
  return "?";
}

CameraType camera_type_from_string(std::string_view s) {
  if (s == "fixed") return CameraType::Fixed;
  if (s == "panning") return CameraType::Panning;
  if (s == "dual") return CameraType::Dual;
  throw Error(Errc::config_error, "unknown camera type '" + std::string(s) + "'");
}

void validate(const CameraProfile& p) {
  if (p.width <= 0 || p.height <= 0) throw Error(Errc::config_error, "profile resolution must be positive");
  if (!is_valid(p.location)) throw Error(Errc::config_error, "profile location is not a valid coordinate");
  if (p.type != CameraType::Fixed && (!p.panorama_path || p.panorama_path->empty())) {
    throw Error(Errc::config_error, std::string(to_string(p.type)) + " camera requires a panorama_path");
  }
  if (p.type == CameraType::Dual) {
    for (auto c : {FrameClass::Panning, FrameClass::Fixed, FrameClass::Transition}) {
      const auto it = p.reference_histograms.find(c);
      if (it == p.reference_histograms.end() || it->second.empty()) {
        throw Error(Errc::config_error,
                    std::string("dual camera needs reference histograms for class ") + to_string(c));
      }
    }
  }
  if (!p.roi.vertices.empty()) {
    try {
      point_in_roi(p.location, p.roi);
    } catch (const Error& e) {
      throw Error(Errc::config_error, std::string("roi: ") + e.what());
    }
  }
}

ojson profile_to_json(const CameraProfile& p) {
  ojson j;
  j["version"] = kProfileVersion;
  j["name"] = p.name;
  j["type"] = to_string(p.type);
  j["resolution"] = {p.width, p.height};
  j["location"] = point_json(p.location);
  j["direction"] = p.direction;
  j["keypoints"] = keypoints_json(p.keypoints);
  if (!p.panorama_keypoints.empty()) j["panorama_keypoints"] = keypoints_json(p.panorama_keypoints);
  ojson roi = ojson::array();
  for (const auto& v : p.roi.vertices) roi.push_back(point_json(v));
  j["roi"] = roi;
  if (p.panorama_path) j["panorama_path"] = *p.panorama_path;
  if (p.homography) j["homography"] = *p.homography;
  if (p.panorama_homography) j["panorama_homography"] = *p.panorama_homography;
  if (!p.reference_histograms.empty()) {
    ojson refs = ojson::object();
    for (const auto& [cls, hists] : p.reference_histograms) {
      ojson arr = ojson::array();
      for (const auto& h : hists) arr.push_back(ojson{{"channels", h.channels}, {"bins", h.bins}});
      refs[to_string(cls)] = arr;
    }
    j["reference_histograms"] = refs;
  }
  return j;
}

CameraProfile profile_from_json(const json& j) {
  return schema_guard("camera profile", [&] {
    const int version = j.at("version").get<int>();
    if (version != kProfileVersion) {
      throw Error(Errc::config_error, "unsupported profile version " + std::to_string(version));
    }
    CameraProfile p;
    p.name = j.at("name").get<std::string>();
    p.type = camera_type_from_string(j.at("type").get<std::string>());
    const auto& res = j.at("resolution");
    p.width = res.at(0).get<int>();
    p.height = res.at(1).get<int>();
    p.location = point_from(j.at("location"));
    p.direction = j.value("direction", std::string{});
    if (j.contains("keypoints")) p.keypoints = keypoints_from(j.at("keypoints"));
    if (j.contains("panorama_keypoints")) p.panorama_keypoints = keypoints_from(j.at("panorama_keypoints"));
    if (j.contains("roi"))
      for (const auto& v : j.at("roi")) p.roi.vertices.push_back(point_from(v));
    if (j.contains("panorama_path") && !j.at("panorama_path").is_null())
      p.panorama_path = j.at("panorama_path").get<std::string>();
    p.homography = matrix_from(j, "homography");
    p.panorama_homography = matrix_from(j, "panorama_homography");
    if (j.contains("reference_histograms")) {
      for (const auto& [key, arr] : j.at("reference_histograms").items()) {
        auto& dst = p.reference_histograms[frame_class_from_string(key)];
        for (const auto& h : arr) {
          dst.push_back({h.at("channels").get<int>(), h.at("bins").get<std::vector<double>>()});
        }
      }
    }
    validate(p);
    return p;
  });
}

CameraProfile load_camera_profile(const std::filesystem::path& path) {
  return profile_from_json(parse_json(read_text_file(path), path.string()));
}

void save_camera_profile(const std::filesystem::path& path, const CameraProfile& p) {
  validate(p);
  write_text_file(path, profile_to_json(p).dump(2) + "\n");
}

std::vector<Correspondence> active_keypoints(const CameraProfile& p, CalibrationView view) {
  const auto& src = view == CalibrationView::Primary ? p.keypoints : p.panorama_keypoints;
  std::vector<Correspondence> out;
  for (const auto& k : src)
    if (k.enabled) out.push_back(k.corr);
  return out;
}

Homography profile_homography(CameraProfile& p, CalibrationView view) {
  auto& cached = view == CalibrationView::Primary ? p.homography : p.panorama_homography;
  if (cached) return Homography(to_eigen(*cached));
  const auto corrs = active_keypoints(p, view);
  if (corrs.size() < 4) {
    throw Error(Errc::config_error, "homography needs at least 4 enabled keypoints, profile '" + p.name +
                                        "' has " + std::to_string(corrs.size()));
  }
  const Homography h = estimate_homography(corrs);
  cached = from_eigen(h.matrix());
  return h;
}

// -- detections ----------------------------------------------------------------------------

DetectionFormat detection_format_from_string(std::string_view s) {
  if (s == "yolo" || s == "yolo-normalized") return DetectionFormat::YoloNormalized;
  if (s == "pixel" || s == "pixel-list") return DetectionFormat::PixelList;
  throw Error(Errc::config_error, "unknown detection format '" + std::string(s) + "'");
}

DetectionImport parse_detections(std::string_view text, DetectionFormat format, int image_width,
                                 int image_height, ImageId image_id) {
  if (image_width <= 0 || image_height <= 0) throw Error(Errc::invalid_argument, "image size must be positive");
  DetectionImport out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> v;
    std::string tok;
    bool bad_token = false;
    while (fields >> tok) {
      double d = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        bad_token = true;
        break;
      }
      v.push_back(d);
    }
    if (v.empty() && !bad_token) continue;
    if (bad_token) {
      out.errors.push_back({lineno, "non-numeric field '" + tok + "'"});
      continue;
    }
    try {
      if (format == DetectionFormat::YoloNormalized) {
        if (v.size() < 5) throw Error(Errc::parse_error, "expected 'class cx cy w h'");
        for (std::size_t i = 1; i < 5; ++i) {
          if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw Error(Errc::parse_error, "normalized value outside [0,1]");
        }
        const double w = v[3] * image_width, h = v[4] * image_height;
        out.detections.push_back(make_detection(image_id, out.detections.size(),
                                                (v[1] - v[3] / 2.0) * image_width,
                                                (v[2] - v[4] / 2.0) * image_height, w, h));
      } else {
        if (v.size() < 4) throw Error(Errc::parse_error, "expected 'x y w h'");
        out.detections.push_back(make_detection(image_id, out.detections.size(), v[0], v[1], v[2], v[3]));
      }
    } catch (const Error& e) {
      out.errors.push_back({lineno, e.what()});
    }
  }
  return out;
}

DetectionImport import_detections(const std::filesystem::path& path, DetectionFormat format, int image_width,
                                  int image_height, ImageId image_id) {
  return parse_detections(read_text_file(path), format, image_width, image_height, image_id);
}

std::array<double, 4> normalize_detection(const Detection& d, int image_width, int image_height) {
  const double W = image_width, H = image_height;
  return {(d.x + d.w / 2.0) / W, (d.y + d.h / 2.0) / H, d.w / W, d.h / H};
}

// -- annotations ---------------------------------------------------------------------------

VesselInfo vessel_info_from(const AisRecord& snapshot, const GeoPoint& position) {
  return VesselInfo{snapshot.ship_type, position,     snapshot.heading, snapshot.cog,
                    snapshot.length,    snapshot.width, snapshot.sog};
}

AnnotationDocument export_annotations(std::span<const AssociationResult> results, Anonymizer& anonymizer) {
  struct Keyed {
    AnnotationRecord rec;
    std::size_t order;
  };
  std::vector<Keyed> rows;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.detections.size(); ++i) {
      const auto& d = r.detections[i];
      AnnotationRecord rec;
      rec.image_id = r.image_id;
      rec.bbox = {d.x, d.y, d.w, d.h};
      rows.push_back({rec, d.index});
    }
  }
  // Anonymize in the final output order so sequential ids are reproducible.
  std::sort(rows.begin(), rows.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.rec.image_id, a.rec.bbox, a.order) < std::tie(b.rec.image_id, b.rec.bbox, b.order);
  });
  std::map<std::pair<ImageId, std::size_t>, const AssociationResult*> by_key;
  std::map<std::pair<ImageId, std::size_t>, std::size_t> det_pos;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.detections.size(); ++i) {
      by_key[{r.image_id, r.detections[i].index}] = &r;
      det_pos[{r.image_id, r.detections[i].index}] = i;
    }
  }
  AnnotationDocument doc;
  for (auto& row : rows) {
    const auto key = std::make_pair(row.rec.image_id, row.order);
    const AssociationResult& r = *by_key.at(key);
    if (const Assignment* a = r.best_for(det_pos.at(key))) {
      const auto& cand = r.projected[a->candidate];
      row.rec.unique_id = anonymizer.anonymize(a->vessel_id);
      row.rec.vessel_info = vessel_info_from(cand.estimate.snapshot, cand.estimate.position);
    }
    doc.annotations.push_back(std::move(row.rec));
  }
  return doc;
}

std::string write_annotations(const AnnotationDocument& doc) {
  ojson anns = ojson::array();
  for (const auto& a : doc.annotations) {
    ojson j;
    j["image_id"] = a.image_id;
    j["bbox"] = a.bbox;
    j["category_id"] = a.category_id;
    if (a.unique_id) j["unique_id"] = *a.unique_id;
    if (a.vessel_info) {
      const auto& v = *a.vessel_info;
      j["vessel_info"] = ojson{{"type", v.type ? ojson(*v.type) : ojson(nullptr)},
                               {"latitude", coordinate_text(v.position.lat)},
                               {"longitude", coordinate_text(v.position.lon)},
                               {"heading", optional_number(v.heading)},
                               {"course", optional_number(v.course)},
                               {"length", dimension(v.length)},
                               {"width", dimension(v.width)},
                               {"speed", optional_number(v.speed)}};
    }
    anns.push_back(std::move(j));
  }
  ojson root;
  root["annotations"] = anns;
  root["categories"] = ojson::array({ojson{{"id", kVesselCategoryId}, {"name", "Vessel"}}});
  return root.dump(2) + "\n";
}

AnnotationDocument parse_annotations(std::string_view text) {
  const json root = parse_json(text, "annotation document");
  return schema_guard("annotation document", [&] {
    AnnotationDocument doc;
    for (const auto& j : root.at("annotations")) {
      AnnotationRecord a;
      a.image_id = j.at("image_id").get<ImageId>();
      const auto& bbox = j.at("bbox");
      if (bbox.size() != 4) throw Error(Errc::parse_error, "bbox needs 4 values");
      for (std::size_t i = 0; i < 4; ++i) a.bbox[i] = bbox[i].get<double>();
      if (!(a.bbox[2] > 0.0 && a.bbox[3] > 0.0)) throw Error(Errc::parse_error, "bbox size must be positive");
      a.category_id = j.value("category_id", kVesselCategoryId);
      if (j.contains("unique_id") && !j.at("unique_id").is_null()) a.unique_id = j.at("unique_id").get<std::uint64_t>();
      if (j.contains("vessel_info") && !j.at("vessel_info").is_null()) {
        const auto& v = j.at("vessel_info");
        VesselInfo info;
        if (v.contains("type") && !v.at("type").is_null()) info.type = v.at("type").get<int>();
        info.position = {coordinate_value(v.at("latitude")), coordinate_value(v.at("longitude"))};
        if (!is_valid(info.position)) throw Error(Errc::parse_error, "vessel position out of range");
        info.heading = read_optional(v, "heading");
        info.course = read_optional(v, "course");
        info.length = read_optional(v, "length");
        info.width = read_optional(v, "width");
        info.speed = read_optional(v, "speed");
        a.vessel_info = info;
      }
      doc.annotations.push_back(std::move(a));
    }
    return doc;
  });
}

// -- manifest -------------------------------------------------------------------------------

void validate(const DatasetManifest& m) {
  std::set<ImageId> ids;
  for (const auto& e : m.images) {
    if (!ids.insert(e.id).second) throw Error(Errc::config_error, "duplicate image id " + std::to_string(e.id));
  }
  for (const auto& [id, tag] : m.splits) {
    if (!ids.count(id)) throw Error(Errc::config_error, "split names unknown image " + std::to_string(id));
    if (tag != "train" && tag != "val" && tag != "test") {
      throw Error(Errc::config_error, "unknown split tag '" + tag + "'");
    }
  }
}

void check_references(const DatasetManifest& m, const AnnotationDocument& doc) {
  std::set<ImageId> ids;
  for (const auto& e : m.images) ids.insert(e.id);
  for (const auto& a : doc.annotations) {
    if (!ids.count(a.image_id)) {
      throw Error(Errc::config_error, "annotation references unknown image " + std::to_string(a.image_id));
    }
  }
}

DatasetManifest manifest_from_json(const json& j) {
  return schema_guard("manifest", [&] {
    DatasetManifest m;
    for (const auto& e : j.at("images")) {
      const auto ts = parse_timestamp(e.at("timestamp").is_string() ? e.at("timestamp").get<std::string>()
                                                                    : e.at("timestamp").dump());
      if (!ts) throw Error(Errc::config_error, "bad image timestamp " + e.at("timestamp").dump());
      m.images.push_back({e.at("id").get<ImageId>(), e.at("path").get<std::string>(),
                          e.value("camera", std::string{}), *ts});
    }
    if (j.contains("annotation_files")) m.annotation_files = j.at("annotation_files").get<std::vector<std::string>>();
    if (j.contains("splits")) {
      for (const auto& [k, v] : j.at("splits").items()) m.splits[std::stoll(k)] = v.get<std::string>();
    }
    validate(m);
    return m;
  });
}

ojson manifest_to_json(const DatasetManifest& m) {
  ojson images = ojson::array();
  for (const auto& e : m.images) {
    images.push_back(ojson{{"id", e.id}, {"path", e.path}, {"camera", e.camera},
                           {"timestamp", format_iso8601(e.timestamp)}});
  }
  ojson splits = ojson::object();
  for (const auto& [id, tag] : m.splits) splits[std::to_string(id)] = tag;
  return ojson{{"images", images}, {"annotation_files", m.annotation_files}, {"splits", splits}};
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(parse_json(read_text_file(path), path.string()));
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  validate(m);
  write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

// -- ground truth ---------------------------------------------------------------------------

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Confirm: return "confirm";
    case Verdict::Reject: return "reject";
    case Verdict::Reassign: return "reassign";
  }
  return "?";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "confirm") return Verdict::Confirm;
  if (s == "reject") return Verdict::Reject;
  if (s == "reassign") return Verdict::Reassign;
  throw Error(Errc::parse_error, "unknown decision '" + std::string(s) + "'");
}

ojson decision_to_json(const GroundTruthDecision& d) {
  return ojson{{"image_id", d.image_id},
               {"detection", d.detection},
               {"decision", to_string(d.verdict)},
               {"vessel_id", d.vessel_id ? ojson(*d.vessel_id) : ojson(nullptr)},
               {"recorded_at", format_iso8601(d.recorded_at)}};
}

GroundTruthDecision decision_from_json(const json& j) {
  return schema_guard("ground-truth decision", [&] {
    GroundTruthDecision d;
    d.image_id = j.at("image_id").get<ImageId>();
    d.detection = j.at("detection").get<std::size_t>();
    d.verdict = verdict_from_string(j.at("decision").get<std::string>());
    if (j.contains("vessel_id") && !j.at("vessel_id").is_null()) d.vessel_id = j.at("vessel_id").get<VesselId>();
    if (d.verdict != Verdict::Reject && !d.vessel_id) {
      throw Error(Errc::parse_error, std::string(to_string(d.verdict)) + " needs a vessel_id");
    }
    if (j.contains("recorded_at")) {
      const auto ts = parse_timestamp(j.at("recorded_at").get<std::string>());
      if (!ts) throw Error(Errc::parse_error, "bad recorded_at");
      d.recorded_at = *ts;
    }
    return d;
  });
}

void append_decision(const std::filesystem::path& path, const GroundTruthDecision& d) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::io_error, "cannot append to " + path.string());
  out << decision_to_json(d).dump() << '\n';
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

std::vector<GroundTruthDecision> load_decisions(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<GroundTruthDecision> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(decision_from_json(parse_json(line, path.string())));
  }
  return out;
}

GroundTruth resolve_ground_truth(std::span<const GroundTruthDecision> decisions) {
  GroundTruth truth;
  for (const auto& d : decisions) {
    truth[{d.image_id, d.detection}] = d.verdict == Verdict::Reject ? std::nullopt : d.vessel_id;
  }
  return truth;
}

// -- results ---------------------------------------------------------------------------------

namespace {

const char* to_string(PositionSource s) {
  switch (s) {
    case PositionSource::Interpolated: return "interpolated";
    case PositionSource::Exact: return "exact";
    case PositionSource::Raw: return "raw";
  }
  return "?";
}

PositionSource source_from_string(const std::string& s) {
  if (s == "interpolated") return PositionSource::Interpolated;
  if (s == "exact") return PositionSource::Exact;
  if (s == "raw") return PositionSource::Raw;
  throw Error(Errc::parse_error, "unknown position source '" + s + "'");
}

ojson record_json(const AisRecord& r) {
  return ojson{{"vessel_id", r.vessel_id},
               {"timestamp", format_iso8601(r.timestamp)},
               {"lat", r.position.lat},
               {"lon", r.position.lon},
               {"sog", optional_number(r.sog)},
               {"cog", optional_number(r.cog)},
               {"heading", optional_number(r.heading)},
               {"ship_type", r.ship_type ? ojson(*r.ship_type) : ojson(nullptr)},
               {"length", optional_number(r.length)},
               {"width", optional_number(r.width)},
               {"message_type", r.message_type}};
}

AisRecord record_from(const json& j) {
  AisRecord r;
  r.vessel_id = j.at("vessel_id").get<VesselId>();
  const auto ts = parse_iso8601(j.at("timestamp").get<std::string>());
  if (!ts) throw Error(Errc::parse_error, "bad record timestamp");
  r.timestamp = *ts;
  r.position = {j.at("lat").get<double>(), j.at("lon").get<double>()};
  r.sog = read_optional(j, "sog");
  r.cog = read_optional(j, "cog");
  r.heading = read_optional(j, "heading");
  if (j.contains("ship_type") && !j.at("ship_type").is_null()) r.ship_type = j.at("ship_type").get<int>();
  r.length = read_optional(j, "length");
  r.width = read_optional(j, "width");
  r.message_type = j.value("message_type", 0);
  return r;
}

}  // namespace

ojson result_to_json(const AssociationResult& r) {
  ojson dets = ojson::array();
  for (const auto& d : r.detections) {
    dets.push_back(ojson{{"index", d.index}, {"bbox", {d.x, d.y, d.w, d.h}}, {"clamped", d.clamped}});
  }
  ojson proj = ojson::array();
  for (const auto& p : r.projected) {
    proj.push_back(ojson{{"vessel_id", p.vessel_id},
                         {"x", p.pixel.x},
                         {"y", p.pixel.y},
                         {"in_frame", p.in_frame},
                         {"source", to_string(p.estimate.source)},
                         {"lat", p.estimate.position.lat},
                         {"lon", p.estimate.position.lon},
                         {"snapshot", record_json(p.estimate.snapshot)}});
  }
  ojson assigns = ojson::array();
  for (const auto& a : r.assignments) {
    assigns.push_back(ojson{{"detection", a.detection},
                            {"candidate", a.candidate},
                            {"vessel_id", a.vessel_id},
                            {"distance", a.distance}});
  }
  return ojson{{"image_id", r.image_id},
               {"camera", r.camera},
               {"timestamp", format_iso8601(r.timestamp)},
               {"detections", dets},
               {"projected", proj},
               {"assignments", assigns},
               {"unmatched_detections", r.unmatched_detections},
               {"unmatched_candidates", r.unmatched_candidates}};
}

AssociationResult result_from_json(const json& j) {
  return schema_guard("association result", [&] {
    AssociationResult r;
    r.image_id = j.at("image_id").get<ImageId>();
    r.camera = j.value("camera", std::string{});
    const auto ts = parse_iso8601(j.at("timestamp").get<std::string>());
    if (!ts) throw Error(Errc::parse_error, "bad result timestamp");
    r.timestamp = *ts;
    for (const auto& d : j.at("detections")) {
      const auto& b = d.at("bbox");
      Detection det = make_detection(r.image_id, d.at("index").get<std::size_t>(), b.at(0).get<double>(),
                                     b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>());
      det.clamped = d.value("clamped", false);
      r.detections.push_back(det);
    }
    for (const auto& p : j.at("projected")) {
      ProjectedCandidate c;
      c.vessel_id = p.at("vessel_id").get<VesselId>();
      c.pixel = {p.at("x").get<double>(), p.at("y").get<double>()};
      c.in_frame = p.at("in_frame").get<bool>();
      c.estimate.source = source_from_string(p.at("source").get<std::string>());
      c.estimate.position = {p.at("lat").get<double>(), p.at("lon").get<double>()};
      c.estimate.snapshot = record_from(p.at("snapshot"));
      r.projected.push_back(std::move(c));
    }
    for (const auto& a : j.at("assignments")) {
      Assignment as;
      as.detection = a.at("detection").get<std::size_t>();
      as.candidate = a.at("candidate").get<std::size_t>();
      as.vessel_id = a.at("vessel_id").get<VesselId>();
      as.distance = a.at("distance").get<double>();
      if (as.detection >= r.detections.size() || as.candidate >= r.projected.size()) {
        throw Error(Errc::parse_error, "assignment index out of range");
      }
      as.projected = r.projected[as.candidate].pixel;
      r.assignments.push_back(as);
    }
    r.unmatched_detections = j.at("unmatched_detections").get<std::vector<std::size_t>>();
    r.unmatched_candidates = j.at("unmatched_candidates").get<std::vector<std::size_t>>();
    return r;
  });
}

void save_results(const std::filesystem::path& path, std::span<const AssociationResult> results) {
  ojson arr = ojson::array();
  for (const auto& r : results) arr.push_back(result_to_json(r));
  write_text_file(path, ojson{{"results", arr}}.dump(2) + "\n");
}

std::vector<AssociationResult> load_results(const std::filesystem::path& path) {
  const json root = parse_json(read_text_file(path), path.string());
  std::vector<AssociationResult> out;
  for (const auto& r : schema_guard("results", [&] { return root.at("results"); })) out.push_back(result_from_json(r));
  return out;
}

}  // namespace aisfuse
