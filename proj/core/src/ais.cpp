#include "aisfuse/ais.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include <spdlog/spdlog.h>

#include "aisfuse/error.hpp"
#include "aisfuse/geodesy.hpp"
#include "aisfuse/timeutil.hpp"

namespace aisfuse {
namespace {

constexpr std::int32_t kLonUnavailable = 181 * 600000;
constexpr std::int32_t kLatUnavailable = 91 * 600000;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

// Receive time from a tag block body such as "s:rcv1,c:1641895200*5A".
std::optional<TimestampMs> tag_block_time(std::string_view block) {
  const std::size_t star = block.find('*');
  if (star != std::string_view::npos) block = block.substr(0, star);
  for (auto field : split(block, ',')) {
    if (field.size() > 2 && field.substr(0, 2) == "c:") return parse_timestamp(field.substr(2));
  }
  return std::nullopt;
}

struct StaticFieldsFromReport {
  std::optional<int> ship_type;
  std::optional<double> length;
  std::optional<double> width;
};

StaticFieldsFromReport static_fields(const StaticReport& r) {
  StaticFieldsFromReport f;
  if (r.ship_type > 0) f.ship_type = r.ship_type;
  if (r.to_bow + r.to_stern > 0) f.length = r.to_bow + r.to_stern;
  if (r.to_port + r.to_starboard > 0) f.width = r.to_port + r.to_starboard;
  return f;
}

}  // namespace

int armor_value(char c) {
  const int code = static_cast<unsigned char>(c);
  if (code < 48 || code > 119 || (code > 87 && code < 96)) return -1;
  int v = code - 48;
  if (v > 40) v -= 8;
  return v;
}

bool nmea_checksum_ok(std::string_view sentence) {
  sentence = trim(sentence);
  if (sentence.empty() || (sentence.front() != '!' && sentence.front() != '$')) return false;
  const std::size_t star = sentence.find('*');
  if (star == std::string_view::npos || star + 3 > sentence.size()) return false;
  const int hi = hex_digit(sentence[star + 1]);
  const int lo = hex_digit(sentence[star + 2]);
  if (hi < 0 || lo < 0) return false;
  unsigned sum = 0;
  for (std::size_t i = 1; i < star; ++i) sum ^= static_cast<unsigned char>(sentence[i]);
  return sum == static_cast<unsigned>(hi * 16 + lo);
}

BitReader::BitReader(std::string_view payload, int fill_bits) {
  bits_.reserve(payload.size() * 6);
  for (char c : payload) {
    const int v = armor_value(c);
    if (v < 0) throw Error(Errc::parse_error, std::string("invalid payload character '") + c + "'");
    for (int b = 5; b >= 0; --b) bits_.push_back(((v >> b) & 1) != 0);
  }
  if (fill_bits < 0 || fill_bits > 5 || static_cast<std::size_t>(fill_bits) > bits_.size()) {
    throw Error(Errc::parse_error, "invalid fill bit count");
  }
  bits_.resize(bits_.size() - static_cast<std::size_t>(fill_bits));
}

std::uint32_t BitReader::unsigned_at(std::size_t start, std::size_t len) const {
  if (len > 32 || start + len > bits_.size()) throw Error(Errc::parse_error, "bit field out of range");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < len; ++i) v = (v << 1) | (bits_[start + i] ? 1u : 0u);
  return v;
}

std::int32_t BitReader::signed_at(std::size_t start, std::size_t len) const {
  const std::uint32_t raw = unsigned_at(start, len);
  if (len > 0 && len < 32 && (raw >> (len - 1)) & 1u) {
    return static_cast<std::int32_t>(raw) - static_cast<std::int32_t>(1u << len);
  }
  return static_cast<std::int32_t>(raw);
}

std::string BitReader::text_at(std::size_t start, std::size_t len) const {
  std::string out;
  for (std::size_t i = 0; i + 6 <= len; i += 6) {
    const auto v = static_cast<char>(unsigned_at(start + i, 6));
    out.push_back(v < 32 ? static_cast<char>(v + 64) : v);
  }
  while (!out.empty() && (out.back() == '@' || out.back() == ' ')) out.pop_back();
  return out;
}

std::optional<AisRecord> NmeaDecoder::feed(std::string_view raw_line) {
  ++stats_.lines;
  std::string_view line = trim(raw_line);
  if (line.empty()) {
    ++stats_.malformed;
    return std::nullopt;
  }

  std::optional<TimestampMs> line_time;
  if (line.front() == '\\') {
    const std::size_t close = line.find('\\', 1);
    if (close == std::string_view::npos) {
      ++stats_.malformed;
      return std::nullopt;
    }
    line_time = tag_block_time(line.substr(1, close - 1));
    line = line.substr(close + 1);
  }
  const std::size_t bang = line.find_first_of("!$");
  if (bang == std::string_view::npos) {
    ++stats_.malformed;
    return std::nullopt;
  }
  if (bang > 0 && !line_time) {
    std::string_view prefix = trim(line.substr(0, bang));
    while (!prefix.empty() && (prefix.back() == ',' || prefix.back() == ';')) prefix.remove_suffix(1);
    line_time = parse_timestamp(prefix);
  }
  line = line.substr(bang);
  const std::size_t star = line.find('*');
  if (star == std::string_view::npos || star + 3 > line.size()) {
    ++stats_.malformed;
    return std::nullopt;
  }
  const std::string_view trailing = trim(line.substr(star + 3));
  const std::string_view sentence = line.substr(0, star + 3);
  if (!line_time && !trailing.empty() && trailing.front() == ',') {
    line_time = parse_timestamp(trailing.substr(1));
  }

  if (!nmea_checksum_ok(sentence)) {
    ++stats_.checksum_errors;
    spdlog::debug("AIS checksum mismatch: {}", sentence);
    return std::nullopt;
  }

  const auto fields = split(sentence.substr(1, star - 1), ',');
  if (fields.size() < 7 || fields[0].size() != 5 ||
      (fields[0].substr(2) != "VDM" && fields[0].substr(2) != "VDO")) {
    ++stats_.malformed;
    return std::nullopt;
  }
  const auto total = parse_number<int>(fields[1]);
  const auto index = parse_number<int>(fields[2]);
  const auto fill = parse_number<int>(fields[6]);
  if (!total || !index || !fill || *total < 1 || *total > 9 || *index < 1 || *index > *total) {
    ++stats_.malformed;
    return std::nullopt;
  }
  const TimestampMs ts = line_time.value_or(fallback_);

  if (*total == 1) return decode_payload(std::string(fields[5]), *fill, ts);

  const std::string key = std::string(fields[4]) + "/" + std::string(fields[3]);
  auto it = pending_.find(key);
  if (*index == 1) {
    if (it != pending_.end()) ++stats_.incomplete_fragments;
    pending_[key] = Pending{*total, 2, std::string(fields[5]), ts};
    return std::nullopt;
  }
  if (it == pending_.end() || it->second.next != *index || it->second.total != *total) {
    ++stats_.incomplete_fragments;
    if (it != pending_.end()) pending_.erase(it);
    return std::nullopt;
  }
  it->second.payload += fields[5];
  ++it->second.next;
  if (*index < *total) return std::nullopt;
  const Pending done = std::move(it->second);
  pending_.erase(it);
  return decode_payload(done.payload, *fill, done.timestamp);
}

std::optional<AisRecord> NmeaDecoder::decode_payload(const std::string& payload, int fill_bits,
                                                     TimestampMs ts) {
  std::optional<BitReader> bits;
  try {
    bits.emplace(payload, fill_bits);
  } catch (const Error&) {
    ++stats_.malformed;
    return std::nullopt;
  }
  if (bits->size() < 38) {
    ++stats_.truncated;
    return std::nullopt;
  }
  const int type = static_cast<int>(bits->unsigned_at(0, 6));
  const VesselId mmsi = bits->unsigned_at(8, 30);

  if (type == 5) {
    if (bits->size() < 270) {
      ++stats_.truncated;
      return std::nullopt;
    }
    StaticReport r;
    r.vessel_id = mmsi;
    r.timestamp = ts;
    r.name = bits->text_at(112, 120);
    r.ship_type = static_cast<int>(bits->unsigned_at(232, 8));
    r.to_bow = static_cast<int>(bits->unsigned_at(240, 9));
    r.to_stern = static_cast<int>(bits->unsigned_at(249, 9));
    r.to_port = static_cast<int>(bits->unsigned_at(258, 6));
    r.to_starboard = static_cast<int>(bits->unsigned_at(264, 6));
    const auto f = static_fields(r);
    auto& slot = static_fields_[mmsi];
    if (f.ship_type) slot.ship_type = f.ship_type;
    if (f.length) slot.length = f.length;
    if (f.width) slot.width = f.width;
    statics_.push_back(std::move(r));
    ++stats_.static_reports;
    return std::nullopt;
  }

  std::size_t sog_at, lon_at, lat_at, cog_at, heading_at, needed;
  if (type >= 1 && type <= 3) {
    sog_at = 50, lon_at = 61, lat_at = 89, cog_at = 116, heading_at = 128, needed = 137;
  } else if (type == 18) {
    sog_at = 46, lon_at = 57, lat_at = 85, cog_at = 112, heading_at = 124, needed = 133;
  } else {
    ++stats_.unsupported_type;
    return std::nullopt;
  }
  if (bits->size() < needed) {
    ++stats_.truncated;
    return std::nullopt;
  }

  const std::int32_t lon_raw = bits->signed_at(lon_at, 28);
  const std::int32_t lat_raw = bits->signed_at(lat_at, 27);
  if (lon_raw == kLonUnavailable || lat_raw == kLatUnavailable || std::abs(lon_raw) > 180 * 600000 ||
      std::abs(lat_raw) > 90 * 600000) {
    ++stats_.position_unavailable;
    return std::nullopt;
  }
  if (ts <= 0) {
    ++stats_.missing_timestamp;
    return std::nullopt;
  }

  AisRecord rec;
  rec.vessel_id = mmsi;
  rec.timestamp = ts;
  rec.message_type = type;
  rec.position = {lat_raw / 600000.0, normalize_longitude(lon_raw / 600000.0)};
  const auto sog = bits->unsigned_at(sog_at, 10);
  if (sog != 1023) rec.sog = sog / 10.0;
  const auto cog = bits->unsigned_at(cog_at, 12);
  if (cog < 3600) rec.cog = cog / 10.0;
  const auto heading = bits->unsigned_at(heading_at, 9);
  if (heading < 360) rec.heading = static_cast<double>(heading);
  if (auto it = static_fields_.find(mmsi); it != static_fields_.end()) {
    rec.ship_type = it->second.ship_type;
    rec.length = it->second.length;
    rec.width = it->second.width;
  }
  ++stats_.records;
  return rec;
}

DecodeResult decode_sentences(std::span<const std::string> lines, TimestampMs fallback_timestamp) {
  NmeaDecoder decoder(fallback_timestamp);
  DecodeResult out;
  for (const auto& line : lines) {
    if (auto rec = decoder.feed(line)) out.records.push_back(std::move(*rec));
  }
  out.static_reports = decoder.static_reports();
  out.stats = decoder.stats();
  return out;
}

DecodeResult decode_nmea_file(const std::filesystem::path& path, TimestampMs fallback_timestamp) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  NmeaDecoder decoder(fallback_timestamp);
  DecodeResult out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (auto rec = decoder.feed(line)) out.records.push_back(std::move(*rec));
  }
  out.static_reports = decoder.static_reports();
  out.stats = decoder.stats();
  if (out.stats.checksum_errors + out.stats.malformed > 0) {
    spdlog::warn("{}: {} checksum errors, {} malformed lines", path.string(), out.stats.checksum_errors,
                 out.stats.malformed);
  }
  return out;
}

// -- tabular -------------------------------------------------------------------

namespace {

std::vector<std::string> split_delimited(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(trim(s));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_unknown_token(std::string_view s) {
  const std::string l = lower(s);
  return l.empty() || l == "na" || l == "nan" || l == "null" || l == "none" || l == "-";
}

// nullopt: column absent or unknown value; throws on garbage
std::optional<double> optional_double(const std::vector<std::string>& row, int col) {
  if (col < 0 || is_unknown_token(row[static_cast<std::size_t>(col)])) return std::nullopt;
  auto v = parse_number<double>(row[static_cast<std::size_t>(col)]);
  if (!v || !std::isfinite(*v)) throw Error(Errc::parse_error, "bad number");
  return v;
}

int find_column(const std::vector<std::string>& header, const std::vector<std::string>& names) {
  for (const auto& name : names) {
    const std::string want = lower(name);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(header[i]) == want) return static_cast<int>(i);
    }
  }
  return -1;
}

}  // namespace

TabularResult parse_tabular(std::string_view text, const TabularSchema& schema) {
  std::vector<std::string_view> lines;
  for (auto l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    lines.push_back(l);
  }
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error(Errc::missing_column, "missing header row");

  std::string_view header_line = lines[first];
  if (header_line.size() >= 3 && header_line.substr(0, 3) == "\xEF\xBB\xBF") header_line.remove_prefix(3);
  char delim = schema.delimiter;
  if (delim == '\0') {
    delim = ',';
    std::size_t best = 0;
    for (char c : {',', ';', '\t'}) {
      const auto n = static_cast<std::size_t>(std::count(header_line.begin(), header_line.end(), c));
      if (n > best) best = n, delim = c;
    }
  }
  const auto header = split_delimited(header_line, delim);

  const auto require = [&](const std::vector<std::string>& names) {
    const int col = find_column(header, names);
    if (col < 0) {
      throw Error(Errc::missing_column,
                  "missing mandatory column '" + (names.empty() ? std::string("?") : names.front()) + "'");
    }
    return col;
  };
  const int c_id = require(schema.vessel_id);
  const int c_time = require(schema.timestamp);
  const int c_lat = require(schema.latitude);
  const int c_lon = require(schema.longitude);
  const int c_sog = find_column(header, schema.sog);
  const int c_cog = find_column(header, schema.cog);
  const int c_heading = find_column(header, schema.heading);
  const int c_type = find_column(header, schema.ship_type);
  const int c_length = find_column(header, schema.length);
  const int c_width = find_column(header, schema.width);

  TabularResult out;
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto row = split_delimited(lines[i], delim);
    if (row.size() != header.size()) {
      ++out.skipped_rows;
      continue;
    }
    try {
      AisRecord rec;
      const auto id = parse_number<std::uint64_t>(row[static_cast<std::size_t>(c_id)]);
      const auto ts = parse_timestamp(row[static_cast<std::size_t>(c_time)]);
      const auto lat = parse_number<double>(row[static_cast<std::size_t>(c_lat)]);
      const auto lon = parse_number<double>(row[static_cast<std::size_t>(c_lon)]);
      if (!id || !ts || *ts <= 0 || !lat || !lon) throw Error(Errc::parse_error, "mandatory field");
      rec.vessel_id = *id;
      rec.timestamp = *ts;
      if (std::abs(*lon) > 180.0) throw Error(Errc::parse_error, "longitude range");
      rec.position = make_geo_point(*lat, *lon);

      rec.sog = optional_double(row, c_sog);
      if (rec.sog && (*rec.sog < 0.0 || *rec.sog >= 102.3)) rec.sog.reset();
      rec.cog = optional_double(row, c_cog);
      if (rec.cog && (*rec.cog < 0.0 || *rec.cog >= 360.0)) rec.cog.reset();
      rec.heading = optional_double(row, c_heading);
      if (rec.heading && (*rec.heading < 0.0 || *rec.heading >= 360.0)) rec.heading.reset();
      if (auto t = optional_double(row, c_type)) {
        if (*t != std::floor(*t)) throw Error(Errc::parse_error, "ship type");
        if (*t > 0) rec.ship_type = static_cast<int>(*t);
      }
      rec.length = optional_double(row, c_length);
      if (rec.length && *rec.length <= 0.0) rec.length.reset();
      rec.width = optional_double(row, c_width);
      if (rec.width && *rec.width <= 0.0) rec.width.reset();
      out.records.push_back(std::move(rec));
    } catch (const Error&) {
      ++out.skipped_rows;
    }
  }
  return out;
}

TabularResult load_tabular(const std::filesystem::path& path, const TabularSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto result = parse_tabular(ss.str(), schema);
  if (result.skipped_rows > 0) spdlog::warn("{}: skipped {} rows", path.string(), result.skipped_rows);
  return result;
}

// -- tracks ------------------------------------------------------------------

namespace {

// Total order on records; used to make track building permutation invariant.
auto record_key(const AisRecord& r) {
  return std::tie(r.vessel_id, r.timestamp, r.position.lat, r.position.lon, r.sog, r.cog, r.heading,
                  r.ship_type, r.length, r.width, r.message_type);
}

}  // namespace

TrackSet build_tracks(std::span<const AisRecord> records) {
  std::vector<AisRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const AisRecord& a, const AisRecord& b) { return record_key(a) < record_key(b); });
  TrackSet out;
  for (auto& rec : sorted) {
    auto& track = out.tracks[rec.vessel_id];
    track.vessel_id = rec.vessel_id;
    if (!track.fixes.empty() && track.fixes.back().timestamp == rec.timestamp) {
      if (track.fixes.back() == rec) {
        ++out.duplicates_removed;
      } else {
        ++out.conflicts;
      }
      continue;
    }
    track.fixes.push_back(std::move(rec));
  }
  return out;
}

std::optional<PositionEstimate> interpolate_position(const VesselTrack& track, TimestampMs t,
                                                     double window_s) {
  if (track.fixes.empty()) return std::nullopt;
  const auto window = static_cast<TimestampMs>(std::llround(window_s * 1000.0));
  const auto& fixes = track.fixes;
  const auto after = std::lower_bound(fixes.begin(), fixes.end(), t,
                                      [](const AisRecord& r, TimestampMs v) { return r.timestamp < v; });

  if (after != fixes.end() && after->timestamp == t) {
    return PositionEstimate{after->position, *after, PositionSource::Exact};
  }
  const AisRecord* next = (after != fixes.end() && after->timestamp - t <= window) ? &*after : nullptr;
  const AisRecord* prev =
      (after != fixes.begin() && t - std::prev(after)->timestamp <= window) ? &*std::prev(after) : nullptr;

  if (prev && next) {
    const double span = static_cast<double>(next->timestamp - prev->timestamp);
    const double u = static_cast<double>(t - prev->timestamp) / span;
    const auto lerp = [u](double a, double b) {
      return std::clamp(a + u * (b - a), std::min(a, b), std::max(a, b));
    };
    const GeoPoint p{lerp(prev->position.lat, next->position.lat),
                     lerp(prev->position.lon, next->position.lon)};
    const AisRecord& nearest = (t - prev->timestamp <= next->timestamp - t) ? *prev : *next;
    return PositionEstimate{p, nearest, PositionSource::Interpolated};
  }
  const AisRecord* only = prev ? prev : next;
  if (!only) return std::nullopt;
  return PositionEstimate{only->position, *only, PositionSource::Raw};
}

// -- anonymizers ---------------------------------------------------------------

std::uint64_t SequentialAnonymizer::anonymize(VesselId id) {
  std::lock_guard lock(mutex_);
  auto [it, inserted] = ids_.try_emplace(id, ids_.size() + 1);
  return it->second;
}

std::uint64_t SaltedHashAnonymizer::anonymize(VesselId id) {
  std::uint64_t h = 14695981039346656037ull;
  const auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (char c : salt_) mix(static_cast<unsigned char>(c));
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>((id >> (8 * i)) & 0xFF));
  return 100000000ull + h % 900000000ull;
}

std::unique_ptr<Anonymizer> make_anonymizer(std::string_view spec) {
  if (spec == "identity") return std::make_unique<IdentityAnonymizer>();
  if (spec == "sequential" || spec.empty()) return std::make_unique<SequentialAnonymizer>();
  if (spec.substr(0, 5) == "hash:") return std::make_unique<SaltedHashAnonymizer>(std::string(spec.substr(5)));
  throw Error(Errc::config_error, "unknown anonymizer '" + std::string(spec) + "'");
}

}  // namespace aisfuse
