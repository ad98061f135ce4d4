#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aisfuse/types.hpp"

namespace aisfuse {

using VesselId = std::uint64_t;

/// One decoded AIS fix. Optional fields are empty when the source marked
/// them "not available" or did not carry them.
struct AisRecord {
  VesselId vessel_id = 0;
  TimestampMs timestamp = 0;
  GeoPoint position;
  std::optional<double> sog;      // knots
  std::optional<double> cog;      // degrees
  std::optional<double> heading;  // degrees
  std::optional<int> ship_type;
  std::optional<double> length;  // meters
  std::optional<double> width;   // meters
  int message_type = 0;          // 0 when loaded from tabular data

  friend bool operator==(const AisRecord&, const AisRecord&) = default;
};

struct VesselTrack {
  VesselId vessel_id = 0;
  std::vector<AisRecord> fixes;  // strictly increasing timestamps
};

// -- NMEA --------------------------------------------------------------------

/// Six-bit value of a payload character, or -1 outside the armoring alphabet.
int armor_value(char c);

/// XOR checksum over the characters between the leading '!' or '$' and '*'.
bool nmea_checksum_ok(std::string_view sentence);

/// Big-endian bit reader over a de-armored payload.
class BitReader {
 public:
  /// Throws Errc::parse_error on characters outside the alphabet.
  BitReader(std::string_view payload, int fill_bits);

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint32_t unsigned_at(std::size_t start, std::size_t len) const;
  std::int32_t signed_at(std::size_t start, std::size_t len) const;
  std::string text_at(std::size_t start, std::size_t len) const;

 private:
  std::vector<bool> bits_;
};

/// Voyage/static data from a type 5 report.
struct StaticReport {
  VesselId vessel_id = 0;
  TimestampMs timestamp = 0;
  int ship_type = 0;
  int to_bow = 0;
  int to_stern = 0;
  int to_port = 0;
  int to_starboard = 0;
  std::string name;
};

struct DecodeStats {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::size_t static_reports = 0;
  std::size_t checksum_errors = 0;
  std::size_t malformed = 0;
  std::size_t truncated = 0;
  std::size_t unsupported_type = 0;
  std::size_t position_unavailable = 0;
  std::size_t missing_timestamp = 0;
  std::size_t incomplete_fragments = 0;
};

/// Streaming AIVDM/AIVDO decoder for message types 1, 2, 3, 5 and 18.
///
/// Each line may carry its own receive time as an NMEA 4.0 tag block
/// (`\c:<epoch>*hh\`), as a leading field before the '!', or as a trailing
/// field after the checksum. Lines without one use the fallback timestamp.
/// Multi-fragment messages are reassembled per (channel, sequence id).
/// Static fields from type 5 reports are merged into later position reports
/// of the same vessel, last write wins.
class NmeaDecoder {
 public:
  explicit NmeaDecoder(TimestampMs fallback_timestamp = 0) : fallback_(fallback_timestamp) {}

  std::optional<AisRecord> feed(std::string_view line);

  const DecodeStats& stats() const noexcept { return stats_; }
  const std::vector<StaticReport>& static_reports() const noexcept { return statics_; }
  void set_fallback_timestamp(TimestampMs t) { fallback_ = t; }

 private:
  struct Pending {
    int total = 0;
    int next = 1;
    std::string payload;
    TimestampMs timestamp = 0;
  };
  struct StaticFields {
    std::optional<int> ship_type;
    std::optional<double> length;
    std::optional<double> width;
  };

  std::optional<AisRecord> decode_payload(const std::string& payload, int fill_bits, TimestampMs ts);

  TimestampMs fallback_;
  DecodeStats stats_;
  std::map<std::string, Pending> pending_;
  std::map<VesselId, StaticFields> static_fields_;
  std::vector<StaticReport> statics_;
};

struct DecodeResult {
  std::vector<AisRecord> records;
  std::vector<StaticReport> static_reports;
  DecodeStats stats;
};

DecodeResult decode_sentences(std::span<const std::string> lines, TimestampMs fallback_timestamp = 0);
DecodeResult decode_nmea_file(const std::filesystem::path& path, TimestampMs fallback_timestamp = 0);

// -- tabular -----------------------------------------------------------------

/// Accepted header names per field, matched case-insensitively. The first
/// four are mandatory.
struct TabularSchema {
  std::vector<std::string> vessel_id{"vessel_id", "mmsi", "unique_id", "id"};
  std::vector<std::string> timestamp{"timestamp", "time", "datetime", "basedatetime"};
  std::vector<std::string> latitude{"latitude", "lat"};
  std::vector<std::string> longitude{"longitude", "lon", "lng"};
  std::vector<std::string> sog{"speed", "sog"};
  std::vector<std::string> cog{"course", "cog"};
  std::vector<std::string> heading{"heading", "true_heading"};
  std::vector<std::string> ship_type{"type", "ship_type", "shiptype", "vesseltype"};
  std::vector<std::string> length{"length"};
  std::vector<std::string> width{"width", "beam"};
  char delimiter = '\0';  // '\0' detects one of , ; tab from the header
};

struct TabularResult {
  std::vector<AisRecord> records;
  std::size_t skipped_rows = 0;
};

/// Throws Errc::missing_column naming the absent mandatory column and
/// Errc::io_error if the file cannot be read.
TabularResult load_tabular(const std::filesystem::path& path, const TabularSchema& schema = {});
TabularResult parse_tabular(std::string_view text, const TabularSchema& schema = {});

// -- tracks ------------------------------------------------------------------

struct TrackSet {
  std::map<VesselId, VesselTrack> tracks;
  std::size_t duplicates_removed = 0;
  std::size_t conflicts = 0;  // same vessel and timestamp, different content
};

/// Groups by vessel and sorts by time. Of several records sharing a vessel
/// and timestamp, the smallest under a fixed total order on the record
/// fields is kept, so the result does not depend on input order.
TrackSet build_tracks(std::span<const AisRecord> records);

enum class PositionSource {
  Interpolated,  // linear in time between two bracketing fixes
  Exact,         // query time coincides with a fix
  Raw,           // one-sided coverage; nearest fix within the window
};

struct PositionEstimate {
  GeoPoint position;
  AisRecord snapshot;  // kinematic and static fields of the nearest fix
  PositionSource source = PositionSource::Raw;
};

/// Constant-speed position at time t from fixes within +-window_s seconds.
/// Returns nullopt when no fix lies inside the window.
std::optional<PositionEstimate> interpolate_position(const VesselTrack& track, TimestampMs t,
                                                     double window_s);

// -- anonymization -------------------------------------------------------------

class Anonymizer {
 public:
  virtual ~Anonymizer() = default;
  virtual std::uint64_t anonymize(VesselId id) = 0;
};

class IdentityAnonymizer final : public Anonymizer {
 public:
  std::uint64_t anonymize(VesselId id) override { return id; }
};

/// 1, 2, 3, ... in first-seen order.
class SequentialAnonymizer final : public Anonymizer {
 public:
  std::uint64_t anonymize(VesselId id) override;

 private:
  std::mutex mutex_;
  std::map<VesselId, std::uint64_t> ids_;
};

/// Salted 64-bit FNV-1a, folded to 9 decimal digits.
class SaltedHashAnonymizer final : public Anonymizer {
 public:
  explicit SaltedHashAnonymizer(std::string salt) : salt_(std::move(salt)) {}
  std::uint64_t anonymize(VesselId id) override;

 private:
  std::string salt_;
};

/// "identity", "sequential" or "hash:<salt>".
std::unique_ptr<Anonymizer> make_anonymizer(std::string_view spec);

}  // namespace aisfuse
