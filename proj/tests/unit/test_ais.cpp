#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "aisfuse/ais.hpp"
#include "aisfuse/error.hpp"
#include "fixtures.hpp"

using namespace aisfuse;

TEST(Armor, CharacterValues) {
  EXPECT_EQ(armor_value('0'), 0);
  EXPECT_EQ(armor_value('W'), 39);
  EXPECT_EQ(armor_value('`'), 40);
  EXPECT_EQ(armor_value('w'), 63);  // 119 - 48 - 8
  EXPECT_EQ(armor_value('X'), -1);
  EXPECT_EQ(armor_value('x'), -1);
}

TEST(Armor, BitReaderSignedAndText) {
  const BitReader r("w0", 0);
  ASSERT_EQ(r.size(), 12u);
  EXPECT_EQ(r.unsigned_at(0, 6), 63u);
  EXPECT_EQ(r.signed_at(0, 6), -1);
  EXPECT_EQ(r.unsigned_at(6, 6), 0u);
  EXPECT_THROW(BitReader("x", 0), Error);
}

TEST(Checksum, ValidAndCorrupted) {
  EXPECT_TRUE(nmea_checksum_ok("!AIVDM,1,1,,B,15NG6V0P01G?cFhE`R2IU?wn28R>,0*05"));
  EXPECT_FALSE(nmea_checksum_ok("!AIVDM,1,1,,B,15NG6V0P01G?cFhE`R2IU?wn28R>,0*06"));
  EXPECT_FALSE(nmea_checksum_ok("!AIVDM,1,1,,B,15NG6V0P01G?cFhE`R2IU?wn28R>,0"));
}

TEST(Decoder, CorruptedLineIsCountedAndSkipped) {
  NmeaDecoder d;
  EXPECT_FALSE(d.feed("!AIVDM,1,1,,B,15NG6V0P01G?cFhE`R2IU?wn28R>,0*06"));
  EXPECT_EQ(d.stats().checksum_errors, 1u);
  EXPECT_EQ(d.stats().records, 0u);
}

TEST(Decoder, MatchesReferenceDecoder) {
  std::ifstream in(fixtures::data_dir() / "ais_reference.json");
  ASSERT_TRUE(in);
  const auto ref = nlohmann::json::parse(in);
  const auto sentences = ref.at("sentences").get<std::vector<std::string>>();
  ASSERT_EQ(sentences.size(), 20u);
  const DecodeResult out = decode_sentences(sentences, 1'700'000'000'000);
  EXPECT_EQ(out.stats.checksum_errors, 0u);

  std::size_t pos = 0, stat = 0;
  for (const auto& e : ref.at("expected")) {
    if (e.at("kind") == "position") {
      ASSERT_LT(pos, out.records.size());
      const AisRecord& r = out.records[pos++];
      EXPECT_EQ(r.vessel_id, e.at("mmsi").get<VesselId>());
      EXPECT_EQ(r.message_type, e.at("type").get<int>());
      EXPECT_EQ(std::llround(r.position.lat * 600000.0), e.at("lat_raw").get<long long>());
      EXPECT_EQ(std::llround(r.position.lon * 600000.0), e.at("lon_raw").get<long long>());
      ASSERT_TRUE(r.sog);
      EXPECT_DOUBLE_EQ(*r.sog, e.at("speed").get<double>());
      ASSERT_TRUE(r.cog);
      EXPECT_DOUBLE_EQ(*r.cog, e.at("course").get<double>());
      const int heading = e.at("heading").get<int>();
      if (heading == 511) {
        EXPECT_FALSE(r.heading);
      } else {
        ASSERT_TRUE(r.heading);
        EXPECT_EQ(*r.heading, heading);
      }
      EXPECT_EQ(r.timestamp, 1'700'000'000'000);
    } else if (e.at("kind") == "static") {
      ASSERT_LT(stat, out.static_reports.size());
      const StaticReport& s = out.static_reports[stat++];
      EXPECT_EQ(s.vessel_id, e.at("mmsi").get<VesselId>());
      EXPECT_EQ(s.ship_type, e.at("ship_type").get<int>());
      EXPECT_EQ(s.to_bow, e.at("to_bow").get<int>());
      EXPECT_EQ(s.to_stern, e.at("to_stern").get<int>());
      EXPECT_EQ(s.to_port, e.at("to_port").get<int>());
      EXPECT_EQ(s.to_starboard, e.at("to_starboard").get<int>());
      EXPECT_EQ(s.name, e.at("shipname").get<std::string>());
    }
  }
  EXPECT_EQ(pos, out.records.size());
  EXPECT_EQ(stat, out.static_reports.size());
}

TEST(Decoder, LineTimestampsInAllPositions) {
  const std::string s = "!AIVDM,1,1,,B,15NG6V0P01G?cFhE`R2IU?wn28R>,0*05";
  NmeaDecoder d(5);
  EXPECT_EQ(d.feed("\\c:1700000000*00\\" + s)->timestamp, 1'700'000'000'000);
  EXPECT_EQ(d.feed("2023-11-14T22:13:21Z," + s)->timestamp, 1'700'000'001'000);
  EXPECT_EQ(d.feed(s + ",1700000002500")->timestamp, 1'700'000'002'500);
  EXPECT_EQ(d.feed(s)->timestamp, 5);
}

namespace {

// Minimal type 1 encoder for crafted sentences.
std::string position_sentence(std::uint32_t mmsi, double lat, double lon, int sog10, int cog10, int heading) {
  std::vector<bool> bits(168, false);
  auto put = [&](std::size_t at, std::size_t len, std::int64_t v) {
    for (std::size_t i = 0; i < len; ++i) bits[at + i] = (v >> (len - 1 - i)) & 1;
  };
  put(0, 6, 1);
  put(8, 30, mmsi);
  put(50, 10, sog10);
  put(61, 28, std::llround(lon * 600000.0) & 0xFFFFFFF);
  put(89, 27, std::llround(lat * 600000.0) & 0x7FFFFFF);
  put(116, 12, cog10);
  put(128, 9, heading);
  std::string payload;
  for (std::size_t i = 0; i < bits.size(); i += 6) {
    int v = 0;
    for (std::size_t k = 0; k < 6; ++k) v = v * 2 + bits[i + k];
    payload.push_back(static_cast<char>(v < 40 ? v + 48 : v + 56));
  }
  const std::string body = "AIVDM,1,1,,A," + payload + ",0";
  int cs = 0;
  for (char c : body) cs ^= c;
  char tail[8];
  std::snprintf(tail, sizeof tail, "*%02X", cs);
  return "!" + body + tail;
}

}  // namespace

TEST(Decoder, CraftedPositionRoundTrips) {
  NmeaDecoder d(1'700'000'000'000);
  const auto r = d.feed(position_sentence(211000001, 53.542968, -9.935401, 87, 2714, 268));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->vessel_id, 211000001u);
  EXPECT_NEAR(r->position.lat, 53.542968, 1e-6);
  EXPECT_NEAR(r->position.lon, -9.935401, 1e-6);
  EXPECT_EQ(r->sog, 8.7);
  EXPECT_EQ(r->cog, 271.4);
  EXPECT_EQ(r->heading, 268.0);
  EXPECT_FALSE(d.feed(position_sentence(211000001, 91.0, 9.9, 0, 0, 0)));
  EXPECT_EQ(d.stats().position_unavailable, 1u);
  NmeaDecoder untimed;
  EXPECT_FALSE(untimed.feed(position_sentence(211000001, 53.5, 9.9, 0, 0, 0)));
  EXPECT_EQ(untimed.stats().missing_timestamp, 1u);
}

TEST(Decoder, StaticFieldsMergeIntoLaterPositions) {
  NmeaDecoder d(1'700'000'000'000);
  EXPECT_FALSE(d.feed("!AIVDM,2,1,1,A,55?MbV02;H;s<HtKR20EHE:0@T4@Dn2222222216L961O5Gf0NSQEp6ClRp8,0*1C"));
  EXPECT_FALSE(d.feed("!AIVDM,2,2,1,A,88888888880,2*25"));
  ASSERT_EQ(d.static_reports().size(), 1u);
  const auto r = d.feed(position_sentence(351759000, 53.5, 9.9, 100, 900, 90));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->ship_type, 70);
  EXPECT_EQ(r->length, 295.0);
  EXPECT_EQ(r->width, 32.0);
}

TEST(Decoder, FragmentOutOfOrderIsIncomplete) {
  NmeaDecoder d;
  EXPECT_FALSE(d.feed("!AIVDM,2,2,1,A,88888888880,2*25"));
  EXPECT_EQ(d.stats().incomplete_fragments, 1u);
}

TEST(Tabular, ListingRowRoundTrip) {
  const auto r = parse_tabular(
      "mmsi,timestamp,latitude,longitude,heading,course,length,width,speed,type\n"
      "211000001,2023-05-04T10:00:00Z,53.542968,9.935401,268.3,271.38,29,7,8.73,70\n");
  ASSERT_EQ(r.records.size(), 1u);
  const AisRecord& a = r.records[0];
  EXPECT_EQ(a.vessel_id, 211000001u);
  EXPECT_EQ(a.position.lat, 53.542968);
  EXPECT_EQ(a.position.lon, 9.935401);
  EXPECT_EQ(a.heading, 268.3);
  EXPECT_EQ(a.cog, 271.38);
  EXPECT_EQ(a.length, 29.0);
  EXPECT_EQ(a.width, 7.0);
  EXPECT_EQ(a.sog, 8.73);
  EXPECT_EQ(a.ship_type, 70);
  EXPECT_EQ(a.message_type, 0);
}

TEST(Tabular, HeaderOnlyIsEmpty) {
  EXPECT_TRUE(parse_tabular("mmsi;time;lat;lon\n").records.empty());
}

TEST(Tabular, MissingLongitudeNamesTheColumn) {
  try {
    parse_tabular("mmsi,timestamp,latitude\n1,2023-05-04T10:00:00Z,53.5\n");
    FAIL() << "no exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_column);
    EXPECT_NE(std::string(e.what()).find("longitude"), std::string::npos);
  }
}

TEST(Tabular, BadRowsAreSkippedAndUnknownsEmpty) {
  const auto r = parse_tabular(
      "id\tdatetime\tlat\tlon\tsog\n"
      "7\t1700000000\t53.5\t9.9\tNA\n"
      "8\tnot-a-time\t53.5\t9.9\t1\n"
      "9\t1700000000\t95.0\t9.9\t1\n");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_FALSE(r.records[0].sog);
  EXPECT_EQ(r.records[0].timestamp, 1'700'000'000'000);
  EXPECT_EQ(r.skipped_rows, 2u);
}

TEST(Tracks, DuplicatesAndOrdering) {
  AisRecord a;
  a.vessel_id = 1;
  a.timestamp = 10;
  AisRecord b = a;
  b.timestamp = 5;
  AisRecord c = a;
  c.vessel_id = 2;
  const std::vector<AisRecord> recs{a, a, b, c};
  const TrackSet t = build_tracks(recs);
  ASSERT_EQ(t.tracks.size(), 2u);
  ASSERT_EQ(t.tracks.at(1).fixes.size(), 2u);
  EXPECT_EQ(t.tracks.at(1).fixes[0].timestamp, 5);
  EXPECT_EQ(t.duplicates_removed, 1u);
}

// Brute force: sort everything by (vessel, time, every field), keep the first
// record per (vessel, time).
TEST(Tracks, ShuffledInputMatchesSortThenGroup) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> vessel(1, 25), tick(0, 400);
  std::uniform_real_distribution<double> jitter(0.0, 1e-3);
  std::vector<AisRecord> recs;
  for (int i = 0; i < 10000; ++i) {
    AisRecord r;
    r.vessel_id = static_cast<VesselId>(vessel(rng));
    r.timestamp = tick(rng) * 1000;
    r.position = {53.5 + jitter(rng), 9.9 + jitter(rng)};
    if (i % 3 == 0) r.sog = 5.0;
    recs.push_back(r);
    if (i % 50 == 0) recs.push_back(r);
  }
  auto key = [](const AisRecord& r) {
    return std::tie(r.vessel_id, r.timestamp, r.position.lat, r.position.lon, r.sog, r.cog, r.heading, r.ship_type,
                    r.length, r.width, r.message_type);
  };
  std::vector<AisRecord> sorted = recs;
  std::sort(sorted.begin(), sorted.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); });
  std::map<VesselId, std::vector<AisRecord>> expect;
  for (const auto& r : sorted) {
    auto& v = expect[r.vessel_id];
    if (v.empty() || v.back().timestamp != r.timestamp) v.push_back(r);
  }
  for (int round = 0; round < 3; ++round) {
    std::shuffle(recs.begin(), recs.end(), rng);
    const TrackSet t = build_tracks(recs);
    ASSERT_EQ(t.tracks.size(), expect.size());
    for (const auto& [id, fixes] : expect) EXPECT_EQ(t.tracks.at(id).fixes, fixes);
    std::size_t kept = 0;
    for (const auto& [id, fixes] : expect) kept += fixes.size();
    EXPECT_EQ(kept + t.duplicates_removed + t.conflicts, recs.size());
  }
}

namespace {

VesselTrack two_fix_track() {
  AisRecord a, b;
  a.vessel_id = b.vessel_id = 1;
  a.timestamp = 0;
  a.position = {53.0, 9.0};
  a.sog = 4.0;
  b.timestamp = 60'000;
  b.position = {53.0, 9.006};
  b.sog = 6.0;
  return {1, {a, b}};
}

}  // namespace

TEST(Interpolate, NodeIsExact) {
  const auto e = interpolate_position(two_fix_track(), 0, 30.0);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->position, (GeoPoint{53.0, 9.0}));
  EXPECT_EQ(e->source, PositionSource::Exact);
}

TEST(Interpolate, MidpointIsExact) {
  const auto e = interpolate_position(two_fix_track(), 30'000, 30.0);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->position, (GeoPoint{53.0, 9.003}));
  EXPECT_EQ(e->source, PositionSource::Interpolated);
  EXPECT_EQ(e->snapshot.sog, 4.0);  // nearer fix, earlier on a tie
}

TEST(Interpolate, SingleFixFallsBackToRaw) {
  AisRecord f;
  f.timestamp = 10'000;
  f.position = {53.5, 9.9};
  const auto e = interpolate_position({1, {f}}, 25'000, 30.0);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->position, f.position);
  EXPECT_EQ(e->source, PositionSource::Raw);
  EXPECT_FALSE(interpolate_position({1, {f}}, 45'000, 30.0));
}

TEST(Interpolate, StaysWithinBracket) {
  const VesselTrack t = two_fix_track();
  for (TimestampMs q = 1; q < 60'000; q += 997) {
    const auto e = interpolate_position(t, q, 60.0);
    ASSERT_TRUE(e);
    EXPECT_GE(e->position.lon, 9.0);
    EXPECT_LE(e->position.lon, 9.006);
  }
}

TEST(Anonymizers, SequentialHashAndIdentity) {
  SequentialAnonymizer seq;
  EXPECT_EQ(seq.anonymize(500), 1u);
  EXPECT_EQ(seq.anonymize(300), 2u);
  EXPECT_EQ(seq.anonymize(500), 1u);
  SaltedHashAnonymizer h1("a"), h2("a"), h3("b");
  EXPECT_EQ(h1.anonymize(211000001), h2.anonymize(211000001));
  EXPECT_NE(h1.anonymize(211000001), h3.anonymize(211000001));
  EXPECT_LT(h1.anonymize(211000001), 1'000'000'000u);
  EXPECT_EQ(make_anonymizer("identity")->anonymize(42), 42u);
  EXPECT_THROW(make_anonymizer("rot13"), Error);
}
