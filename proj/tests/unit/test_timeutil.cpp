#include <gtest/gtest.h>

#include "aisfuse/timeutil.hpp"

using namespace aisfuse;

TEST(Iso8601, ParsesVariants) {
  EXPECT_EQ(parse_iso8601("1970-01-01T00:00:00Z"), 0);
  EXPECT_EQ(parse_iso8601("2023-11-14T22:13:20Z"), 1'700'000'000'000);
  EXPECT_EQ(parse_iso8601("2023-11-14 22:13:20.250"), 1'700'000'000'250);
  EXPECT_EQ(parse_iso8601("2023-11-15T00:13:20+02:00"), 1'700'000'000'000);
  EXPECT_EQ(parse_iso8601("2000-02-29T00:00:00Z"), 951'782'400'000);
  EXPECT_FALSE(parse_iso8601("2023-13-01T00:00:00Z"));
  EXPECT_FALSE(parse_iso8601("yesterday"));
}

TEST(Iso8601, FormatRoundTrips) {
  EXPECT_EQ(format_iso8601(1'700'000'000'250), "2023-11-14T22:13:20.250Z");
  for (TimestampMs t : {0LL, 951'782'400'000LL, 1'700'000'000'001LL, -1000LL}) {
    EXPECT_EQ(parse_iso8601(format_iso8601(t)), t);
  }
}

TEST(Timestamp, NumbersAsSecondsOrMilliseconds) {
  EXPECT_EQ(parse_timestamp("1700000000"), 1'700'000'000'000);
  EXPECT_EQ(parse_timestamp("1700000000.5"), 1'700'000'000'500);
  EXPECT_EQ(parse_timestamp("1700000000000"), 1'700'000'000'000);
  EXPECT_EQ(parse_timestamp("2023-11-14T22:13:20Z"), 1'700'000'000'000);
  EXPECT_FALSE(parse_timestamp(""));
}
