#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "aisfuse/types.hpp"

namespace aisfuse {

/// Accepts "YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM]" with either 'T' or ' ' as the
/// separator. A missing zone designator means UTC.
std::optional<TimestampMs> parse_iso8601(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SS.mmmZ"
std::string format_iso8601(TimestampMs t);

/// ISO-8601 text, or a bare number. Numbers above 1e11 are taken as epoch
/// milliseconds, smaller ones as epoch seconds (fractions allowed).
std::optional<TimestampMs> parse_timestamp(std::string_view text);

}  // namespace aisfuse
