#include "aisfuse/error.hpp"

namespace aisfuse {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::degenerate_configuration: return "degenerate configuration";
    case Errc::non_convergence: return "non-convergence";
    case Errc::point_at_infinity: return "point at infinity";
    case Errc::not_invertible: return "not invertible";
    case Errc::parse_error: return "parse error";
    case Errc::missing_column: return "missing column";
    case Errc::io_error: return "i/o error";
    case Errc::config_error: return "configuration error";
    case Errc::undefined_correlation: return "undefined correlation";
  }
  return "unknown";
}

}  // namespace aisfuse
