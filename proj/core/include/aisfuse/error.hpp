#pragma once

#include <stdexcept>
#include <string>

namespace aisfuse {

enum class Errc {
  invalid_argument,
  degenerate_configuration,
  non_convergence,
  point_at_infinity,
  not_invertible,
  parse_error,
  missing_column,
  io_error,
  config_error,
  undefined_correlation,
};

const char* to_string(Errc code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace aisfuse
