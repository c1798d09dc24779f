#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctcurve {

enum class ErrorCode {
  domain,
  pole,
  invalid_spec,
  non_convergence,
  degenerate_curve,
  recurrence_breakdown,
  ill_conditioned,
  numeric_inconsistency,
  unsupported_t0,
  path_disagreement,
  integration_failure,
  config,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::pole: return "pole";
    case ErrorCode::invalid_spec: return "invalid_spec";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::degenerate_curve: return "degenerate_curve";
    case ErrorCode::recurrence_breakdown: return "recurrence_breakdown";
    case ErrorCode::ill_conditioned: return "ill_conditioned";
    case ErrorCode::numeric_inconsistency: return "numeric_inconsistency";
    case ErrorCode::unsupported_t0: return "unsupported_t0";
    case ErrorCode::path_disagreement: return "path_disagreement";
    case ErrorCode::integration_failure: return "integration_failure";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

/// Library-wide exception. `at_t` names the curve parameter where a numeric
/// failure happened, when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<double> at_t = std::nullopt)
      : std::runtime_error(what), code_(code), at_t_(at_t) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<double>& at_t() const noexcept { return at_t_; }

 private:
  ErrorCode code_;
  std::optional<double> at_t_;
};

}  // namespace ctcurve
