#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heisengap {

enum class Errc {
  empty_domain,
  disconnected_domain,
  precondition,
  index_out_of_range,
  length_mismatch,
  budget_exceeded,
  out_of_range,
  not_enough_trials,
  no_convergence,
  dimension_too_small,
  topology_mismatch,
  zero_vector,
  sigma_mean_positive,
  defect_too_large,
  io,
  parse,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::empty_domain: return "EmptyDomain";
    case Errc::disconnected_domain: return "DisconnectedDomain";
    case Errc::precondition: return "PreconditionViolated";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::budget_exceeded: return "BudgetExceeded";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::not_enough_trials: return "NotEnoughTrials";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::dimension_too_small: return "DimensionTooSmall";
    case Errc::topology_mismatch: return "TopologyMismatch";
    case Errc::zero_vector: return "ZeroVector";
    case Errc::sigma_mean_positive: return "SigmaMeanPositive";
    case Errc::defect_too_large: return "DefectTooLarge";
    case Errc::io: return "IOError";
    case Errc::parse: return "ParseError";
  }
  return "Unknown";
}

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace heisengap
