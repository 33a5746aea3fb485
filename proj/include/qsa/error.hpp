#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsa {

enum class ErrorCode {
  InvalidArgument,
  NonFinite,
  PositivityLost,
  StepLimit,
  OutOfSpan,
  NoDeviation,
  NotSuperarrival,
  NoCrossing,
  DegenerateWindow,
  SupportOverflow,
  EdgeLeak,
  SingularSystem,
  NoConvergence,
  Caustic,
  QuadratureNonConvergence,
  AmbiguousDecode,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (sweeps, the protocol decoder) can turn expected failures into
/// flagged results instead of aborting.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace qsa
