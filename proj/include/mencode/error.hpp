#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mencode {

enum class ErrorCode {
  // data
  UnknownLabel,
  MalformedRecord,
  EmptyInput,
  ConstantColumn,
  TooFewRows,
  SampleTooLarge,
  InvalidSchema,
  // model / estimators
  PreconditionViolation,
  SchemaMismatch,
  NotNaiveBayes,
  NoInteriorMode,
  NonPositiveHyper,
  BoundaryParameter,
  OutOfRangeValue,
  // codelab
  BoundaryTheta,
  NonpositivePrecision,
  ZeroPriorDensity,
  NoInteriorMaximum,
  InstanceTooLarge,
  UncoveredOutcome,
  // eval
  ZeroProbability,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a MAP fit has no interior maximum: some cell has
/// f + mu - 1 <= 0. Carries the offending cell and, when known, the
/// smallest equivalent sample size on the 0.5 * 2^j ladder that would
/// make the fit feasible.
class NoInteriorMode : public Error {
 public:
  NoInteriorMode(std::size_t variable, std::size_t config, std::size_t value,
                 std::optional<double> ess_hint = std::nullopt);

  std::size_t variable() const noexcept { return variable_; }
  std::size_t config() const noexcept { return config_; }
  std::size_t value() const noexcept { return value_; }
  std::optional<double> ess_hint() const noexcept { return ess_hint_; }

  NoInteriorMode with_hint(double ess) const;

 private:
  std::size_t variable_;
  std::size_t config_;
  std::size_t value_;
  std::optional<double> ess_hint_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace mencode
