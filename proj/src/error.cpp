#include "mencode/error.hpp"

namespace mencode {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SampleTooLarge: return "SampleTooLarge";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NotNaiveBayes: return "NotNaiveBayes";
    case ErrorCode::NoInteriorMode: return "NoInteriorMode";
    case ErrorCode::NonPositiveHyper: return "NonPositiveHyper";
    case ErrorCode::BoundaryParameter: return "BoundaryParameter";
    case ErrorCode::OutOfRangeValue: return "OutOfRangeValue";
    case ErrorCode::BoundaryTheta: return "BoundaryTheta";
    case ErrorCode::NonpositivePrecision: return "NonpositivePrecision";
    case ErrorCode::ZeroPriorDensity: return "ZeroPriorDensity";
    case ErrorCode::NoInteriorMaximum: return "NoInteriorMaximum";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::UncoveredOutcome: return "UncoveredOutcome";
    case ErrorCode::ZeroProbability: return "ZeroProbability";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

std::string describe_cell(std::size_t variable, std::size_t config, std::size_t value,
                          std::optional<double> hint) {
  std::string msg = "no interior posterior mode at variable " + std::to_string(variable) +
                    ", parent configuration " + std::to_string(config) + ", value " +
                    std::to_string(value);
  if (hint) msg += "; smallest feasible ess is " + std::to_string(*hint);
  return msg;
}

}  // namespace

NoInteriorMode::NoInteriorMode(std::size_t variable, std::size_t config, std::size_t value,
                               std::optional<double> ess_hint)
    : Error(ErrorCode::NoInteriorMode, describe_cell(variable, config, value, ess_hint)),
      variable_(variable),
      config_(config),
      value_(value),
      ess_hint_(ess_hint) {}

NoInteriorMode NoInteriorMode::with_hint(double ess) const {
  return NoInteriorMode(variable_, config_, value_, ess);
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace mencode
