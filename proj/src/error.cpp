#include "bmlab/error.hpp"

namespace bmlab {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyNeighborhood: return "EmptyNeighborhood";
    case Errc::SupportMismatch: return "SupportMismatch";
    case Errc::MassNotOne: return "MassNotOne";
    case Errc::NonMonotoneWeights: return "NonMonotoneWeights";
    case Errc::NoPositiveAdvertiser: return "NoPositiveAdvertiser";
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::ParseError: return "ParseError";
    case Errc::ZeroDensity: return "ZeroDensity";
    case Errc::NoRoot: return "NoRoot";
    case Errc::DomainError: return "DomainError";
    case Errc::UnboundedSupport: return "UnboundedSupport";
    case Errc::ZeroWelfareEquilibrium: return "ZeroWelfareEquilibrium";
    case Errc::TooLarge: return "TooLarge";
    case Errc::NotSingleSlot: return "NotSingleSlot";
    case Errc::Uncoverable: return "Uncoverable";
    case Errc::EmptyStrings: return "EmptyStrings";
    case Errc::ParameterRange: return "ParameterRange";
  }
  return "Unknown";
}

namespace {

std::string format_message(Errc code, const std::string& subject,
                           const std::string& detail) {
  std::string msg(to_string(code));
  if (!subject.empty()) msg += "(" + subject + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(Errc code, std::string subject, const std::string& detail)
    : std::runtime_error(format_message(code, subject, detail)),
      code_(code),
      subject_(std::move(subject)) {}

bool is_validation_error(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyNeighborhood:
    case Errc::SupportMismatch:
    case Errc::MassNotOne:
    case Errc::NonMonotoneWeights:
    case Errc::NoPositiveAdvertiser:
    case Errc::InvalidInput:
    case Errc::ParseError:
      return true;
    default:
      return false;
  }
}

int exit_code_for(Errc code) noexcept {
  if (is_validation_error(code)) return 2;
  if (code == Errc::TooLarge) return 3;
  if (code == Errc::ParameterRange) return 4;
  return 1;
}

}  // namespace bmlab
