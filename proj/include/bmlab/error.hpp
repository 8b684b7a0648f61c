#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmlab {

/// Every failure the library reports carries one of these codes; the CLI maps
/// the groups onto process exit codes.
enum class Errc {
  // scenario / input validation
  EmptyNeighborhood,
  SupportMismatch,
  MassNotOne,
  NonMonotoneWeights,
  NoPositiveAdvertiser,
  InvalidInput,
  ParseError,
  // numerical
  ZeroDensity,
  NoRoot,
  DomainError,
  UnboundedSupport,
  ZeroWelfareEquilibrium,
  // search limits
  TooLarge,
  NotSingleSlot,
  Uncoverable,
  EmptyStrings,
  ParameterRange,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject, const std::string& detail = {});

  Errc code() const noexcept { return code_; }
  /// The vertex, query, key or parameter the error is about.
  const std::string& subject() const noexcept { return subject_; }

 private:
  Errc code_;
  std::string subject_;
};

bool is_validation_error(Errc code) noexcept;

/// 0 ok, 2 validation, 3 too large, 4 parameter range, 1 anything else.
int exit_code_for(Errc code) noexcept;

}  // namespace bmlab
