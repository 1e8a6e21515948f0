#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gold {

// Error kinds surfaced by every module. The CLI reports these by name in its
// machine-readable error JSON, so the spelling of to_string() is stable.
enum class ErrorCode {
  MalformedRecord,
  DuplicateId,
  EmptySplit,
  InsufficientPool,
  InvalidSpec,
  EmptyCorpus,
  MissingId,
  DimMismatch,
  NoUserTurn,
  EmptySource,
  EmptyMatch,
  SingleClass,
  NonFiniteLoss,
  SingletonIntent,
  SingularCovariance,
  SingleClassScores,
  UntunedVoter,
  ExhaustedSourcePool,
  MissingArtifact,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace gold
