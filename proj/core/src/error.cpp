#include "gold/error.hpp"

namespace gold {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MissingId: return "MissingId";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NoUserTurn: return "NoUserTurn";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::EmptyMatch: return "EmptyMatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::SingletonIntent: return "SingletonIntent";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingleClassScores: return "SingleClassScores";
    case ErrorCode::UntunedVoter: return "UntunedVoter";
    case ErrorCode::ExhaustedSourcePool: return "ExhaustedSourcePool";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace gold
