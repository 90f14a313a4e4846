#include "mleval/error.hpp"

namespace mleval {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DuplicateToken: return "DuplicateToken";
    case Errc::TruncatedRecord: return "TruncatedRecord";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateImage: return "DuplicateImage";
    case Errc::BadConfidence: return "BadConfidence";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::EmptyTruth: return "EmptyTruth";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::EmptyLedger: return "EmptyLedger";
    case Errc::EmptyBag: return "EmptyBag";
    case Errc::UnresolvedToken: return "UnresolvedToken";
    case Errc::InfeasibleMarginals: return "InfeasibleMarginals";
    case Errc::NumericalFailure: return "NumericalFailure";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::DimensionInconsistent: return "DimensionInconsistent";
    case Errc::CacheCorrupt: return "CacheCorrupt";
    case Errc::AuthMissing: return "AuthMissing";
    case Errc::QuotaExhausted: return "QuotaExhausted";
    case Errc::UpstreamError: return "UpstreamError";
    case Errc::EmptyReport: return "EmptyReport";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_upstream(Errc code) noexcept {
  switch (code) {
    case Errc::ProviderUnavailable:
    case Errc::AuthMissing:
    case Errc::QuotaExhausted:
    case Errc::UpstreamError:
      return true;
    default:
      return false;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace mleval
