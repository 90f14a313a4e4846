#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mleval {

enum class Errc {
  // embeddings
  MalformedHeader,
  DimensionMismatch,
  DuplicateToken,
  TruncatedRecord,
  ZeroVector,
  // labelset
  ParseError,
  DuplicateImage,
  BadConfidence,
  EmptyInput,
  // metrics
  EmptyTruth,
  EmptyDataset,
  EmptyLedger,
  // wmd
  EmptyBag,
  UnresolvedToken,
  InfeasibleMarginals,
  NumericalFailure,
  // sentence similarity
  ProviderUnavailable,
  DimensionInconsistent,
  CacheCorrupt,
  // harness
  AuthMissing,
  QuotaExhausted,
  UpstreamError,
  // reporting
  EmptyReport,
  IoError,
  InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

// Upstream errors map to CLI exit code 3, everything else to 2.
bool is_upstream(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace mleval
