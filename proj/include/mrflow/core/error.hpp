#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mrflow {

enum class Errc {
  kMalformedConfig,
  kInvalidConfig,
  kUnknownFunction,
  kTruncatedRecord,
  kOversizeLength,
  kNonTextRecord,
  kStoreUnavailable,
  kAccessDenied,
  kNoSuchObject,
  kInvalidRange,
  kPartTooSmall,
  kAbortedUpload,
  kIllegalTransition,
  kNoSuchJob,
  kNoSuchAssignment,
  kPhaseMismatch,
  kMetastoreUnavailable,
  kBusUnavailable,
  kUnknownTopic,
  kSpawnFailure,
  kUnsortedInput,
  kInvalidPipeline,
  kCoordinatorUnreachable,
  kPollTimeout,
  kJobNotCompleted,
  kUdfFailure,
  kInvalidArgument,
};

std::string_view errc_name(Errc code);

// Every failure surfaced by the framework carries one of the codes above so
// callers (and the HTTP layer) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  // Message without the "[Code] " prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace mrflow
