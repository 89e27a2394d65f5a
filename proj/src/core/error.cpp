#include "mrflow/core/error.hpp"

namespace mrflow {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kMalformedConfig: return "MalformedConfig";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kUnknownFunction: return "UnknownFunction";
    case Errc::kTruncatedRecord: return "TruncatedRecord";
    case Errc::kOversizeLength: return "OversizeLength";
    case Errc::kNonTextRecord: return "NonTextRecord";
    case Errc::kStoreUnavailable: return "StoreUnavailable";
    case Errc::kAccessDenied: return "AccessDenied";
    case Errc::kNoSuchObject: return "NoSuchObject";
    case Errc::kInvalidRange: return "InvalidRange";
    case Errc::kPartTooSmall: return "PartTooSmall";
    case Errc::kAbortedUpload: return "AbortedUpload";
    case Errc::kIllegalTransition: return "IllegalTransition";
    case Errc::kNoSuchJob: return "NoSuchJob";
    case Errc::kNoSuchAssignment: return "NoSuchAssignment";
    case Errc::kPhaseMismatch: return "PhaseMismatch";
    case Errc::kMetastoreUnavailable: return "MetastoreUnavailable";
    case Errc::kBusUnavailable: return "BusUnavailable";
    case Errc::kUnknownTopic: return "UnknownTopic";
    case Errc::kSpawnFailure: return "SpawnFailure";
    case Errc::kUnsortedInput: return "UnsortedInput";
    case Errc::kInvalidPipeline: return "InvalidPipeline";
    case Errc::kCoordinatorUnreachable: return "CoordinatorUnreachable";
    case Errc::kPollTimeout: return "PollTimeout";
    case Errc::kJobNotCompleted: return "JobNotCompleted";
    case Errc::kUdfFailure: return "UdfFailure";
    case Errc::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error("[" + std::string(errc_name(code)) + "] " + message),
      code_(code),
      detail_(message) {}

}  // namespace mrflow
