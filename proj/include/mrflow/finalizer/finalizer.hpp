#pragma once

#include <cstdint>

#include "mrflow/runtime/worker_context.hpp"

namespace mrflow {

struct FinalizeStats {
  std::uint64_t sources = 0;
  std::uint64_t records = 0;
  std::uint64_t bytes_written = 0;
  // Largest read buffer plus largest write buffer observed.
  std::uint64_t peak_buffered_bytes = 0;
};

// Streams reduce-0..R-1 into
// `{output_prefix}/final`: tab-separated text lines, or the binary codec when
// final_binary is set. A missing source object fails with NoSuchObject, a
// non-UTF-8 record in text mode with NonTextRecord; in both cases no final
// object appears.
FinalizeStats run_finalize_task(const WorkerContext& ctx, const JobState& job);

// Worker entry point for FINALIZE events.
bool run_finalize(const WorkerContext& ctx, const TriggerEvent& event);

}  // namespace mrflow
