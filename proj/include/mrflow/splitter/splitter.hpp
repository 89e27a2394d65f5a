#pragma once

#include <cstdint>
#include <vector>

#include "mrflow/runtime/worker_context.hpp"
#include "mrflow/storage/object_store.hpp"

namespace mrflow {

inline constexpr char kRecordDelimiter = '\n';

// One ordered piece list per mapper.
using PieceLists = std::vector<std::vector<ChunkPiece>>;

// Splits the concatenation of `objects` into M contiguous spans
// [floor(mT/M), floor((m+1)T/M)) and maps each back to per-object pieces.
// Zero-length spans give empty lists; empty objects contribute no pieces.
PieceLists compute_nominal_ranges(const std::vector<storage::ObjectInfo>& objects, std::uint32_t num_mappers);

// First offset >= nominal_end that follows an LF, or the object size when no
// LF remains. Reads forward in windows of `window_bytes`.
std::uint64_t align_to_record_boundary(storage::ObjectStore& store, const storage::ObjectPath& path,
                                       std::uint64_t nominal_end, std::uint64_t window_bytes = 1 << 20);

// Walks a record-codec object header by header. Targets must be passed in
// non-decreasing order.
class CodecBoundaryWalker {
 public:
  CodecBoundaryWalker(storage::ObjectStore& store, storage::ObjectPath path, std::uint64_t object_size,
                      std::uint64_t window_bytes);

  // Smallest record start (or the object size) that is >= target.
  // TruncatedRecord if the object ends inside a record.
  std::uint64_t boundary_at_or_after(std::uint64_t target);

 private:
  bool load_header_at(std::uint64_t pos);

  storage::ObjectStore& store_;
  storage::ObjectPath path_;
  std::uint64_t size_;
  std::uint64_t window_;
  std::uint64_t pos_ = 0;  // a known record boundary
  std::string buffer_;     // bytes starting at buffer_start_
  std::uint64_t buffer_start_ = 0;
};

enum class SplitMode {
  kBytes,    // nominal byte spans verbatim
  kLines,    // span ends extended to the next LF
  kRecords,  // span ends extended to the next codec record boundary
};

SplitMode split_mode_for(const JobConfig& config);

// Nominal spans with every cut that falls strictly inside an object moved
// forward to a record boundary of that object.
PieceLists compute_split(storage::ObjectStore& store, const std::vector<storage::ObjectInfo>& objects,
                         std::uint32_t num_mappers, SplitMode mode, std::uint64_t window_bytes);

// Objects under all input prefixes, deduplicated, in bytewise path order.
std::vector<storage::ObjectInfo> list_job_inputs(storage::ObjectStore& store, const JobConfig& config,
                                                 const std::string& default_bucket);

// Computes and stores the chunk assignments of a SPLITTING job.
std::vector<ChunkAssignment> split_job(const WorkerContext& ctx, const JobState& state);

// Worker entry point for SPLIT events.
bool run_split(const WorkerContext& ctx, const TriggerEvent& event);

}  // namespace mrflow
