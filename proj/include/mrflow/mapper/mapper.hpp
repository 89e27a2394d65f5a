#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mrflow/core/catalog.hpp"
#include "mrflow/runtime/layout.hpp"
#include "mrflow/runtime/worker_context.hpp"

namespace mrflow {

// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes);

// Target reducer of a key: fnv1a64(key) mod R. R >= 1.
std::uint32_t partition_of(std::string_view key, std::uint32_t num_reducers);

// Records emitted by the map function since the last spill, in emit order.
class MapBuffer {
 public:
  void add(std::string_view key, std::string_view value);

  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  // Sum of encoded record sizes.
  std::uint64_t resident_bytes() const { return resident_; }
  const std::vector<Record>& records() const { return records_; }

  std::vector<Record> take();

 private:
  std::vector<Record> records_;
  std::uint64_t resident_ = 0;
};

// Stable bytewise sort by key; with a combiner every run of equal keys is
// replaced by combiner(key, values in encounter order).
std::vector<Record> sort_and_combine(std::vector<Record> records, const ReduceFn* combiner,
                                     const Params& combiner_params = {});

struct SpillObject {
  SpillName name;
  storage::ObjectPath path;
  std::uint64_t bytes = 0;
  std::uint64_t records = 0;
};

// Sorts, optionally combines, partitions and uploads the buffer as one spill
// object per non-empty partition, all with file_index = spill_index. The
// buffer is left empty.
std::vector<SpillObject> spill_buffer(MapBuffer& buffer, const WorkerContext& ctx, const JobState& job,
                                      std::uint32_t mapper_id, std::uint32_t spill_index);

struct MapTaskStats {
  std::uint64_t input_bytes = 0;
  std::uint64_t map_calls = 0;
  std::uint64_t records_emitted = 0;
  std::uint64_t spill_count = 0;        // threshold and final flushes
  std::uint64_t bytes_uploaded = 0;     // spill objects plus map-only output
  std::vector<SpillObject> spills;
};

// Runs mapper `mapper_id` of a MAPPING job against its stored assignment.
MapTaskStats run_map_task(const WorkerContext& ctx, const JobState& job, std::uint32_t mapper_id);

// Worker entry point for MAP events.
bool run_map(const WorkerContext& ctx, const TriggerEvent& event);

}  // namespace mrflow
