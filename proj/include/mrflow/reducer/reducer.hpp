#pragma once

#include <cstdint>
#include <vector>

#include "mrflow/reducer/merge.hpp"
#include "mrflow/runtime/worker_context.hpp"

namespace mrflow {

// Spill objects of one reducer, in bytewise listing order. Objects under the
// intermediate prefix whose names do not parse are skipped with a warning.
std::vector<storage::ObjectPath> discover_spills(storage::ObjectStore& store, const std::string& bucket,
                                                 std::string_view job_id, std::uint32_t reducer_id);

struct ReduceTaskStats {
  std::uint64_t spills_read = 0;
  std::uint64_t groups = 0;
  std::uint64_t records_in = 0;
  std::uint64_t bytes_written = 0;
  MergeStats merge;
};

// Calls reduce_fn once per maximal run of equal keys in `merged` and writes
// the results to `writer` in key order.
template <typename Writer>
void reduce_groups(RecordSource& merged, const ReduceFn& reduce_fn, const Params& params, Writer& writer,
                   ReduceTaskStats& stats) {
  std::optional<Record> pending = merged.next();
  std::vector<std::string> values;
  while (pending) {
    std::string key = std::move(pending->key);
    values.clear();
    values.push_back(std::move(pending->value));
    ++stats.records_in;
    while ((pending = merged.next()) && pending->key == key) {
      values.push_back(std::move(pending->value));
      ++stats.records_in;
    }
    writer.write_record(reduce_fn(key, values, params));
    ++stats.groups;
  }
}

// Runs reducer `reducer_id` of a REDUCING job and writes reduce-{id}.
ReduceTaskStats run_reduce_task(const WorkerContext& ctx, const JobState& job, std::uint32_t reducer_id);

// Worker entry point for REDUCE events.
bool run_reduce(const WorkerContext& ctx, const TriggerEvent& event);

}  // namespace mrflow
