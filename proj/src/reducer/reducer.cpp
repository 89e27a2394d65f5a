#include "mrflow/reducer/reducer.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"
#include "mrflow/runtime/layout.hpp"
#include "mrflow/storage/object_io.hpp"

namespace mrflow {

std::vector<storage::ObjectPath> discover_spills(storage::ObjectStore& store, const std::string& bucket,
                                                 std::string_view job_id, std::uint32_t reducer_id) {
  std::vector<storage::ObjectPath> found;
  for (const auto& info : store.list_objects(intermediate_prefix(bucket, job_id))) {
    const auto name = parse_spill_name(info.path.key);
    if (!name) {
      spdlog::warn("job {}: ignoring unrecognised intermediate object {}", job_id, info.path.to_string());
      continue;
    }
    if (name->reducer_id == reducer_id) found.push_back(info.path);
  }
  return found;
}

ReduceTaskStats run_reduce_task(const WorkerContext& ctx, const JobState& job, std::uint32_t reducer_id) {
  const auto& cfg = job.config;
  if (!cfg.reduce_fn) throw Error(Errc::kInvalidConfig, "job has no reduce_fn");
  const auto reduce_fn = ctx.catalog.reduce(*cfg.reduce_fn);
  const auto spills = discover_spills(ctx.store, ctx.bucket, job.job_id, reducer_id);

  ReduceTaskStats stats;
  stats.spills_read = spills.size();

  // At most fan_in streams are open at once; share the input buffer among them.
  const auto open = std::max<std::uint64_t>(std::min<std::uint64_t>(spills.size(), cfg.merge_fan_in), 1);
  const auto window = std::max<std::uint64_t>(cfg.input_buffer_bytes / open, 64 * 1024);
  std::vector<std::unique_ptr<RecordSource>> runs;
  runs.reserve(spills.size());
  for (const auto& path : spills) runs.push_back(std::make_unique<storage::ObjectRecordSource>(ctx.store, path, window));

  MergeSpill spill;
  spill.store = &ctx.store;
  spill.path_for = [&](std::uint64_t n) { return merge_run_path(ctx.bucket, job.job_id, reducer_id, n); };
  spill.memory_limit_bytes = cfg.output_buffer_bytes;
  spill.part_bytes = cfg.multipart_part_bytes;
  spill.read_window_bytes = window;
  auto merged = k_way_merge(std::move(runs), cfg.merge_fan_in, &spill, &stats.merge);

  const auto output = object_under(cfg.output_prefix, reducer_output_name(reducer_id), ctx.bucket);
  storage::ObjectWriter writer(ctx.store, output, cfg.multipart_part_bytes);
  reduce_groups(*merged, reduce_fn, cfg.reduce_fn->params, writer, stats);
  writer.close();
  stats.bytes_written = writer.bytes_written();
  spdlog::info("job {} reducer {}: {} spills, {} groups -> {}", job.job_id, reducer_id, spills.size(), stats.groups,
               output.to_string());
  return stats;
}

bool run_reduce(const WorkerContext& ctx, const TriggerEvent& event) {
  return run_worker_task(ctx, event, [&](const JobState& job) { run_reduce_task(ctx, job, event.worker_index); });
}

}  // namespace mrflow
