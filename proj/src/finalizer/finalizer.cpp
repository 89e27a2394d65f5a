#include "mrflow/finalizer/finalizer.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "mrflow/core/text_format.hpp"
#include "mrflow/runtime/layout.hpp"
#include "mrflow/storage/object_io.hpp"

namespace mrflow {

FinalizeStats run_finalize_task(const WorkerContext& ctx, const JobState& job) {
  const auto& cfg = job.config;

  // Check every source up front so a missing one fails before any upload.
  std::vector<storage::ObjectPath> sources;
  for (std::uint32_t i = 0; i < cfg.num_reducers; ++i) {
    auto path = object_under(cfg.output_prefix, reducer_output_name(i), ctx.bucket);
    ctx.store.object_size(path);
    sources.push_back(std::move(path));
  }

  const auto window = std::max<std::uint64_t>(cfg.multipart_part_bytes / 4, 4096);
  storage::ObjectWriter writer(ctx.store, object_under(cfg.output_prefix, kFinalObjectName, ctx.bucket),
                               cfg.multipart_part_bytes);
  FinalizeStats stats;
  std::uint64_t peak_read = 0;
  std::string line;
  for (const auto& path : sources) {
    storage::ObjectRecordSource reader(ctx.store, path, window);
    while (auto rec = reader.next()) {
      if (cfg.final_binary) {
        writer.write_record(*rec);
      } else {
        line.clear();
        append_final_record(line, *rec);
        writer.write(line);
      }
      ++stats.records;
    }
    peak_read = std::max(peak_read, reader.peak_buffered());
    ++stats.sources;
  }
  writer.close();
  stats.bytes_written = writer.bytes_written();
  stats.peak_buffered_bytes = peak_read + writer.peak_buffered();
  spdlog::info("job {}: finalized {} records from {} objects ({} bytes)", job.job_id, stats.records, stats.sources,
               stats.bytes_written);
  return stats;
}

bool run_finalize(const WorkerContext& ctx, const TriggerEvent& event) {
  return run_worker_task(ctx, event, [&](const JobState& job) { run_finalize_task(ctx, job); });
}

}  // namespace mrflow
