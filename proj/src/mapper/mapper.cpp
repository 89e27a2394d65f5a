#include "mrflow/mapper/mapper.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"
#include "mrflow/reducer/merge.hpp"
#include "mrflow/splitter/splitter.hpp"
#include "mrflow/storage/object_io.hpp"

namespace mrflow {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint32_t partition_of(std::string_view key, std::uint32_t num_reducers) {
  if (num_reducers == 0) throw Error(Errc::kInvalidArgument, "partition_of needs at least one reducer");
  return static_cast<std::uint32_t>(fnv1a64(key) % num_reducers);
}

void MapBuffer::add(std::string_view key, std::string_view value) {
  records_.push_back(Record{std::string(key), std::string(value)});
  resident_ += codec::encoded_size(key, value);
}

std::vector<Record> MapBuffer::take() {
  resident_ = 0;
  return std::exchange(records_, {});
}

std::vector<Record> sort_and_combine(std::vector<Record> records, const ReduceFn* combiner,
                                     const Params& combiner_params) {
  std::stable_sort(records.begin(), records.end(), key_less);
  if (!combiner) return records;

  std::vector<Record> combined;
  std::vector<std::string> values;
  for (std::size_t i = 0; i < records.size();) {
    auto j = i;
    values.clear();
    while (j < records.size() && records[j].key == records[i].key) values.push_back(std::move(records[j++].value));
    combined.push_back((*combiner)(records[i].key, values, combiner_params));
    i = j;
  }
  return combined;
}

namespace {

const ReduceFn* resolve_combiner(const WorkerContext& ctx, const JobConfig& cfg, ReduceFn& storage) {
  if (!cfg.combiner_enabled || !cfg.reduce_fn) return nullptr;
  storage = ctx.catalog.reduce(*cfg.reduce_fn);
  return &storage;
}

std::uint64_t write_records(storage::ObjectStore& store, const storage::ObjectPath& path,
                            const std::vector<Record>& records, std::uint64_t part_bytes) {
  storage::ObjectWriter writer(store, path, part_bytes);
  for (const auto& rec : records) writer.write_record(rec);
  writer.close();
  return writer.bytes_written();
}

}  // namespace

std::vector<SpillObject> spill_buffer(MapBuffer& buffer, const WorkerContext& ctx, const JobState& job,
                                      std::uint32_t mapper_id, std::uint32_t spill_index) {
  const auto& cfg = job.config;
  const auto reducers = std::max<std::uint32_t>(cfg.num_reducers, 1);
  ReduceFn combiner_fn;
  const auto* combiner = resolve_combiner(ctx, cfg, combiner_fn);
  const Params no_params;
  const auto records =
      sort_and_combine(buffer.take(), combiner, combiner ? cfg.reduce_fn->params : no_params);

  // Partitioning a sorted sequence keeps every partition sorted.
  std::vector<std::vector<Record>> partitions(reducers);
  for (const auto& rec : records) partitions[partition_of(rec.key, reducers)].push_back(rec);

  std::vector<SpillObject> spills;
  for (std::uint32_t r = 0; r < reducers; ++r) {
    if (partitions[r].empty()) continue;
    const SpillName name{r, spill_index, mapper_id};
    const auto path = spill_path(ctx.bucket, job.job_id, name);
    const auto bytes = write_records(ctx.store, path, partitions[r], cfg.multipart_part_bytes);
    spills.push_back(SpillObject{name, path, bytes, partitions[r].size()});
  }
  return spills;
}

namespace {

// Feeds one chunk piece to the map function window by window.
class PieceFeeder {
 public:
  PieceFeeder(const WorkerContext& ctx, const JobConfig& cfg, const MapFn& map_fn, const Emit& emit,
              MapTaskStats& stats)
      : ctx_(ctx), cfg_(cfg), map_fn_(map_fn), emit_(emit), stats_(stats) {}

  void feed(const ChunkPiece& piece) {
    storage::RangeReader reader(ctx_.store, piece.path, piece.range, cfg_.input_buffer_bytes);
    switch (split_mode_for(cfg_)) {
      case SplitMode::kBytes: feed_bytes(piece, reader); break;
      case SplitMode::kLines: feed_lines(piece, reader); break;
      case SplitMode::kRecords: feed_records(piece, reader); break;
    }
  }

 private:
  void call(std::string_view key, std::string_view payload) {
    ++stats_.map_calls;
    map_fn_(key, payload, cfg_.map_fn.params, emit_);
  }

  void feed_bytes(const ChunkPiece& piece, storage::RangeReader& reader) {
    auto offset = piece.range.start;
    while (auto window = reader.next_window()) {
      stats_.input_bytes += window->size();
      call(fmt::format("{}:{}", piece.path.key, offset), *window);
      offset += window->size();
    }
  }

  // Windows are cut after their last LF; the tail waits for the next read.
  void feed_lines(const ChunkPiece& piece, storage::RangeReader& reader) {
    std::string pending;
    auto offset = piece.range.start;
    while (auto window = reader.next_window()) {
      stats_.input_bytes += window->size();
      pending += *window;
      const auto lf = pending.rfind('\n');
      if (lf == std::string::npos) continue;
      call(fmt::format("{}:{}", piece.path.key, offset), std::string_view(pending).substr(0, lf + 1));
      offset += lf + 1;
      pending.erase(0, lf + 1);
    }
    if (!pending.empty()) call(fmt::format("{}:{}", piece.path.key, offset), pending);
  }

  void feed_records(const ChunkPiece& piece, storage::RangeReader& reader) {
    std::string pending;
    std::size_t used = 0;
    while (auto window = reader.next_window()) {
      stats_.input_bytes += window->size();
      pending.erase(0, used);
      used = 0;
      pending += *window;
      codec::Decoder dec(pending);
      while (auto rec = dec.try_next()) call(rec->key, rec->value);
      used = dec.consumed();
    }
    if (used < pending.size()) {
      throw Error(Errc::kTruncatedRecord, fmt::format("{} [{}, {}) ends mid-record", piece.path.to_string(),
                                                      piece.range.start, piece.range.end));
    }
  }

  const WorkerContext& ctx_;
  const JobConfig& cfg_;
  const MapFn& map_fn_;
  const Emit& emit_;
  MapTaskStats& stats_;
};

}  // namespace

MapTaskStats run_map_task(const WorkerContext& ctx, const JobState& job, std::uint32_t mapper_id) {
  const auto& cfg = job.config;
  const auto assignment = ctx.metastore.fetch_chunk_assignment(job.job_id, mapper_id);
  const auto map_fn = ctx.catalog.map(cfg.map_fn);
  const bool map_only = cfg.num_reducers == 0;

  MapTaskStats stats;
  MapBuffer buffer;
  std::uint32_t spill_index = 0;
  auto flush = [&] {
    if (buffer.empty()) return;
    auto written = spill_buffer(buffer, ctx, job, mapper_id, spill_index++);
    ++stats.spill_count;
    for (auto& s : written) {
      stats.bytes_uploaded += s.bytes;
      stats.spills.push_back(std::move(s));
    }
  };

  const auto threshold = std::max<std::uint64_t>(cfg.spill_threshold_bytes(), 1);
  const Emit emit = [&](std::string_view key, std::string_view value) {
    ++stats.records_emitted;
    buffer.add(key, value);
    if (buffer.resident_bytes() >= threshold) flush();
  };

  PieceFeeder feeder(ctx, cfg, map_fn, emit, stats);
  for (const auto& piece : assignment.pieces) feeder.feed(piece);

  if (!map_only) {
    flush();
    spdlog::info("job {} mapper {}: {} records, {} spill objects", job.job_id, mapper_id, stats.records_emitted,
                 stats.spills.size());
    return stats;
  }

  const auto output = object_under(cfg.output_prefix, mapper_output_name(mapper_id), ctx.bucket);
  if (spill_index == 0) {
    // Everything fit in one buffer: write it straight to the output object.
    const auto records = sort_and_combine(buffer.take(), nullptr);
    stats.bytes_uploaded += write_records(ctx.store, output, records, cfg.multipart_part_bytes);
    if (!records.empty()) ++stats.spill_count;
  } else {
    flush();
    std::vector<std::unique_ptr<RecordSource>> runs;
    const auto window = std::max<std::uint64_t>(cfg.input_buffer_bytes / std::max<std::size_t>(stats.spills.size(), 1),
                                                64 * 1024);
    for (const auto& s : stats.spills) {
      runs.push_back(std::make_unique<storage::ObjectRecordSource>(ctx.store, s.path, window));
    }
    MergeSpill spill;
    spill.store = &ctx.store;
    spill.path_for = [&](std::uint64_t n) {
      return storage::ObjectPath(ctx.bucket, fmt::format("{}/merge/mapper-{}/run-{}", job.job_id, mapper_id, n));
    };
    spill.memory_limit_bytes = cfg.output_buffer_bytes;
    spill.part_bytes = cfg.multipart_part_bytes;
    spill.read_window_bytes = window;
    auto merged = k_way_merge(std::move(runs), cfg.merge_fan_in, &spill);
    storage::ObjectWriter writer(ctx.store, output, cfg.multipart_part_bytes);
    while (auto rec = merged->next()) writer.write_record(*rec);
    writer.close();
    stats.bytes_uploaded += writer.bytes_written();
  }
  spdlog::info("job {} mapper {}: {} records -> {}", job.job_id, mapper_id, stats.records_emitted, output.to_string());
  return stats;
}

bool run_map(const WorkerContext& ctx, const TriggerEvent& event) {
  return run_worker_task(ctx, event, [&](const JobState& job) { run_map_task(ctx, job, event.worker_index); });
}

}  // namespace mrflow
