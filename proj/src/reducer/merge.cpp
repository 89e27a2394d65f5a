#include "mrflow/reducer/merge.hpp"

#include <algorithm>

#include "mrflow/core/error.hpp"
#include "mrflow/storage/object_io.hpp"

namespace mrflow {
namespace {

// Min-heap order: smaller key first, then lower run index.
bool heap_after(const auto& a, const auto& b) {
  if (a.rec.key != b.rec.key) return std::string_view(b.rec.key) < std::string_view(a.rec.key);
  return b.run < a.run;
}

}  // namespace

MergeStream::MergeStream(std::vector<std::unique_ptr<RecordSource>> runs)
    : runs_(std::move(runs)), last_key_(runs_.size()), started_(runs_.size(), false) {
  heap_.reserve(runs_.size());
  for (std::size_t i = 0; i < runs_.size(); ++i) refill(i);
}

void MergeStream::refill(std::size_t run) {
  auto rec = runs_[run]->next();
  if (!rec) {
    runs_[run].reset();
    return;
  }
  if (started_[run] && std::string_view(rec->key) < std::string_view(last_key_[run])) {
    throw Error(Errc::kUnsortedInput, "run " + std::to_string(run) + " yields a key smaller than its predecessor");
  }
  started_[run] = true;
  last_key_[run] = rec->key;
  heap_.push_back(Head{std::move(*rec), run});
  std::push_heap(heap_.begin(), heap_.end(), [](const Head& a, const Head& b) { return heap_after(a, b); });
}

std::optional<Record> MergeStream::next() {
  if (heap_.empty()) return std::nullopt;
  std::pop_heap(heap_.begin(), heap_.end(), [](const Head& a, const Head& b) { return heap_after(a, b); });
  Head top = std::move(heap_.back());
  heap_.pop_back();
  refill(top.run);
  return std::move(top.rec);
}

namespace {

// Drains a merge into memory, moving to storage once it grows past the limit.
std::unique_ptr<RecordSource> materialize(RecordSource& source, const MergeSpill* spill, std::uint64_t& run_number,
                                          MergeStats& stats) {
  std::vector<Record> records;
  std::uint64_t bytes = 0;
  std::optional<storage::ObjectWriter> writer;
  storage::ObjectPath path;
  while (auto rec = source.next()) {
    if (writer) {
      writer->write_record(*rec);
      continue;
    }
    bytes += codec::encoded_size(*rec);
    records.push_back(std::move(*rec));
    if (spill && spill->store && bytes > spill->memory_limit_bytes) {
      path = spill->path_for(run_number++);
      writer.emplace(*spill->store, path, spill->part_bytes);
      for (const auto& r : records) writer->write_record(r);
      records.clear();
      records.shrink_to_fit();
    }
  }
  if (!writer) return std::make_unique<VectorRecordSource>(std::move(records));
  writer->close();
  ++stats.spilled_runs;
  return std::make_unique<storage::ObjectRecordSource>(*spill->store, path, spill->read_window_bytes);
}

}  // namespace

std::unique_ptr<RecordSource> k_way_merge(std::vector<std::unique_ptr<RecordSource>> runs, std::uint32_t fan_in,
                                          const MergeSpill* spill, MergeStats* stats) {
  if (fan_in < 2) throw Error(Errc::kInvalidArgument, "merge fan-in must be >= 2");
  MergeStats local;
  MergeStats& st = stats ? *stats : local;
  std::uint64_t run_number = 0;

  while (runs.size() > fan_in) {
    std::vector<std::unique_ptr<RecordSource>> next_round;
    for (std::size_t i = 0; i < runs.size(); i += fan_in) {
      const auto end = std::min(runs.size(), i + fan_in);
      if (end - i < fan_in) {
        for (auto j = i; j < end; ++j) next_round.push_back(std::move(runs[j]));
        continue;
      }
      std::vector<std::unique_ptr<RecordSource>> group;
      for (auto j = i; j < end; ++j) group.push_back(std::move(runs[j]));
      st.max_open_runs = std::max<std::uint64_t>(st.max_open_runs, group.size());
      MergeStream merged(std::move(group));
      next_round.push_back(materialize(merged, spill, run_number, st));
      ++st.merge_passes;
    }
    runs = std::move(next_round);
  }
  st.max_open_runs = std::max<std::uint64_t>(st.max_open_runs, runs.size());
  if (runs.size() > 1) ++st.merge_passes;
  return std::make_unique<MergeStream>(std::move(runs));
}

std::vector<Record> k_way_merge(const std::vector<std::vector<Record>>& runs, std::uint32_t fan_in,
                                MergeStats* stats) {
  std::vector<std::unique_ptr<RecordSource>> sources;
  sources.reserve(runs.size());
  for (const auto& run : runs) sources.push_back(std::make_unique<VectorRecordSource>(run));
  auto merged = k_way_merge(std::move(sources), fan_in, nullptr, stats);
  return drain(*merged);
}

}  // namespace mrflow
