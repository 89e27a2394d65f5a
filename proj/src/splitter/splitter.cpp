#include "mrflow/splitter/splitter.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"
#include "mrflow/core/record.hpp"
#include "mrflow/runtime/layout.hpp"

namespace mrflow {
namespace {

// Start offset of each object in the logical concatenation, plus T at the end.
std::vector<std::uint64_t> object_bases(const std::vector<storage::ObjectInfo>& objects) {
  std::vector<std::uint64_t> bases;
  bases.reserve(objects.size() + 1);
  std::uint64_t total = 0;
  for (const auto& obj : objects) {
    bases.push_back(total);
    total += obj.size;
  }
  bases.push_back(total);
  return bases;
}

std::vector<ChunkPiece> pieces_for_span(const std::vector<storage::ObjectInfo>& objects,
                                        const std::vector<std::uint64_t>& bases, std::uint64_t start,
                                        std::uint64_t end) {
  std::vector<ChunkPiece> pieces;
  for (std::size_t i = 0; i < objects.size() && start < end; ++i) {
    const auto lo = std::max(start, bases[i]);
    const auto hi = std::min(end, bases[i + 1]);
    if (lo < hi) pieces.push_back(ChunkPiece{objects[i].path, {lo - bases[i], hi - bases[i]}});
  }
  return pieces;
}

std::vector<std::uint64_t> nominal_cuts(std::uint64_t total, std::uint32_t num_mappers) {
  std::vector<std::uint64_t> cuts(num_mappers + 1);
  for (std::uint32_t m = 0; m <= num_mappers; ++m) {
    // floor(m*T/M) without overflowing for large T.
    cuts[m] = m * (total / num_mappers) + std::uint64_t{m} * (total % num_mappers) / num_mappers;
  }
  return cuts;
}

PieceLists pieces_from_cuts(const std::vector<storage::ObjectInfo>& objects, const std::vector<std::uint64_t>& bases,
                            const std::vector<std::uint64_t>& cuts) {
  PieceLists lists;
  lists.reserve(cuts.size() - 1);
  for (std::size_t m = 0; m + 1 < cuts.size(); ++m) lists.push_back(pieces_for_span(objects, bases, cuts[m], cuts[m + 1]));
  return lists;
}

}  // namespace

PieceLists compute_nominal_ranges(const std::vector<storage::ObjectInfo>& objects, std::uint32_t num_mappers) {
  if (num_mappers == 0) throw Error(Errc::kInvalidArgument, "num_mappers must be >= 1");
  const auto bases = object_bases(objects);
  return pieces_from_cuts(objects, bases, nominal_cuts(bases.back(), num_mappers));
}

std::uint64_t align_to_record_boundary(storage::ObjectStore& store, const storage::ObjectPath& path,
                                       std::uint64_t nominal_end, std::uint64_t window_bytes) {
  const auto size = store.object_size(path);
  if (nominal_end == 0 || nominal_end > size) {
    throw Error(Errc::kInvalidRange, "alignment offset " + std::to_string(nominal_end) + " outside " +
                                         path.to_string() + " of size " + std::to_string(size));
  }
  if (store.get_object_range(path, {nominal_end - 1, nominal_end}).front() == kRecordDelimiter) return nominal_end;

  window_bytes = std::max<std::uint64_t>(window_bytes, 1);
  for (std::uint64_t pos = nominal_end; pos < size; pos += window_bytes) {
    const auto window = store.get_object_range(path, {pos, std::min(size, pos + window_bytes)});
    const auto lf = window.find(kRecordDelimiter);
    if (lf != std::string::npos) return pos + lf + 1;
  }
  return size;
}

CodecBoundaryWalker::CodecBoundaryWalker(storage::ObjectStore& store, storage::ObjectPath path,
                                         std::uint64_t object_size, std::uint64_t window_bytes)
    : store_(store), path_(std::move(path)), size_(object_size),
      window_(std::max<std::uint64_t>(window_bytes, 2 * codec::kHeaderBytes)) {}

bool CodecBoundaryWalker::load_header_at(std::uint64_t pos) {
  // Make sure the buffer covers [pos, pos + window) or the object tail.
  const auto buffered_end = buffer_start_ + buffer_.size();
  if (pos < buffer_start_ || pos + 2 * codec::kHeaderBytes > buffered_end) {
    if (pos >= size_) return false;
    buffer_ = store_.get_object_range(path_, {pos, std::min(size_, pos + window_)});
    buffer_start_ = pos;
  }
  return true;
}

std::uint64_t CodecBoundaryWalker::boundary_at_or_after(std::uint64_t target) {
  while (pos_ < target && pos_ < size_) {
    load_header_at(pos_);
    auto length = codec::peek_record_length(std::string_view(buffer_).substr(pos_ - buffer_start_));
    if (!length) {
      // The key is longer than the window: fetch the value header directly.
      const auto key_len_bytes = store_.get_object_range(path_, {pos_, std::min(size_, pos_ + codec::kHeaderBytes)});
      if (key_len_bytes.size() < codec::kHeaderBytes) {
        throw Error(Errc::kTruncatedRecord, path_.to_string() + ": header cut at offset " + std::to_string(pos_));
      }
      std::uint64_t key_len = 0;
      for (int i = 3; i >= 0; --i) key_len = (key_len << 8) | static_cast<unsigned char>(key_len_bytes[i]);
      const auto value_header = pos_ + codec::kHeaderBytes + key_len;
      if (value_header + codec::kHeaderBytes > size_) {
        throw Error(Errc::kTruncatedRecord, path_.to_string() + ": record at " + std::to_string(pos_) +
                                                " runs past the end of the object");
      }
      const auto val_bytes = store_.get_object_range(path_, {value_header, value_header + codec::kHeaderBytes});
      std::uint64_t val_len = 0;
      for (int i = 3; i >= 0; --i) val_len = (val_len << 8) | static_cast<unsigned char>(val_bytes[i]);
      length = 2 * codec::kHeaderBytes + key_len + val_len;
    }
    if (pos_ + *length > size_) {
      throw Error(Errc::kTruncatedRecord,
                  path_.to_string() + ": record at " + std::to_string(pos_) + " runs past the end of the object");
    }
    pos_ += *length;
  }
  return std::min(pos_, size_);
}

SplitMode split_mode_for(const JobConfig& config) {
  if (config.record_input) return SplitMode::kRecords;
  return config.binary_mode ? SplitMode::kBytes : SplitMode::kLines;
}

PieceLists compute_split(storage::ObjectStore& store, const std::vector<storage::ObjectInfo>& objects,
                         std::uint32_t num_mappers, SplitMode mode, std::uint64_t window_bytes) {
  if (num_mappers == 0) throw Error(Errc::kInvalidArgument, "num_mappers must be >= 1");
  const auto bases = object_bases(objects);
  auto cuts = nominal_cuts(bases.back(), num_mappers);
  if (mode == SplitMode::kBytes) return pieces_from_cuts(objects, bases, cuts);

  // Interior cuts are increasing, so each object's walker only moves forward.
  std::size_t obj = 0;
  std::optional<CodecBoundaryWalker> walker;
  std::size_t walker_obj = objects.size();
  for (std::size_t m = 1; m < num_mappers; ++m) {
    while (obj < objects.size() && bases[obj + 1] <= cuts[m]) ++obj;
    if (obj == objects.size()) break;
    const auto offset = cuts[m] - bases[obj];
    if (offset == 0) continue;  // already at an object boundary
    std::uint64_t aligned = 0;
    if (mode == SplitMode::kLines) {
      aligned = align_to_record_boundary(store, objects[obj].path, offset, window_bytes);
    } else {
      if (walker_obj != obj) {
        walker.emplace(store, objects[obj].path, objects[obj].size, window_bytes);
        walker_obj = obj;
      }
      aligned = walker->boundary_at_or_after(offset);
    }
    cuts[m] = bases[obj] + aligned;
  }
  // An earlier cut can be pushed past a later nominal one by a long record.
  for (std::size_t m = 1; m < cuts.size(); ++m) cuts[m] = std::max(cuts[m], cuts[m - 1]);
  return pieces_from_cuts(objects, bases, cuts);
}

std::vector<storage::ObjectInfo> list_job_inputs(storage::ObjectStore& store, const JobConfig& config,
                                                 const std::string& default_bucket) {
  std::vector<storage::ObjectInfo> all;
  for (const auto& prefix : config.input_prefixes) {
    auto listed = store.list_objects(resolve_prefix(prefix, default_bucket));
    all.insert(all.end(), std::make_move_iterator(listed.begin()), std::make_move_iterator(listed.end()));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  all.erase(std::unique(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.path == b.path; }),
            all.end());
  return all;
}

std::vector<ChunkAssignment> split_job(const WorkerContext& ctx, const JobState& state) {
  const auto& cfg = state.config;
  const auto inputs = list_job_inputs(ctx.store, cfg, ctx.bucket);
  const auto lists = compute_split(ctx.store, inputs, cfg.num_mappers, split_mode_for(cfg), cfg.input_buffer_bytes);

  std::vector<ChunkAssignment> assignments;
  for (std::uint32_t m = 0; m < cfg.num_mappers; ++m) {
    ChunkAssignment a{state.job_id, m, lists[m]};
    ctx.metastore.store_chunk_assignment(a);
    assignments.push_back(std::move(a));
  }
  spdlog::info("job {}: split {} objects into {} chunks", state.job_id, inputs.size(), cfg.num_mappers);
  return assignments;
}

bool run_split(const WorkerContext& ctx, const TriggerEvent& event) {
  return run_worker_task(ctx, event, [&](const JobState& state) { split_job(ctx, state); });
}

}  // namespace mrflow
