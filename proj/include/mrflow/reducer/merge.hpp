#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mrflow/core/record_stream.hpp"
#include "mrflow/storage/object_store.hpp"

namespace mrflow {

// Heap merge of sorted streams. Equal keys come out in stream-index order.
// Throws UnsortedInput when a stream goes backwards.
class MergeStream final : public RecordSource {
 public:
  explicit MergeStream(std::vector<std::unique_ptr<RecordSource>> runs);

  std::optional<Record> next() override;

 private:
  struct Head {
    Record rec;
    std::size_t run;
  };
  void refill(std::size_t run);

  std::vector<std::unique_ptr<RecordSource>> runs_;
  std::vector<std::string> last_key_;
  std::vector<bool> started_;
  std::vector<Head> heap_;
};

// Where intermediate runs of a hierarchical merge go once they outgrow
// memory.
struct MergeSpill {
  storage::ObjectStore* store = nullptr;
  std::function<storage::ObjectPath(std::uint64_t run_number)> path_for;
  std::uint64_t memory_limit_bytes = 0;  // runs above this are written out
  std::uint64_t part_bytes = 5'242'880;
  std::uint64_t read_window_bytes = 1 << 20;
};

struct MergeStats {
  std::uint64_t merge_passes = 0;  // merges of two or more runs, final one included
  std::uint64_t spilled_runs = 0;
  std::uint64_t max_open_runs = 0;
};

// Merges sorted runs with at most `fan_in` (>= 2) inputs per merge. While
// more than fan_in runs remain, consecutive groups of exactly fan_in runs are
// merged into intermediate runs and a trailing partial group is carried over
// unchanged. Every merge is full except the last, so n runs take
// ceil((n-1)/(fan_in-1)) merges, and the result is the stable sort of the
// concatenated inputs. The returned
// stream performs the last merge lazily. Without `spill` intermediates stay
// in memory.
std::unique_ptr<RecordSource> k_way_merge(std::vector<std::unique_ptr<RecordSource>> runs, std::uint32_t fan_in,
                                          const MergeSpill* spill = nullptr, MergeStats* stats = nullptr);

// Convenience overload for in-memory runs.
std::vector<Record> k_way_merge(const std::vector<std::vector<Record>>& runs, std::uint32_t fan_in,
                                MergeStats* stats = nullptr);

}  // namespace mrflow
