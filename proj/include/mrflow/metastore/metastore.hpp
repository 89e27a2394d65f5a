#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrflow/core/job_config.hpp"
#include "mrflow/metastore/kv_store.hpp"
#include "mrflow/storage/object_store.hpp"

namespace mrflow {

enum class JobPhase { kPending, kSplitting, kMapping, kReducing, kFinalizing, kCompleted, kFailed };

std::string_view to_string(JobPhase phase);
JobPhase phase_from_string(std::string_view name);  // throws InvalidArgument

bool is_terminal(JobPhase phase);

// The phase that follows `phase` for this job, skipping REDUCING for map-only
// jobs and FINALIZING when the finalizer is off. Terminal phases have none.
std::optional<JobPhase> next_phase(JobPhase phase, const JobConfig& config);

// Legal moves: exactly one step along next_phase, or any non-terminal phase
// to FAILED.
bool is_legal_transition(JobPhase from, JobPhase to, const JobConfig& config);

// Workers expected to report before a phase is complete.
std::uint32_t expected_completions(JobPhase phase, const JobConfig& config);

std::int64_t now_millis();

struct JobState {
  std::string job_id;
  JobPhase phase = JobPhase::kPending;
  std::optional<std::string> failure_reason;
  std::int64_t created_at = 0;  // unix epoch milliseconds
  std::int64_t updated_at = 0;
  JobConfig config;  // snapshot taken at submission

  friend bool operator==(const JobState&, const JobState&) = default;
};

nlohmann::json to_json(const JobState& state);
JobState job_state_from_json(const nlohmann::json& doc);

struct ChunkPiece {
  storage::ObjectPath path;
  storage::ByteRange range;

  friend bool operator==(const ChunkPiece&, const ChunkPiece&) = default;
};

struct ChunkAssignment {
  std::string job_id;
  std::uint32_t mapper_id = 0;
  std::vector<ChunkPiece> pieces;

  std::uint64_t total_bytes() const;

  friend bool operator==(const ChunkAssignment&, const ChunkAssignment&) = default;
};

nlohmann::json to_json(const ChunkAssignment& assignment);
ChunkAssignment chunk_assignment_from_json(const nlohmann::json& doc);

namespace keys {
std::string job_prefix(std::string_view job_id);
std::string state(std::string_view job_id);
std::string chunk(std::string_view job_id, std::uint32_t mapper_id);
std::string done(std::string_view job_id, JobPhase phase);
}  // namespace keys

// Job metadata on top of a KvStore. Stateless apart from the store handle, so
// any number of coordinators and workers can share one backend.
class Metastore {
 public:
  explicit Metastore(std::shared_ptr<metastore::KvStore> kv);

  // Creates the PENDING record. InvalidConfig if the job id is taken.
  JobState create_job(const JobConfig& config);

  JobState get_job_state(std::string_view job_id) const;  // NoSuchJob
  std::optional<JobState> find_job_state(std::string_view job_id) const;

  // Applies the transition iff legal; throws IllegalTransition otherwise and
  // leaves the record untouched. Safe against concurrent updaters.
  JobState update_job_state(std::string_view job_id, JobPhase new_phase,
                            std::optional<std::string> failure_reason = std::nullopt);

  // Job must be SPLITTING (PhaseMismatch otherwise).
  void store_chunk_assignment(const ChunkAssignment& assignment);
  ChunkAssignment fetch_chunk_assignment(std::string_view job_id, std::uint32_t mapper_id) const;

  // Adds worker_id to the (job, phase) completion set and returns its size.
  // Duplicates do not grow the set. NoSuchJob / PhaseMismatch.
  std::size_t record_completion(std::string_view job_id, JobPhase phase, std::uint32_t worker_id);
  // Same, also reporting whether worker_id was new to the set.
  metastore::SetAddResult record_completion_detailed(std::string_view job_id, JobPhase phase,
                                                     std::uint32_t worker_id);
  std::size_t completion_count(std::string_view job_id, JobPhase phase) const;

  // Removes every key belonging to the job.
  std::size_t delete_job(std::string_view job_id);

  metastore::KvStore& kv() const { return *kv_; }

 private:
  std::shared_ptr<metastore::KvStore> kv_;
};

}  // namespace mrflow
