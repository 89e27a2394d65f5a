#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "mrflow/coordinator/notice.hpp"
#include "mrflow/core/catalog.hpp"
#include "mrflow/eventbus/event_bus.hpp"
#include "mrflow/metastore/metastore.hpp"

namespace mrflow {

// One successful phase transition and the events it published.
struct PhaseAdvance {
  std::string job_id;
  JobPhase from = JobPhase::kPending;
  JobPhase to = JobPhase::kPending;
  std::vector<std::string> event_ids;
  std::int64_t at = 0;
};

using PhaseAdvanceObserver = std::function<void(const PhaseAdvance&)>;

enum class NoticeOutcome {
  kRecorded,   // counted, phase still waiting for other workers
  kAdvanced,   // this notice completed the phase
  kDuplicate,  // already counted or lost the advance race
  kStale,      // job no longer in the notice's phase; dropped
  kJobFailed,  // FAILED notice moved the job to FAILED
};

std::string_view to_string(NoticeOutcome outcome);

// Random 128-bit identifier as 32 lowercase hex digits.
std::string generate_job_id();

// Drives the job state machine. Holds no per-job state: everything lives in
// the metastore, so instances can be destroyed, restarted or replicated
// between any two calls.
class Coordinator {
 public:
  Coordinator(Metastore& metastore, EventBus& bus, const FunctionCatalog& catalog = FunctionCatalog::global(),
              std::string callback_base = {});

  // Base URL workers post notices to, e.g. "http://127.0.0.1:8080".
  void set_callback_base(std::string base);
  bool has_callback_base() const;
  std::string callback_url(std::string_view job_id) const;

  // Validates, records PENDING -> SPLITTING and publishes the SPLIT event.
  // Returns without waiting for the job.
  std::string submit_job(JobConfig config);

  // NoSuchJob if the job is unknown.
  NoticeOutcome on_worker_done(const CompletionNotice& notice);

  // Moves the job out of `from` and publishes the next phase's events.
  // IllegalTransition if the job is no longer in `from`.
  PhaseAdvance advance_phase(std::string_view job_id, JobPhase from);

  // No-op for terminal jobs. NoSuchJob.
  void fail_job(std::string_view job_id, const std::string& reason);

  void set_observer(PhaseAdvanceObserver observer);

 private:
  std::vector<TriggerEvent> events_for(const JobState& state, JobPhase phase) const;
  void notify_observer(const PhaseAdvance& advance) const;

  Metastore& metastore_;
  EventBus& bus_;
  const FunctionCatalog& catalog_;
  mutable std::mutex mutex_;  // guards callback_base_ and observer_
  std::string callback_base_;
  PhaseAdvanceObserver observer_;
};

}  // namespace mrflow
