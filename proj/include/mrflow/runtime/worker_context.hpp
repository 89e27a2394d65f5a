#pragma once

#include <functional>
#include <optional>
#include <string>

#include "mrflow/coordinator/notice.hpp"
#include "mrflow/core/catalog.hpp"
#include "mrflow/eventbus/trigger_event.hpp"
#include "mrflow/metastore/metastore.hpp"
#include "mrflow/storage/object_store.hpp"

namespace mrflow {

// Everything a worker instance needs; shared by reference, owned elsewhere.
struct WorkerContext {
  storage::ObjectStore& store;
  Metastore& metastore;
  CompletionNotifier& notifier;
  const FunctionCatalog& catalog;
  std::string bucket;  // default bucket for unqualified prefixes
};

// Loads the job for an event. nullopt (and a log line) when the job is gone
// or no longer in the event's phase, which is how redelivered events for
// finished phases are absorbed.
std::optional<JobState> load_job_for(const WorkerContext& ctx, const TriggerEvent& event);

// Runs `task` for the event and reports the outcome to the coordinator:
// OK on return, FAILED with the exception text on throw. Stale events are
// skipped without a notice. Returns true if the task ran and succeeded.
bool run_worker_task(const WorkerContext& ctx, const TriggerEvent& event,
                     const std::function<void(const JobState&)>& task);

}  // namespace mrflow
