#include "mrflow/runtime/worker_context.hpp"

#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"

namespace mrflow {

std::optional<JobState> load_job_for(const WorkerContext& ctx, const TriggerEvent& event) {
  auto state = ctx.metastore.find_job_state(event.job_id);
  if (!state) {
    spdlog::warn("{}: job {} not found; skipping", event.event_id, event.job_id);
    return std::nullopt;
  }
  if (state->phase != phase_for(event.event_type)) {
    spdlog::debug("{}: job is {}; skipping stale event", event.event_id, to_string(state->phase));
    return std::nullopt;
  }
  return state;
}

bool run_worker_task(const WorkerContext& ctx, const TriggerEvent& event,
                     const std::function<void(const JobState&)>& task) {
  const auto phase = phase_for(event.event_type);
  std::optional<JobState> state;
  try {
    state = load_job_for(ctx, event);
  } catch (const std::exception& e) {
    spdlog::error("{}: cannot read job state: {}", event.event_id, e.what());
    ctx.notifier.notify(event.coordinator_callback,
                        CompletionNotice::failed(event.job_id, phase, event.worker_index, e.what()));
    return false;
  }
  if (!state) return false;

  std::optional<std::string> failure;
  try {
    task(*state);
  } catch (const std::exception& e) {
    failure = e.what();
    spdlog::error("{}: task failed: {}", event.event_id, *failure);
  }
  if (failure) {
    ctx.notifier.notify(event.coordinator_callback,
                        CompletionNotice::failed(event.job_id, phase, event.worker_index, *failure));
    return false;
  }
  ctx.notifier.notify(event.coordinator_callback, CompletionNotice::ok(event.job_id, phase, event.worker_index));
  return true;
}

}  // namespace mrflow
