#include "mrflow/coordinator/coordinator.hpp"

#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"

namespace mrflow {

std::string_view to_string(NoticeOutcome outcome) {
  switch (outcome) {
    case NoticeOutcome::kRecorded: return "recorded";
    case NoticeOutcome::kAdvanced: return "advanced";
    case NoticeOutcome::kDuplicate: return "duplicate";
    case NoticeOutcome::kStale: return "stale";
    case NoticeOutcome::kJobFailed: return "job_failed";
  }
  return "unknown";
}

std::string generate_job_id() {
  static thread_local std::mt19937_64 rng = [] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }();
  return fmt::format("{:016x}{:016x}", rng(), rng());
}

Coordinator::Coordinator(Metastore& metastore, EventBus& bus, const FunctionCatalog& catalog,
                         std::string callback_base)
    : metastore_(metastore), bus_(bus), catalog_(catalog), callback_base_(std::move(callback_base)) {}

void Coordinator::set_callback_base(std::string base) {
  std::lock_guard lock(mutex_);
  callback_base_ = std::move(base);
}

bool Coordinator::has_callback_base() const {
  std::lock_guard lock(mutex_);
  return !callback_base_.empty();
}

std::string Coordinator::callback_url(std::string_view job_id) const {
  std::lock_guard lock(mutex_);
  return fmt::format("{}/jobs/{}/notify", callback_base_, job_id);
}

void Coordinator::set_observer(PhaseAdvanceObserver observer) {
  std::lock_guard lock(mutex_);
  observer_ = std::move(observer);
}

void Coordinator::notify_observer(const PhaseAdvance& advance) const {
  PhaseAdvanceObserver observer;
  {
    std::lock_guard lock(mutex_);
    observer = observer_;
  }
  if (observer) observer(advance);
}

std::vector<TriggerEvent> Coordinator::events_for(const JobState& state, JobPhase phase) const {
  EventType type;
  switch (phase) {
    case JobPhase::kSplitting: type = EventType::kSplit; break;
    case JobPhase::kMapping: type = EventType::kMap; break;
    case JobPhase::kReducing: type = EventType::kReduce; break;
    case JobPhase::kFinalizing: type = EventType::kFinalize; break;
    default: return {};
  }
  const auto count = expected_completions(phase, state.config);
  const auto callback = callback_url(state.job_id);
  const auto now = now_millis();
  std::vector<TriggerEvent> events;
  events.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    events.push_back(TriggerEvent{fmt::format("{}-{}-{}", state.job_id, to_string(type), i), type, state.job_id, i,
                                  callback, now});
  }
  return events;
}

std::string Coordinator::submit_job(JobConfig config) {
  if (config.job_id.empty()) config.job_id = generate_job_id();
  validate_job_config(config, &catalog_);

  const auto created = metastore_.create_job(config);
  const auto& job_id = created.job_id;
  try {
    const auto splitting = metastore_.update_job_state(job_id, JobPhase::kSplitting);
    PhaseAdvance advance{job_id, JobPhase::kPending, JobPhase::kSplitting, {}, splitting.updated_at};
    const auto events = events_for(splitting, JobPhase::kSplitting);
    for (const auto& event : events) advance.event_ids.push_back(event.event_id);
    notify_observer(advance);
    for (const auto& event : events) bus_.publish(std::string(topic_for(event.event_type)), event);
  } catch (const Error& e) {
    spdlog::error("job {}: submission failed: {}", job_id, e.what());
    try {
      fail_job(job_id, std::string("submission failed: ") + e.what());
    } catch (const Error& inner) {
      spdlog::error("job {}: could not record failure: {}", job_id, inner.what());
    }
    throw;
  }
  spdlog::info("job {} submitted ({} mappers, {} reducers)", job_id, config.num_mappers, config.num_reducers);
  return job_id;
}

NoticeOutcome Coordinator::on_worker_done(const CompletionNotice& notice) {
  const auto state = metastore_.get_job_state(notice.job_id);
  if (state.phase != notice.phase) {
    spdlog::debug("job {}: dropping stale {} notice from worker {} (job is {})", notice.job_id,
                  to_string(notice.phase), notice.worker_id, to_string(state.phase));
    return NoticeOutcome::kStale;
  }

  if (notice.status == NoticeStatus::kFailed) {
    const auto reason = fmt::format("{} worker {} failed: {}", to_string(notice.phase), notice.worker_id,
                                    notice.error_detail.value_or("unknown error"));
    fail_job(notice.job_id, reason);
    return NoticeOutcome::kJobFailed;
  }

  metastore::SetAddResult recorded;
  try {
    recorded = metastore_.record_completion_detailed(notice.job_id, notice.phase, notice.worker_id);
  } catch (const Error& e) {
    if (e.code() == Errc::kPhaseMismatch) return NoticeOutcome::kStale;
    throw;
  }
  const auto expected = expected_completions(notice.phase, state.config);
  if (recorded.size < expected) return recorded.added ? NoticeOutcome::kRecorded : NoticeOutcome::kDuplicate;

  // Every notice seen after the set filled up lands here, duplicates
  // included, so a crash between filling the set and advancing is repaired by
  // the next redelivery. The metastore admits only one transition out of the
  // phase.
  try {
    advance_phase(notice.job_id, notice.phase);
    return NoticeOutcome::kAdvanced;
  } catch (const Error& e) {
    if (e.code() == Errc::kIllegalTransition) return NoticeOutcome::kDuplicate;
    throw;
  }
}

PhaseAdvance Coordinator::advance_phase(std::string_view job_id, JobPhase from) {
  const auto current = metastore_.get_job_state(job_id);
  const auto to = next_phase(from, current.config);
  if (current.phase != from || !to) {
    throw Error(Errc::kIllegalTransition,
                fmt::format("job {} is {}, cannot advance from {}", job_id, to_string(current.phase), to_string(from)));
  }
  // Throws IllegalTransition if a concurrent caller got there first.
  const auto advanced = metastore_.update_job_state(job_id, *to);
  spdlog::info("job {}: {} -> {}", job_id, to_string(from), to_string(*to));

  PhaseAdvance advance{std::string(job_id), from, *to, {}, advanced.updated_at};
  const auto events = events_for(advanced, *to);
  for (const auto& event : events) advance.event_ids.push_back(event.event_id);
  notify_observer(advance);
  try {
    for (const auto& event : events) bus_.publish(std::string(topic_for(event.event_type)), event);
  } catch (const Error& e) {
    fail_job(job_id, std::string("could not publish trigger events: ") + e.what());
    throw;
  }
  return advance;
}

void Coordinator::fail_job(std::string_view job_id, const std::string& reason) {
  const auto state = metastore_.get_job_state(job_id);
  if (is_terminal(state.phase)) return;
  try {
    metastore_.update_job_state(job_id, JobPhase::kFailed, reason);
    spdlog::warn("job {} FAILED: {}", job_id, reason);
  } catch (const Error& e) {
    // Lost a race with a transition into a terminal phase.
    if (e.code() != Errc::kIllegalTransition) throw;
  }
}

}  // namespace mrflow
