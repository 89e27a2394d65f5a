#include "mrflow/metastore/metastore.hpp"

#include <array>
#include <chrono>

#include "mrflow/core/error.hpp"

namespace mrflow {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<JobPhase, std::string_view>, 7> kPhaseNames = {{
    {JobPhase::kPending, "PENDING"},
    {JobPhase::kSplitting, "SPLITTING"},
    {JobPhase::kMapping, "MAPPING"},
    {JobPhase::kReducing, "REDUCING"},
    {JobPhase::kFinalizing, "FINALIZING"},
    {JobPhase::kCompleted, "COMPLETED"},
    {JobPhase::kFailed, "FAILED"},
}};

}  // namespace

std::string_view to_string(JobPhase phase) {
  for (const auto& [p, name] : kPhaseNames) {
    if (p == phase) return name;
  }
  return "UNKNOWN";
}

JobPhase phase_from_string(std::string_view name) {
  for (const auto& [p, n] : kPhaseNames) {
    if (n == name) return p;
  }
  throw Error(Errc::kInvalidArgument, "unknown job phase '" + std::string(name) + "'");
}

bool is_terminal(JobPhase phase) { return phase == JobPhase::kCompleted || phase == JobPhase::kFailed; }

std::optional<JobPhase> next_phase(JobPhase phase, const JobConfig& config) {
  switch (phase) {
    case JobPhase::kPending: return JobPhase::kSplitting;
    case JobPhase::kSplitting: return JobPhase::kMapping;
    case JobPhase::kMapping: return config.num_reducers == 0 ? JobPhase::kCompleted : JobPhase::kReducing;
    case JobPhase::kReducing: return config.run_finalizer ? JobPhase::kFinalizing : JobPhase::kCompleted;
    case JobPhase::kFinalizing: return JobPhase::kCompleted;
    case JobPhase::kCompleted:
    case JobPhase::kFailed: return std::nullopt;
  }
  return std::nullopt;
}

bool is_legal_transition(JobPhase from, JobPhase to, const JobConfig& config) {
  if (is_terminal(from)) return false;
  if (from == JobPhase::kReducing && config.num_reducers == 0) return false;
  if (from == JobPhase::kFinalizing && !config.run_finalizer) return false;
  if (to == JobPhase::kFailed) return true;
  return next_phase(from, config) == to;
}

std::uint32_t expected_completions(JobPhase phase, const JobConfig& config) {
  switch (phase) {
    case JobPhase::kSplitting: return 1;
    case JobPhase::kMapping: return config.num_mappers;
    case JobPhase::kReducing: return config.num_reducers;
    case JobPhase::kFinalizing: return 1;
    default: return 0;
  }
}

std::int64_t now_millis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

json to_json(const JobState& s) {
  json doc = {
      {"job_id", s.job_id},
      {"phase", std::string(to_string(s.phase))},
      {"created_at", s.created_at},
      {"updated_at", s.updated_at},
      {"config", to_json(s.config)},
  };
  if (s.failure_reason) doc["failure_reason"] = *s.failure_reason;
  return doc;
}

JobState job_state_from_json(const json& doc) {
  JobState s;
  s.job_id = doc.at("job_id").get<std::string>();
  s.phase = phase_from_string(doc.at("phase").get<std::string>());
  s.created_at = doc.at("created_at").get<std::int64_t>();
  s.updated_at = doc.at("updated_at").get<std::int64_t>();
  if (doc.contains("failure_reason")) s.failure_reason = doc.at("failure_reason").get<std::string>();
  // The snapshot was validated at submission; function names are resolved by
  // the worker that runs them, so a monitoring process need not know them.
  JobConfig c = job_config_from_json_unchecked(doc.at("config"));
  s.config = std::move(c);
  return s;
}

std::uint64_t ChunkAssignment::total_bytes() const {
  std::uint64_t n = 0;
  for (const auto& p : pieces) n += p.range.length();
  return n;
}

json to_json(const ChunkAssignment& a) {
  json pieces = json::array();
  for (const auto& p : a.pieces) {
    pieces.push_back({{"bucket", p.path.bucket}, {"key", p.path.key}, {"start", p.range.start}, {"end", p.range.end}});
  }
  return {{"job_id", a.job_id}, {"mapper_id", a.mapper_id}, {"pieces", pieces}};
}

ChunkAssignment chunk_assignment_from_json(const json& doc) {
  ChunkAssignment a;
  a.job_id = doc.at("job_id").get<std::string>();
  a.mapper_id = doc.at("mapper_id").get<std::uint32_t>();
  for (const auto& p : doc.at("pieces")) {
    a.pieces.push_back(ChunkPiece{storage::ObjectPath(p.at("bucket").get<std::string>(), p.at("key").get<std::string>()),
                                  storage::ByteRange{p.at("start").get<std::uint64_t>(), p.at("end").get<std::uint64_t>()}});
  }
  return a;
}

namespace keys {
std::string job_prefix(std::string_view job_id) { return "job:" + std::string(job_id) + ":"; }
std::string state(std::string_view job_id) { return job_prefix(job_id) + "state"; }
std::string chunk(std::string_view job_id, std::uint32_t mapper_id) {
  return job_prefix(job_id) + "chunk:" + std::to_string(mapper_id);
}
std::string done(std::string_view job_id, JobPhase phase) {
  return job_prefix(job_id) + "done:" + std::string(to_string(phase));
}
}  // namespace keys

Metastore::Metastore(std::shared_ptr<metastore::KvStore> kv) : kv_(std::move(kv)) {}

JobState Metastore::create_job(const JobConfig& config) {
  if (config.job_id.empty()) throw Error(Errc::kInvalidConfig, "job_id: must be assigned before creation");
  JobState s;
  s.job_id = config.job_id;
  s.phase = JobPhase::kPending;
  s.created_at = s.updated_at = now_millis();
  s.config = config;
  if (!kv_->compare_and_set(keys::state(s.job_id), std::nullopt, to_json(s).dump())) {
    throw Error(Errc::kInvalidConfig, "job_id: job '" + s.job_id + "' already exists");
  }
  return s;
}

std::optional<JobState> Metastore::find_job_state(std::string_view job_id) const {
  const auto raw = kv_->get(keys::state(job_id));
  if (!raw) return std::nullopt;
  return job_state_from_json(json::parse(*raw));
}

JobState Metastore::get_job_state(std::string_view job_id) const {
  auto s = find_job_state(job_id);
  if (!s) throw Error(Errc::kNoSuchJob, std::string(job_id));
  return std::move(*s);
}

JobState Metastore::update_job_state(std::string_view job_id, JobPhase new_phase,
                                     std::optional<std::string> failure_reason) {
  const std::string key = keys::state(job_id);
  while (true) {
    const auto raw = kv_->get(key);
    if (!raw) throw Error(Errc::kNoSuchJob, std::string(job_id));
    JobState s = job_state_from_json(json::parse(*raw));
    if (!is_legal_transition(s.phase, new_phase, s.config)) {
      throw Error(Errc::kIllegalTransition, std::string(job_id) + ": " + std::string(to_string(s.phase)) + " -> " +
                                                std::string(to_string(new_phase)));
    }
    s.phase = new_phase;
    if (new_phase == JobPhase::kFailed) s.failure_reason = failure_reason.value_or("unspecified failure");
    s.updated_at = std::max(now_millis(), s.updated_at);
    if (kv_->compare_and_set(key, raw, to_json(s).dump())) return s;
  }
}

void Metastore::store_chunk_assignment(const ChunkAssignment& a) {
  const auto s = get_job_state(a.job_id);
  if (s.phase != JobPhase::kSplitting) {
    throw Error(Errc::kPhaseMismatch, a.job_id + " is " + std::string(to_string(s.phase)) + ", not SPLITTING");
  }
  for (const auto& p : a.pieces) storage::check_range(p.range);
  kv_->set(keys::chunk(a.job_id, a.mapper_id), to_json(a).dump());
}

ChunkAssignment Metastore::fetch_chunk_assignment(std::string_view job_id, std::uint32_t mapper_id) const {
  const auto raw = kv_->get(keys::chunk(job_id, mapper_id));
  if (!raw) {
    throw Error(Errc::kNoSuchAssignment, std::string(job_id) + " mapper " + std::to_string(mapper_id));
  }
  return chunk_assignment_from_json(json::parse(*raw));
}

std::size_t Metastore::record_completion(std::string_view job_id, JobPhase phase, std::uint32_t worker_id) {
  return record_completion_detailed(job_id, phase, worker_id).size;
}

metastore::SetAddResult Metastore::record_completion_detailed(std::string_view job_id, JobPhase phase,
                                                              std::uint32_t worker_id) {
  const auto s = get_job_state(job_id);
  if (s.phase != phase) {
    throw Error(Errc::kPhaseMismatch, std::string(job_id) + " is " + std::string(to_string(s.phase)) +
                                          ", notice is for " + std::string(to_string(phase)));
  }
  return kv_->set_add(keys::done(job_id, phase), std::to_string(worker_id));
}

std::size_t Metastore::completion_count(std::string_view job_id, JobPhase phase) const {
  return kv_->set_size(keys::done(job_id, phase));
}

std::size_t Metastore::delete_job(std::string_view job_id) {
  const auto all = kv_->keys_with_prefix(keys::job_prefix(job_id));
  for (const auto& k : all) kv_->erase(k);
  return all.size();
}

}  // namespace mrflow
