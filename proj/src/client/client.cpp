#include "mrflow/client/client.hpp"

#include <fstream>
#include <future>
#include <thread>

#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"
#include "mrflow/runtime/layout.hpp"
#include "mrflow/storage/object_io.hpp"

namespace mrflow {

std::string_view to_string(RunState state) {
  switch (state) {
    case RunState::kCompleted: return "COMPLETED";
    case RunState::kFailed: return "FAILED";
    case RunState::kTimedOut: return "TIMED_OUT";
  }
  return "UNKNOWN";
}

JobOutcome wait_for_job(const Metastore& metastore, const std::string& job_id, const MonitorOptions& options) {
  const auto deadline = std::chrono::steady_clock::now() + options.deadline;
  while (true) {
    const auto state = metastore.get_job_state(job_id);
    if (state.phase == JobPhase::kCompleted) return JobOutcome{job_id, RunState::kCompleted, std::nullopt};
    if (state.phase == JobPhase::kFailed) return JobOutcome{job_id, RunState::kFailed, state.failure_reason};
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      return JobOutcome{job_id, RunState::kTimedOut,
                        "job still " + std::string(to_string(state.phase)) + " at the poll deadline"};
    }
    std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(options.poll_interval, deadline - now));
  }
}

PipelineRunner::PipelineRunner(SubmitFn submit, const Metastore& metastore, MonitorOptions options,
                               const FunctionCatalog& catalog)
    : submit_(std::move(submit)), metastore_(metastore), options_(options), catalog_(catalog) {}

PipelineResult PipelineRunner::run(const PipelineSpec& spec) const {
  PipelineResult result;
  result.name = spec.name;
  const auto jobs = expand_pipeline(spec, catalog_);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto job_id = submit_(jobs[i]);
    result.job_ids.push_back(job_id);
    const auto outcome = wait_for_job(metastore_, job_id, options_);
    if (outcome.state != RunState::kCompleted) {
      result.state = outcome.state;
      result.failure_reason = "stage " + std::to_string(i) + " (" + job_id + "): " +
                              outcome.failure_reason.value_or("no reason recorded");
      spdlog::warn("pipeline {}: {}", spec.name, *result.failure_reason);
      return result;
    }
  }
  return result;
}

std::vector<PipelineResult> PipelineRunner::run_all(const std::vector<PipelineSpec>& specs) const {
  std::vector<std::future<PipelineResult>> running;
  running.reserve(specs.size());
  for (const auto& spec : specs) running.push_back(std::async(std::launch::async, [this, &spec] { return run(spec); }));
  std::vector<PipelineResult> results;
  results.reserve(specs.size());
  for (auto& f : running) results.push_back(f.get());
  return results;
}

std::vector<std::string> result_object_names(const JobConfig& config) {
  if (config.run_finalizer) return {std::string(kFinalObjectName)};
  std::vector<std::string> names;
  if (config.num_reducers > 0) {
    for (std::uint32_t r = 0; r < config.num_reducers; ++r) names.push_back(reducer_output_name(r));
  } else {
    for (std::uint32_t m = 0; m < config.num_mappers; ++m) names.push_back(mapper_output_name(m));
  }
  return names;
}

std::vector<std::filesystem::path> fetch_results(storage::ObjectStore& store, const Metastore& metastore,
                                                 const std::string& bucket, const std::string& job_id,
                                                 const std::filesystem::path& out_dir) {
  const auto state = metastore.get_job_state(job_id);
  if (state.phase != JobPhase::kCompleted) {
    std::string detail = "job " + job_id + " is " + std::string(to_string(state.phase));
    if (state.failure_reason) detail += ": " + *state.failure_reason;
    throw Error(Errc::kJobNotCompleted, detail);
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> files;
  for (const auto& name : result_object_names(state.config)) {
    const auto path = object_under(state.config.output_prefix, name, bucket);
    store.object_size(path);  // NoSuchObject before creating partial output
    const auto file = out_dir / name;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kInvalidArgument, "cannot write " + file.string());
    storage::RangeReader reader(store, path, {0, UINT64_MAX}, 1 << 20);
    while (auto window = reader.next_window()) out.write(window->data(), static_cast<std::streamsize>(window->size()));
    out.close();
    if (!out) throw Error(Errc::kInvalidArgument, "short write to " + file.string());
    files.push_back(file);
  }
  return files;
}

GcReport gc_job(storage::ObjectStore& store, Metastore& metastore, const std::string& bucket,
                const std::string& job_id) {
  metastore.get_job_state(job_id);  // NoSuchJob
  GcReport report;
  for (const auto& prefix : {intermediate_prefix(bucket, job_id), merge_prefix(bucket, job_id)}) {
    for (const auto& info : store.list_objects(prefix)) {
      store.delete_object(info.path);
      ++report.objects_deleted;
    }
  }
  report.keys_deleted = metastore.delete_job(job_id);
  return report;
}

}  // namespace mrflow
