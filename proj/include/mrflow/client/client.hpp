#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mrflow/client/pipeline.hpp"
#include "mrflow/metastore/metastore.hpp"
#include "mrflow/storage/object_store.hpp"

namespace mrflow {

// Submits one job and returns its id (HTTP client or in-process coordinator).
using SubmitFn = std::function<std::string(const JobConfig&)>;

struct MonitorOptions {
  std::chrono::milliseconds poll_interval{500};
  std::chrono::milliseconds deadline{10 * 60 * 1000};  // per job
};

enum class RunState { kCompleted, kFailed, kTimedOut };
std::string_view to_string(RunState state);

struct JobOutcome {
  std::string job_id;
  RunState state = RunState::kCompleted;
  std::optional<std::string> failure_reason;
};

struct PipelineResult {
  std::string name;
  std::vector<std::string> job_ids;  // in stage order, only stages that were submitted
  RunState state = RunState::kCompleted;
  std::optional<std::string> failure_reason;
};

// Polls the job state until it is terminal or the deadline passes. Read-only.
JobOutcome wait_for_job(const Metastore& metastore, const std::string& job_id, const MonitorOptions& options);

// Runs pipelines: stages of one pipeline strictly in sequence, different
// pipelines concurrently. A stage that fails or times out stops its pipeline.
class PipelineRunner {
 public:
  PipelineRunner(SubmitFn submit, const Metastore& metastore, MonitorOptions options = {},
                 const FunctionCatalog& catalog = FunctionCatalog::global());

  PipelineResult run(const PipelineSpec& spec) const;
  std::vector<PipelineResult> run_all(const std::vector<PipelineSpec>& specs) const;

 private:
  SubmitFn submit_;
  const Metastore& metastore_;
  MonitorOptions options_;
  const FunctionCatalog& catalog_;
};

// Names of the objects that hold a completed job's results.
std::vector<std::string> result_object_names(const JobConfig& config);

// Downloads a COMPLETED job's results into `out_dir`, one file per object.
// JobNotCompleted (with the failure reason, if any) or NoSuchJob otherwise.
std::vector<std::filesystem::path> fetch_results(storage::ObjectStore& store, const Metastore& metastore,
                                                 const std::string& bucket, const std::string& job_id,
                                                 const std::filesystem::path& out_dir);

struct GcReport {
  std::size_t objects_deleted = 0;
  std::size_t keys_deleted = 0;
};

// Deletes a job's spill and merge objects and its metastore record. Results
// under the output prefix are kept.
GcReport gc_job(storage::ObjectStore& store, Metastore& metastore, const std::string& bucket,
                const std::string& job_id);

}  // namespace mrflow
