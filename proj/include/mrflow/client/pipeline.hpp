#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrflow/core/job_config.hpp"

namespace mrflow {

// A chain of map functions with an optional final reduce.
//
//   {
//     "name": "wc",                         optional
//     "stages": ["identity_map", "wordcount_map"],
//     "reduce": "sum_reduce",               optional
//     "config": { job-config fields except map_fn / reduce_fn },
//     "overrides": [ {fields for stage 0}, {fields for stage 1} ]   optional
//   }
struct PipelineSpec {
  std::string name;
  std::vector<FunctionRef> stages;
  std::optional<FunctionRef> reduce;
  nlohmann::json config = nlohmann::json::object();
  std::vector<nlohmann::json> overrides;  // at most one per stage
};

// Throws InvalidPipeline.
PipelineSpec pipeline_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PipelineSpec& spec);

// A pipeline file holds one pipeline object, an array of them, or
// {"pipelines": [...]}.
std::vector<PipelineSpec> parse_pipeline_file(std::string_view raw);

// `{base_output}/stage-{i}/`
std::string stage_output_prefix(std::string_view base_output, std::size_t stage);

// One JobConfig per stage. Every stage but the last is map-only without a
// finalizer and writes under stage_output_prefix; each later stage reads
// the previous stage's output as codec records. The last stage writes to the
// base output prefix and carries the reduce function, the configured reducer
// count and run_finalizer (or is map-only when there is no reduce).
// InvalidPipeline on any problem, naming the offending stage.
std::vector<JobConfig> expand_pipeline(const PipelineSpec& spec,
                                       const FunctionCatalog& catalog = FunctionCatalog::global());

}  // namespace mrflow
