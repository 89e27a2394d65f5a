#include "mrflow/client/pipeline.hpp"

#include <fmt/format.h>

#include "mrflow/core/error.hpp"

namespace mrflow {
namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::kInvalidPipeline, what); }

}  // namespace

PipelineSpec pipeline_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) invalid("pipeline must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "stages" && key != "reduce" && key != "config" && key != "overrides") {
      invalid("unknown pipeline field '" + key + "'");
    }
  }
  PipelineSpec spec;
  try {
    if (doc.contains("name")) spec.name = doc.at("name").get<std::string>();
    if (!doc.contains("stages") || !doc.at("stages").is_array()) invalid("'stages' must be a list of map functions");
    for (const auto& stage : doc.at("stages")) spec.stages.push_back(function_ref_from_json(stage, "stages"));
    if (doc.contains("reduce") && !doc.at("reduce").is_null()) {
      spec.reduce = function_ref_from_json(doc.at("reduce"), "reduce");
    }
    if (doc.contains("config")) {
      if (!doc.at("config").is_object()) invalid("'config' must be an object");
      spec.config = doc.at("config");
    }
    if (doc.contains("overrides")) {
      if (!doc.at("overrides").is_array()) invalid("'overrides' must be a list");
      for (const auto& o : doc.at("overrides")) {
        if (!o.is_object()) invalid("each override must be an object");
        spec.overrides.push_back(o);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("malformed pipeline: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::kInvalidPipeline) throw;
    invalid(e.detail());
  }
  if (spec.stages.empty()) invalid("a pipeline needs at least one stage");
  if (spec.overrides.size() > spec.stages.size()) invalid("more overrides than stages");
  return spec;
}

nlohmann::json to_json(const PipelineSpec& spec) {
  nlohmann::json doc = {{"stages", nlohmann::json::array()}, {"config", spec.config}};
  if (!spec.name.empty()) doc["name"] = spec.name;
  for (const auto& s : spec.stages) doc["stages"].push_back(function_ref_to_json(s));
  if (spec.reduce) doc["reduce"] = function_ref_to_json(*spec.reduce);
  if (!spec.overrides.empty()) doc["overrides"] = spec.overrides;
  return doc;
}

std::vector<PipelineSpec> parse_pipeline_file(std::string_view raw) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    invalid(std::string("pipeline file is not JSON: ") + e.what());
  }
  std::vector<PipelineSpec> specs;
  const nlohmann::json* list = nullptr;
  if (doc.is_array()) list = &doc;
  else if (doc.is_object() && doc.contains("pipelines")) list = &doc.at("pipelines");
  if (!list) {
    specs.push_back(pipeline_from_json(doc));
    return specs;
  }
  if (!list->is_array()) invalid("'pipelines' must be a list");
  for (const auto& p : *list) specs.push_back(pipeline_from_json(p));
  if (specs.empty()) invalid("pipeline file holds no pipelines");
  return specs;
}

std::string stage_output_prefix(std::string_view base_output, std::size_t stage) {
  while (base_output.ends_with('/')) base_output.remove_suffix(1);
  return fmt::format("{}/stage-{}/", base_output, stage);
}

std::vector<JobConfig> expand_pipeline(const PipelineSpec& spec, const FunctionCatalog& catalog) {
  if (spec.stages.empty()) invalid("a pipeline needs at least one stage");
  if (!spec.config.is_object()) invalid("'config' must be an object");
  for (const char* reserved : {"map_fn", "reduce_fn", "job_id"}) {
    if (spec.config.contains(reserved)) invalid(std::string("'config' must not set ") + reserved);
  }
  if (!spec.config.contains("output_prefix") || !spec.config.at("output_prefix").is_string()) {
    invalid("'config.output_prefix' is required");
  }
  const auto base_output = spec.config.at("output_prefix").get<std::string>();
  if (base_output.empty()) invalid("'config.output_prefix' is empty");

  std::vector<JobConfig> jobs;
  const auto last = spec.stages.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    nlohmann::json doc = spec.config;
    if (i < spec.overrides.size()) {
      for (const auto& [key, value] : spec.overrides[i].items()) {
        if (key == "map_fn" || key == "reduce_fn" || key == "job_id") {
          invalid(fmt::format("stage {}: override must not set {}", i, key));
        }
        doc[key] = value;
      }
    }
    doc["map_fn"] = function_ref_to_json(spec.stages[i]);
    if (i > 0) {
      doc["input_prefixes"] = nlohmann::json::array({stage_output_prefix(base_output, i - 1)});
      doc["binary_mode"] = true;
      doc["record_input"] = true;
    }
    if (i < last) {
      doc["output_prefix"] = stage_output_prefix(base_output, i);
      doc["num_reducers"] = 0;
      doc["run_finalizer"] = false;
      doc["final_binary"] = false;
    } else {
      doc["output_prefix"] = base_output;
      if (spec.reduce) {
        doc["reduce_fn"] = function_ref_to_json(*spec.reduce);
        const auto& r = doc["num_reducers"];
        if (!r.is_number_integer() || r.get<std::int64_t>() <= 0) {
          invalid("a reduce function needs config.num_reducers >= 1");
        }
      } else {
        doc["num_reducers"] = 0;
      }
    }
    try {
      jobs.push_back(job_config_from_json(doc, catalog));
    } catch (const Error& e) {
      invalid(fmt::format("stage {}: {}", i, e.what()));
    }
  }
  return jobs;
}

}  // namespace mrflow
