#include "mrflow/core/job_config.hpp"

#include <limits>
#include <set>

#include "mrflow/core/error.hpp"

namespace mrflow {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(std::string_view field, std::string_view why) {
  throw Error(Errc::kInvalidConfig, std::string(field) + ": " + std::string(why));
}

template <typename T>
T read_uint(const json& doc, std::string_view field) {
  const json& v = doc.at(std::string(field));
  if (!v.is_number_integer()) invalid(field, "must be an integer");
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > std::numeric_limits<T>::max()) invalid(field, "out of range");
    return static_cast<T>(u);
  }
  const auto s = v.get<std::int64_t>();
  if (s < 0) invalid(field, "must not be negative");
  if (static_cast<std::uint64_t>(s) > std::numeric_limits<T>::max()) invalid(field, "out of range");
  return static_cast<T>(s);
}

bool read_bool(const json& doc, std::string_view field) {
  const json& v = doc.at(std::string(field));
  if (!v.is_boolean()) invalid(field, "must be a boolean");
  return v.get<bool>();
}

std::string read_string(const json& doc, std::string_view field) {
  const json& v = doc.at(std::string(field));
  if (!v.is_string()) invalid(field, "must be a string");
  return v.get<std::string>();
}

const std::set<std::string>& known_fields() {
  static const std::set<std::string> fields = {
      "job_id",          "input_prefixes",      "output_prefix",        "num_mappers",
      "num_reducers",    "run_finalizer",       "binary_mode",          "record_input",
      "final_binary",    "input_buffer_bytes",  "output_buffer_bytes",  "buffer_threshold_percent",
      "multipart_part_bytes", "merge_fan_in",   "combiner_enabled",     "map_fn",
      "reduce_fn",
  };
  return fields;
}

}  // namespace

FunctionRef function_ref_from_json(const json& doc, std::string_view field) {
  FunctionRef ref;
  if (doc.is_string()) {
    ref.name = doc.get<std::string>();
  } else if (doc.is_object()) {
    for (const auto& [k, v] : doc.items()) {
      if (k != "name" && k != "params") invalid(field, "unknown field '" + k + "'");
    }
    if (!doc.contains("name") || !doc["name"].is_string()) invalid(field, "name must be a string");
    ref.name = doc["name"].get<std::string>();
    if (doc.contains("params")) {
      if (!doc["params"].is_object()) invalid(field, "params must be an object of strings");
      for (const auto& [k, v] : doc["params"].items()) {
        if (!v.is_string()) invalid(field, "params." + k + " must be a string");
        ref.params.emplace(k, v.get<std::string>());
      }
    }
  } else {
    invalid(field, "must be a function name or {name, params}");
  }
  if (ref.name.empty()) invalid(field, "function name must not be empty");
  return ref;
}

json function_ref_to_json(const FunctionRef& ref) {
  if (ref.params.empty()) return ref.name;
  json params = json::object();
  for (const auto& [k, v] : ref.params) params[k] = v;
  return json{{"name", ref.name}, {"params", params}};
}

void validate_job_config(const JobConfig& c, const FunctionCatalog* catalog) {
  if (c.input_prefixes.empty()) invalid("input_prefixes", "at least one prefix is required");
  if (c.num_mappers < 1) invalid("num_mappers", "must be >= 1");
  if (c.run_finalizer && c.num_reducers == 0) invalid("run_finalizer", "requires num_reducers >= 1");
  if (c.num_reducers == 0 && c.reduce_fn) invalid("reduce_fn", "must be absent when num_reducers is 0");
  if (c.num_reducers > 0 && !c.reduce_fn) invalid("reduce_fn", "required when num_reducers > 0");
  if (c.buffer_threshold_percent < 1 || c.buffer_threshold_percent > 100) {
    invalid("buffer_threshold_percent", "must be within [1, 100]");
  }
  if (c.merge_fan_in < 2) invalid("merge_fan_in", "must be >= 2");
  if (c.input_buffer_bytes < 1) invalid("input_buffer_bytes", "must be >= 1");
  if (c.output_buffer_bytes < 1) invalid("output_buffer_bytes", "must be >= 1");
  if (c.multipart_part_bytes < 1) invalid("multipart_part_bytes", "must be >= 1");
  if (c.multipart_part_bytes > c.output_buffer_bytes) {
    invalid("multipart_part_bytes", "must not exceed output_buffer_bytes");
  }
  if (c.record_input && !c.binary_mode) invalid("record_input", "requires binary_mode");
  if (c.map_fn.name.empty()) invalid("map_fn", "required");
  if (catalog) {
    if (!catalog->has_map(c.map_fn.name)) {
      throw Error(Errc::kUnknownFunction, "map_fn: no map function named '" + c.map_fn.name + "'");
    }
    if (c.reduce_fn && !catalog->has_reduce(c.reduce_fn->name)) {
      throw Error(Errc::kUnknownFunction, "reduce_fn: no reduce function named '" + c.reduce_fn->name + "'");
    }
  }
}

namespace {

JobConfig parse_document(const json& doc, const FunctionCatalog* catalog) {
  if (!doc.is_object()) throw Error(Errc::kMalformedConfig, "job config must be a JSON object");
  for (const auto& [k, v] : doc.items()) {
    if (!known_fields().contains(k)) invalid(k, "unknown field");
  }
  for (const char* required : {"input_prefixes", "output_prefix", "num_mappers", "num_reducers", "map_fn"}) {
    if (!doc.contains(required)) invalid(required, "required field missing");
  }

  JobConfig c;
  if (doc.contains("job_id")) c.job_id = read_string(doc, "job_id");
  const json& prefixes = doc.at("input_prefixes");
  if (!prefixes.is_array()) invalid("input_prefixes", "must be an array of strings");
  for (const auto& p : prefixes) {
    if (!p.is_string() || p.get<std::string>().empty()) invalid("input_prefixes", "entries must be non-empty strings");
    c.input_prefixes.push_back(p.get<std::string>());
  }
  c.output_prefix = read_string(doc, "output_prefix");
  if (c.output_prefix.empty()) invalid("output_prefix", "must not be empty");
  c.num_mappers = read_uint<std::uint32_t>(doc, "num_mappers");
  c.num_reducers = read_uint<std::uint32_t>(doc, "num_reducers");
  if (doc.contains("run_finalizer")) c.run_finalizer = read_bool(doc, "run_finalizer");
  if (doc.contains("binary_mode")) c.binary_mode = read_bool(doc, "binary_mode");
  if (doc.contains("record_input")) c.record_input = read_bool(doc, "record_input");
  if (doc.contains("final_binary")) c.final_binary = read_bool(doc, "final_binary");
  if (doc.contains("input_buffer_bytes")) c.input_buffer_bytes = read_uint<std::uint64_t>(doc, "input_buffer_bytes");
  if (doc.contains("output_buffer_bytes")) c.output_buffer_bytes = read_uint<std::uint64_t>(doc, "output_buffer_bytes");
  if (doc.contains("buffer_threshold_percent")) {
    c.buffer_threshold_percent = read_uint<std::uint32_t>(doc, "buffer_threshold_percent");
  }
  if (doc.contains("multipart_part_bytes")) {
    c.multipart_part_bytes = read_uint<std::uint64_t>(doc, "multipart_part_bytes");
  }
  if (doc.contains("merge_fan_in")) c.merge_fan_in = read_uint<std::uint32_t>(doc, "merge_fan_in");
  if (doc.contains("combiner_enabled")) c.combiner_enabled = read_bool(doc, "combiner_enabled");
  c.map_fn = function_ref_from_json(doc.at("map_fn"), "map_fn");
  if (doc.contains("reduce_fn") && !doc.at("reduce_fn").is_null()) {
    c.reduce_fn = function_ref_from_json(doc.at("reduce_fn"), "reduce_fn");
  }

  validate_job_config(c, catalog);
  return c;
}

}  // namespace

JobConfig job_config_from_json(const json& doc, const FunctionCatalog& catalog) { return parse_document(doc, &catalog); }

JobConfig job_config_from_json_unchecked(const json& doc) { return parse_document(doc, nullptr); }

JobConfig parse_job_config(std::string_view raw, const FunctionCatalog& catalog) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(Errc::kMalformedConfig, e.what());
  }
  return job_config_from_json(doc, catalog);
}

json to_json(const JobConfig& c) {
  json doc = {
      {"input_prefixes", c.input_prefixes},
      {"output_prefix", c.output_prefix},
      {"num_mappers", c.num_mappers},
      {"num_reducers", c.num_reducers},
      {"run_finalizer", c.run_finalizer},
      {"binary_mode", c.binary_mode},
      {"record_input", c.record_input},
      {"final_binary", c.final_binary},
      {"input_buffer_bytes", c.input_buffer_bytes},
      {"output_buffer_bytes", c.output_buffer_bytes},
      {"buffer_threshold_percent", c.buffer_threshold_percent},
      {"multipart_part_bytes", c.multipart_part_bytes},
      {"merge_fan_in", c.merge_fan_in},
      {"combiner_enabled", c.combiner_enabled},
      {"map_fn", function_ref_to_json(c.map_fn)},
  };
  if (!c.job_id.empty()) doc["job_id"] = c.job_id;
  if (c.reduce_fn) doc["reduce_fn"] = function_ref_to_json(*c.reduce_fn);
  return doc;
}

std::string serialize_job_config(const JobConfig& config) { return to_json(config).dump(); }

}  // namespace mrflow
