#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrflow/core/catalog.hpp"

namespace mrflow {

inline constexpr std::uint64_t kDefaultBufferBytes = 52'428'800;     // 50MB
inline constexpr std::uint64_t kDefaultMultipartBytes = 5'242'880;   // 5MB
inline constexpr std::uint32_t kDefaultThresholdPercent = 75;
inline constexpr std::uint32_t kDefaultMergeFanIn = 100;

// Declarative description of one MapReduce job. Immutable once validated.
struct JobConfig {
  std::string job_id;  // empty until the coordinator assigns one
  std::vector<std::string> input_prefixes;
  std::string output_prefix;
  std::uint32_t num_mappers = 1;
  std::uint32_t num_reducers = 0;  // 0 => map-only
  bool run_finalizer = false;
  // Split purely on byte offsets instead of aligning to LF.
  bool binary_mode = false;
  // Inputs are record-codec objects (output of a previous map-only stage).
  // Splits align to encoded record boundaries and the map function sees one
  // (key, value) record per call. Requires binary_mode.
  bool record_input = false;
  // Finalizer writes the binary codec instead of tab-separated text.
  bool final_binary = false;
  std::uint64_t input_buffer_bytes = kDefaultBufferBytes;
  std::uint64_t output_buffer_bytes = kDefaultBufferBytes;
  std::uint32_t buffer_threshold_percent = kDefaultThresholdPercent;
  std::uint64_t multipart_part_bytes = kDefaultMultipartBytes;
  std::uint32_t merge_fan_in = kDefaultMergeFanIn;
  bool combiner_enabled = true;
  FunctionRef map_fn;
  std::optional<FunctionRef> reduce_fn;

  // Resident bytes at which the mapper spills.
  std::uint64_t spill_threshold_bytes() const {
    return output_buffer_bytes * buffer_threshold_percent / 100;
  }

  friend bool operator==(const JobConfig&, const JobConfig&) = default;
};

// Parses a job-config document, applies defaults and validates. Unknown fields
// are rejected. Throws MalformedConfig, InvalidConfig or UnknownFunction.
JobConfig parse_job_config(std::string_view raw, const FunctionCatalog& catalog = FunctionCatalog::global());
JobConfig job_config_from_json(const nlohmann::json& doc, const FunctionCatalog& catalog = FunctionCatalog::global());
// Structural validation only; function names are not resolved.
JobConfig job_config_from_json_unchecked(const nlohmann::json& doc);

// Checks the structural invariants; with a catalog also resolves function names.
void validate_job_config(const JobConfig& config, const FunctionCatalog* catalog);

nlohmann::json to_json(const JobConfig& config);
std::string serialize_job_config(const JobConfig& config);

nlohmann::json function_ref_to_json(const FunctionRef& ref);
FunctionRef function_ref_from_json(const nlohmann::json& doc, std::string_view field);

}  // namespace mrflow
