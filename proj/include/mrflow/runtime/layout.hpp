#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mrflow/storage/object_store.hpp"

namespace mrflow {

// Resolves a job prefix to a listing path. "s3://bucket/key" names its bucket
// explicitly; anything else is a key prefix in `default_bucket`.
storage::ObjectPath resolve_prefix(std::string_view prefix, const std::string& default_bucket);

// `{prefix}/{name}` inside the prefix's bucket.
storage::ObjectPath object_under(std::string_view prefix, std::string_view name, const std::string& default_bucket);

struct SpillName {
  std::uint32_t reducer_id = 0;
  std::uint32_t file_index = 0;
  std::uint32_t mapper_id = 0;

  friend bool operator==(const SpillName&, const SpillName&) = default;
};

std::string format_spill_name(const SpillName& name);
// Parses the last path segment; nullopt unless it is exactly
// spill-{r}-{f}-{m} with decimal fields.
std::optional<SpillName> parse_spill_name(std::string_view key);

// `{job_id}/intermediate/`
storage::ObjectPath intermediate_prefix(const std::string& bucket, std::string_view job_id);
storage::ObjectPath spill_path(const std::string& bucket, std::string_view job_id, const SpillName& name);
// `{job_id}/merge/{reducer_id}/run-{n}`
storage::ObjectPath merge_run_path(const std::string& bucket, std::string_view job_id, std::uint32_t reducer_id,
                                   std::uint64_t n);
storage::ObjectPath merge_prefix(const std::string& bucket, std::string_view job_id);

std::string mapper_output_name(std::uint32_t mapper_id);
std::string reducer_output_name(std::uint32_t reducer_id);
inline constexpr std::string_view kFinalObjectName = "final";

}  // namespace mrflow
