#include "mrflow/runtime/layout.hpp"

#include <charconv>

#include <fmt/format.h>

#include "mrflow/core/error.hpp"

namespace mrflow {

storage::ObjectPath resolve_prefix(std::string_view prefix, const std::string& default_bucket) {
  constexpr std::string_view kScheme = "s3://";
  if (prefix.starts_with(kScheme)) {
    prefix.remove_prefix(kScheme.size());
    const auto slash = prefix.find('/');
    const auto bucket = prefix.substr(0, slash);
    const auto key = slash == std::string_view::npos ? std::string_view{} : prefix.substr(slash + 1);
    if (bucket.empty()) throw Error(Errc::kInvalidArgument, "prefix names no bucket");
    return storage::ObjectPath::prefix(std::string(bucket), std::string(key));
  }
  while (prefix.starts_with('/')) prefix.remove_prefix(1);
  return storage::ObjectPath::prefix(default_bucket, std::string(prefix));
}

storage::ObjectPath object_under(std::string_view prefix, std::string_view name, const std::string& default_bucket) {
  const auto base = resolve_prefix(prefix, default_bucket);
  return storage::ObjectPath(base.bucket, storage::join_key(base.key, name));
}

std::string format_spill_name(const SpillName& name) {
  return fmt::format("spill-{}-{}-{}", name.reducer_id, name.file_index, name.mapper_id);
}

std::optional<SpillName> parse_spill_name(std::string_view key) {
  const auto slash = key.rfind('/');
  if (slash != std::string_view::npos) key.remove_prefix(slash + 1);
  if (!key.starts_with("spill-")) return std::nullopt;
  key.remove_prefix(6);

  std::uint32_t fields[3];
  for (int i = 0; i < 3; ++i) {
    const auto* begin = key.data();
    const auto* end = key.data() + key.size();
    if (begin == end || *begin < '0' || *begin > '9') return std::nullopt;
    const auto [ptr, ec] = std::from_chars(begin, end, fields[i]);
    if (ec != std::errc{}) return std::nullopt;
    key.remove_prefix(static_cast<std::size_t>(ptr - begin));
    if (i < 2) {
      if (!key.starts_with('-')) return std::nullopt;
      key.remove_prefix(1);
    }
  }
  if (!key.empty()) return std::nullopt;
  return SpillName{fields[0], fields[1], fields[2]};
}

storage::ObjectPath intermediate_prefix(const std::string& bucket, std::string_view job_id) {
  return storage::ObjectPath::prefix(bucket, fmt::format("{}/intermediate/", job_id));
}

storage::ObjectPath spill_path(const std::string& bucket, std::string_view job_id, const SpillName& name) {
  return storage::ObjectPath(bucket, fmt::format("{}/intermediate/{}", job_id, format_spill_name(name)));
}

storage::ObjectPath merge_run_path(const std::string& bucket, std::string_view job_id, std::uint32_t reducer_id,
                                   std::uint64_t n) {
  return storage::ObjectPath(bucket, fmt::format("{}/merge/{}/run-{}", job_id, reducer_id, n));
}

storage::ObjectPath merge_prefix(const std::string& bucket, std::string_view job_id) {
  return storage::ObjectPath::prefix(bucket, fmt::format("{}/merge/", job_id));
}

std::string mapper_output_name(std::uint32_t mapper_id) { return fmt::format("mapper-{}", mapper_id); }
std::string reducer_output_name(std::uint32_t reducer_id) { return fmt::format("reduce-{}", reducer_id); }

}  // namespace mrflow
