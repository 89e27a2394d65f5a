#include "mrflow/core/catalog.hpp"

#include <charconv>

#include "mrflow/core/error.hpp"

namespace mrflow {
namespace builtin {
namespace {

constexpr bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

}  // namespace

void wordcount_map(std::string_view, std::string_view payload, const Params&, const Emit& emit) {
  std::size_t i = 0;
  const std::size_t n = payload.size();
  while (i < n) {
    while (i < n && is_space(payload[i])) ++i;
    const std::size_t start = i;
    while (i < n && !is_space(payload[i])) ++i;
    if (i > start) emit(payload.substr(start, i - start), "1");
  }
}

void identity_map(std::string_view chunk_key, std::string_view payload, const Params&, const Emit& emit) {
  emit(chunk_key, payload);
}

Record sum_reduce(std::string_view key, std::span<const std::string> values, const Params&) {
  long long total = 0;
  for (const auto& v : values) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw Error(Errc::kUdfFailure, "sum_reduce: value '" + v + "' is not an integer");
    }
    total += x;
  }
  return Record{std::string(key), std::to_string(total)};
}

}  // namespace builtin

FunctionCatalog::FunctionCatalog() {
  maps_.emplace("wordcount_map", &builtin::wordcount_map);
  maps_.emplace("identity_map", &builtin::identity_map);
  reduces_.emplace("sum_reduce", &builtin::sum_reduce);
}

FunctionCatalog& FunctionCatalog::global() {
  static FunctionCatalog catalog;
  return catalog;
}

void FunctionCatalog::register_map(const std::string& name, MapFn fn) {
  std::lock_guard lock(mutex_);
  maps_[name] = std::move(fn);
}

void FunctionCatalog::register_reduce(const std::string& name, ReduceFn fn) {
  std::lock_guard lock(mutex_);
  reduces_[name] = std::move(fn);
}

bool FunctionCatalog::has_map(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return maps_.contains(name);
}

bool FunctionCatalog::has_reduce(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return reduces_.contains(name);
}

MapFn FunctionCatalog::map(const FunctionRef& ref) const {
  std::lock_guard lock(mutex_);
  const auto it = maps_.find(ref.name);
  if (it == maps_.end()) throw Error(Errc::kUnknownFunction, "no map function named '" + ref.name + "'");
  return it->second;
}

ReduceFn FunctionCatalog::reduce(const FunctionRef& ref) const {
  std::lock_guard lock(mutex_);
  const auto it = reduces_.find(ref.name);
  if (it == reduces_.end()) throw Error(Errc::kUnknownFunction, "no reduce function named '" + ref.name + "'");
  return it->second;
}

std::vector<Record> apply_map(const MapFn& fn, std::string_view chunk_key, std::string_view payload,
                              const Params& params) {
  std::vector<Record> out;
  fn(chunk_key, payload, params,
     [&](std::string_view k, std::string_view v) { out.push_back(Record{std::string(k), std::string(v)}); });
  return out;
}

}  // namespace mrflow
