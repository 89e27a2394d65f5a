#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrflow/core/record.hpp"

namespace mrflow {

using Params = std::map<std::string, std::string>;

// Names a user function in the worker-side catalog, plus optional parameters.
struct FunctionRef {
  std::string name;
  Params params;

  friend bool operator==(const FunctionRef&, const FunctionRef&) = default;
};

using Emit = std::function<void(std::string_view key, std::string_view value)>;

// map(k1, v1) -> list(k2, v2). Must be deterministic in its inputs.
using MapFn = std::function<void(std::string_view chunk_key, std::string_view payload, const Params& params,
                                 const Emit& emit)>;

// reduce(k2, list(v2)) -> one record. When used as a combiner the function
// must be associative and commutative over values; that is the caller's
// obligation and is not checked.
using ReduceFn = std::function<Record(std::string_view key, std::span<const std::string> values,
                                      const Params& params)>;

// Registry of map/reduce functions keyed by name. Built-ins (wordcount_map,
// identity_map, sum_reduce) are installed on construction; deployments
// register their own functions at startup before any job runs.
class FunctionCatalog {
 public:
  FunctionCatalog();

  // Process-wide catalog used by workers and config validation.
  static FunctionCatalog& global();

  void register_map(const std::string& name, MapFn fn);
  void register_reduce(const std::string& name, ReduceFn fn);

  bool has_map(const std::string& name) const;
  bool has_reduce(const std::string& name) const;

  // Both throw UnknownFunction.
  MapFn map(const FunctionRef& ref) const;
  ReduceFn reduce(const FunctionRef& ref) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, MapFn, std::less<>> maps_;
  std::map<std::string, ReduceFn, std::less<>> reduces_;
};

// Runs a map function and collects its output.
std::vector<Record> apply_map(const MapFn& fn, std::string_view chunk_key, std::string_view payload,
                              const Params& params = {});

namespace builtin {
// Splits on ASCII whitespace and emits (word, "1") per token.
void wordcount_map(std::string_view chunk_key, std::string_view payload, const Params& params, const Emit& emit);
// Emits the chunk unchanged as a single (chunk_key, payload) record.
void identity_map(std::string_view chunk_key, std::string_view payload, const Params& params, const Emit& emit);
// Sums decimal integer values.
Record sum_reduce(std::string_view key, std::span<const std::string> values, const Params& params);
}  // namespace builtin

}  // namespace mrflow
