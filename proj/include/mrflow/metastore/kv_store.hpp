#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace mrflow::metastore {

struct SetAddResult {
  bool added = false;     // member was not present before
  std::size_t size = 0;   // cardinality afterwards
};

// Minimal key-value surface the metadata layer needs. Every call is atomic
// and linearizable per key.
class KvStore {
 public:
  virtual ~KvStore() = default;

  virtual std::optional<std::string> get(const std::string& key) = 0;
  virtual void set(const std::string& key, const std::string& value) = 0;
  // Writes `value` iff the current value equals `expected` (nullopt: key absent).
  virtual bool compare_and_set(const std::string& key, const std::optional<std::string>& expected,
                               const std::string& value) = 0;
  // Adds `member` to the set at `key`.
  virtual SetAddResult set_add(const std::string& key, const std::string& member) = 0;
  virtual std::size_t set_size(const std::string& key) = 0;
  virtual std::vector<std::string> set_members(const std::string& key) = 0;
  // Sorted bytewise.
  virtual std::vector<std::string> keys_with_prefix(const std::string& prefix) = 0;
  virtual void erase(const std::string& key) = 0;
};

class MemoryKvStore final : public KvStore {
 public:
  std::optional<std::string> get(const std::string& key) override;
  void set(const std::string& key, const std::string& value) override;
  bool compare_and_set(const std::string& key, const std::optional<std::string>& expected,
                       const std::string& value) override;
  SetAddResult set_add(const std::string& key, const std::string& member) override;
  std::size_t set_size(const std::string& key) override;
  std::vector<std::string> set_members(const std::string& key) override;
  std::vector<std::string> keys_with_prefix(const std::string& prefix) override;
  void erase(const std::string& key) override;

  // Snapshot of every key and value, sets rendered as sorted members.
  std::map<std::string, std::variant<std::string, std::set<std::string>>> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> strings_;
  std::map<std::string, std::set<std::string>> sets_;
};

}  // namespace mrflow::metastore
