#include "mrflow/core/error.hpp"
#include "mrflow/metastore/kv_store.hpp"

namespace mrflow::metastore {

std::optional<std::string> MemoryKvStore::get(const std::string& key) {
  std::lock_guard lock(mutex_);
  const auto it = strings_.find(key);
  if (it == strings_.end()) return std::nullopt;
  return it->second;
}

void MemoryKvStore::set(const std::string& key, const std::string& value) {
  std::lock_guard lock(mutex_);
  if (sets_.contains(key)) throw Error(Errc::kInvalidArgument, "key holds a set: " + key);
  strings_[key] = value;
}

bool MemoryKvStore::compare_and_set(const std::string& key, const std::optional<std::string>& expected,
                                    const std::string& value) {
  std::lock_guard lock(mutex_);
  if (sets_.contains(key)) throw Error(Errc::kInvalidArgument, "key holds a set: " + key);
  const auto it = strings_.find(key);
  const bool matches = expected ? (it != strings_.end() && it->second == *expected) : it == strings_.end();
  if (!matches) return false;
  strings_[key] = value;
  return true;
}

SetAddResult MemoryKvStore::set_add(const std::string& key, const std::string& member) {
  std::lock_guard lock(mutex_);
  if (strings_.contains(key)) throw Error(Errc::kInvalidArgument, "key holds a string: " + key);
  auto& s = sets_[key];
  const bool added = s.insert(member).second;
  return {added, s.size()};
}

std::size_t MemoryKvStore::set_size(const std::string& key) {
  std::lock_guard lock(mutex_);
  const auto it = sets_.find(key);
  return it == sets_.end() ? 0 : it->second.size();
}

std::vector<std::string> MemoryKvStore::set_members(const std::string& key) {
  std::lock_guard lock(mutex_);
  const auto it = sets_.find(key);
  if (it == sets_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<std::string> MemoryKvStore::keys_with_prefix(const std::string& prefix) {
  std::lock_guard lock(mutex_);
  std::set<std::string> keys;
  for (auto it = strings_.lower_bound(prefix); it != strings_.end() && it->first.starts_with(prefix); ++it) {
    keys.insert(it->first);
  }
  for (auto it = sets_.lower_bound(prefix); it != sets_.end() && it->first.starts_with(prefix); ++it) {
    keys.insert(it->first);
  }
  return {keys.begin(), keys.end()};
}

void MemoryKvStore::erase(const std::string& key) {
  std::lock_guard lock(mutex_);
  strings_.erase(key);
  sets_.erase(key);
}

std::map<std::string, std::variant<std::string, std::set<std::string>>> MemoryKvStore::snapshot() const {
  std::lock_guard lock(mutex_);
  std::map<std::string, std::variant<std::string, std::set<std::string>>> out;
  for (const auto& [k, v] : strings_) out.emplace(k, v);
  for (const auto& [k, v] : sets_) out.emplace(k, v);
  return out;
}

}  // namespace mrflow::metastore
