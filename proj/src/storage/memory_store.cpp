#include "mrflow/storage/memory_store.hpp"

#include <algorithm>

#include "mrflow/core/error.hpp"

namespace mrflow::storage {
namespace {

class MemoryMultipartUpload final : public MultipartUpload {
 public:
  MemoryMultipartUpload(MemoryObjectStore& store, ObjectPath path) : store_(store), path_(std::move(path)) {}

  void upload_part(int, std::string_view bytes) override { buffer_.append(bytes); }
  void complete() override { store_.put_object(path_, buffer_); }
  void abort() noexcept override { buffer_.clear(); }

 private:
  MemoryObjectStore& store_;
  ObjectPath path_;
  std::string buffer_;
};

}  // namespace

MemoryObjectStore::Blob MemoryObjectStore::find(const ObjectPath& path) const {
  std::lock_guard lock(mutex_);
  const auto b = buckets_.find(path.bucket);
  if (b == buckets_.end()) throw Error(Errc::kNoSuchObject, path.to_string());
  const auto o = b->second.find(path.key);
  if (o == b->second.end()) throw Error(Errc::kNoSuchObject, path.to_string());
  return o->second;
}

void MemoryObjectStore::put_object(const ObjectPath& path, std::string_view payload) {
  auto blob = std::make_shared<const std::string>(payload);
  std::lock_guard lock(mutex_);
  buckets_[path.bucket][path.key] = std::move(blob);
}

std::string MemoryObjectStore::get_object_range(const ObjectPath& path, ByteRange range) {
  check_range(range);
  const Blob blob = find(path);
  if (range.start >= blob->size()) {
    throw Error(Errc::kInvalidRange, "range start " + std::to_string(range.start) + " >= size " +
                                         std::to_string(blob->size()) + " of " + path.to_string());
  }
  const auto end = std::min<std::uint64_t>(range.end, blob->size());
  return blob->substr(range.start, end - range.start);
}

std::vector<ObjectInfo> MemoryObjectStore::list_objects(const ObjectPath& prefix) {
  std::vector<ObjectInfo> out;
  std::lock_guard lock(mutex_);
  const auto b = buckets_.find(prefix.bucket);
  if (b == buckets_.end()) return out;
  for (auto it = b->second.lower_bound(prefix.key); it != b->second.end(); ++it) {
    if (it->first.compare(0, prefix.key.size(), prefix.key) != 0) break;
    out.push_back(ObjectInfo{ObjectPath(prefix.bucket, it->first), it->second->size()});
  }
  return out;
}

std::uint64_t MemoryObjectStore::object_size(const ObjectPath& path) { return find(path)->size(); }

void MemoryObjectStore::delete_object(const ObjectPath& path) {
  std::lock_guard lock(mutex_);
  const auto b = buckets_.find(path.bucket);
  if (b != buckets_.end()) b->second.erase(path.key);
}

std::uint64_t MemoryObjectStore::total_bytes() const {
  std::lock_guard lock(mutex_);
  std::uint64_t total = 0;
  for (const auto& [_, objects] : buckets_) {
    for (const auto& [__, blob] : objects) total += blob->size();
  }
  return total;
}

std::unique_ptr<MultipartUpload> MemoryObjectStore::start_multipart(const ObjectPath& path) {
  return std::make_unique<MemoryMultipartUpload>(*this, path);
}

}  // namespace mrflow::storage
