#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "mrflow/storage/object_store.hpp"

namespace mrflow::storage {

// In-process store for single-process deployments and tests.
class MemoryObjectStore final : public ObjectStore {
 public:
  void put_object(const ObjectPath& path, std::string_view payload) override;
  std::string get_object_range(const ObjectPath& path, ByteRange range) override;
  std::vector<ObjectInfo> list_objects(const ObjectPath& prefix) override;
  std::uint64_t object_size(const ObjectPath& path) override;
  void delete_object(const ObjectPath& path) override;

  // Total bytes currently stored.
  std::uint64_t total_bytes() const;

 protected:
  std::unique_ptr<MultipartUpload> start_multipart(const ObjectPath& path) override;

 private:
  using Blob = std::shared_ptr<const std::string>;
  Blob find(const ObjectPath& path) const;

  mutable std::mutex mutex_;
  // bucket -> key -> payload; std::map keeps keys in bytewise order.
  std::map<std::string, std::map<std::string, Blob>> buckets_;
};

}  // namespace mrflow::storage
