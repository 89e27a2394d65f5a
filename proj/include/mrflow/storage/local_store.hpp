#pragma once

#include <filesystem>

#include "mrflow/storage/object_store.hpp"

namespace mrflow::storage {

// Directory-backed store laid out as <root>/<bucket>/<key>. Writes land in a
// staging directory and are renamed into place, so readers only ever see
// complete objects.
class LocalObjectStore final : public ObjectStore {
 public:
  explicit LocalObjectStore(std::filesystem::path root);

  void put_object(const ObjectPath& path, std::string_view payload) override;
  std::string get_object_range(const ObjectPath& path, ByteRange range) override;
  std::vector<ObjectInfo> list_objects(const ObjectPath& prefix) override;
  std::uint64_t object_size(const ObjectPath& path) override;
  void delete_object(const ObjectPath& path) override;

  const std::filesystem::path& root() const { return root_; }

 protected:
  std::unique_ptr<MultipartUpload> start_multipart(const ObjectPath& path) override;

 private:
  friend class LocalMultipartUpload;

  std::filesystem::path object_file(const ObjectPath& path) const;
  std::filesystem::path staging_file();
  void commit(const std::filesystem::path& staged, const ObjectPath& path);

  std::filesystem::path root_;
};

}  // namespace mrflow::storage
