#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrflow::storage {

struct ObjectPath {
  std::string bucket;
  std::string key;

  ObjectPath() = default;
  // Throws InvalidArgument on an empty bucket/key or a key with a leading slash.
  ObjectPath(std::string bucket, std::string key);

  // Prefix paths used for listing may have an empty key.
  static ObjectPath prefix(std::string bucket, std::string key_prefix);

  std::string to_string() const { return bucket + "/" + key; }

  friend bool operator==(const ObjectPath&, const ObjectPath&) = default;
  friend auto operator<=>(const ObjectPath&, const ObjectPath&) = default;
};

// Half-open [start, end).
struct ByteRange {
  std::uint64_t start = 0;
  std::uint64_t end = 0;

  std::uint64_t length() const { return end - start; }

  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

struct ObjectInfo {
  ObjectPath path;
  std::uint64_t size = 0;

  friend bool operator==(const ObjectInfo&, const ObjectInfo&) = default;
};

// Joins key segments with exactly one slash between them.
std::string join_key(std::string_view prefix, std::string_view name);

// Backend side of a multipart upload. Parts arrive strictly in order.
class MultipartUpload {
 public:
  virtual ~MultipartUpload() = default;
  virtual void upload_part(int part_number, std::string_view bytes) = 0;
  virtual void complete() = 0;
  virtual void abort() noexcept = 0;
};

// RAII handle for an in-flight multipart upload. Enforces the minimum part
// size for every part except the last and aborts on destruction unless
// complete() succeeded. The object stays invisible until complete().
class MultipartWriter {
 public:
  MultipartWriter(std::unique_ptr<MultipartUpload> upload, ObjectPath path, std::uint64_t min_part_bytes);
  MultipartWriter(MultipartWriter&&) noexcept = default;
  MultipartWriter& operator=(MultipartWriter&&) = delete;
  ~MultipartWriter();

  // A part shorter than the minimum is only legal as the final part, so it is
  // rejected (PartTooSmall) once another part follows it.
  void upload_part(std::string_view bytes);
  void complete();
  void abort() noexcept;

  int parts_uploaded() const { return parts_; }
  const ObjectPath& path() const { return path_; }

 private:
  std::unique_ptr<MultipartUpload> upload_;
  ObjectPath path_;
  std::uint64_t min_part_bytes_ = 0;
  std::uint64_t last_part_bytes_ = 0;
  int parts_ = 0;
  bool finished_ = false;
};

// Flat key-addressed object storage. Implementations are safe for concurrent
// use; puts replace whole objects atomically (last writer wins).
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  virtual void put_object(const ObjectPath& path, std::string_view payload) = 0;
  // Returns bytes [start, min(end, size)). InvalidRange when start >= size.
  virtual std::string get_object_range(const ObjectPath& path, ByteRange range) = 0;
  // All objects whose key starts with prefix.key, sorted bytewise by key.
  virtual std::vector<ObjectInfo> list_objects(const ObjectPath& prefix) = 0;
  virtual std::uint64_t object_size(const ObjectPath& path) = 0;
  // Missing objects are not an error.
  virtual void delete_object(const ObjectPath& path) = 0;

  MultipartWriter begin_multipart(const ObjectPath& path, std::uint64_t min_part_bytes);

 protected:
  virtual std::unique_ptr<MultipartUpload> start_multipart(const ObjectPath& path) = 0;
};

void multipart_put(ObjectStore& store, const ObjectPath& path, std::span<const std::string> parts,
                   std::uint64_t min_part_bytes);

// Whole-object read; empty objects return an empty string.
std::string get_object(ObjectStore& store, const ObjectPath& path);

// Throws InvalidRange unless 0 <= start < end.
void check_range(ByteRange range);

}  // namespace mrflow::storage
