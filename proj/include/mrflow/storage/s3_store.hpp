#pragma once

#include <string>

#include "mrflow/storage/object_store.hpp"
#include "mrflow/storage/sigv4.hpp"

namespace mrflow::storage {

struct S3Settings {
  // Plain-HTTP endpoint of an S3-compatible service, e.g. "http://127.0.0.1:9000".
  std::string endpoint;
  sigv4::Credentials credentials;
  int timeout_ms = 30'000;
};

// S3-compatible backend using path-style addressing and SigV4-signed
// requests: ranged GET, HEAD, ListObjectsV2, PUT, DELETE and the multipart
// initiate/part/complete/abort calls.
class S3ObjectStore final : public ObjectStore {
 public:
  explicit S3ObjectStore(S3Settings settings);

  void put_object(const ObjectPath& path, std::string_view payload) override;
  std::string get_object_range(const ObjectPath& path, ByteRange range) override;
  std::vector<ObjectInfo> list_objects(const ObjectPath& prefix) override;
  std::uint64_t object_size(const ObjectPath& path) override;
  void delete_object(const ObjectPath& path) override;

  struct Response {
    int status = 0;
    std::string body;
    std::string etag;
    std::string content_length;
  };

  Response send(const std::string& method, const std::string& path,
                const std::vector<std::pair<std::string, std::string>>& query, std::string_view body,
                const std::vector<std::pair<std::string, std::string>>& extra_headers = {});

 protected:
  std::unique_ptr<MultipartUpload> start_multipart(const ObjectPath& path) override;

 private:
  S3Settings settings_;
  std::string host_header_;
};

namespace xml {
// Text content of every <tag>...</tag> element, entity-decoded, in order.
std::vector<std::string> all_elements(std::string_view doc, std::string_view tag);
// Raw inner text of each <tag>...</tag> block (not decoded).
std::vector<std::string_view> blocks(std::string_view doc, std::string_view tag);
std::string escape(std::string_view text);
std::string unescape(std::string_view text);
}  // namespace xml

}  // namespace mrflow::storage
