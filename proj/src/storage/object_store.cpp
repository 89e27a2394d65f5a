#include "mrflow/storage/object_store.hpp"

#include "mrflow/core/error.hpp"

namespace mrflow::storage {

ObjectPath::ObjectPath(std::string b, std::string k) : bucket(std::move(b)), key(std::move(k)) {
  if (bucket.empty()) throw Error(Errc::kInvalidArgument, "object path needs a bucket");
  if (key.empty()) throw Error(Errc::kInvalidArgument, "object path needs a key");
  if (key.front() == '/') throw Error(Errc::kInvalidArgument, "object key must not begin with '/': " + key);
}

ObjectPath ObjectPath::prefix(std::string b, std::string key_prefix) {
  if (b.empty()) throw Error(Errc::kInvalidArgument, "object path needs a bucket");
  if (!key_prefix.empty() && key_prefix.front() == '/') {
    throw Error(Errc::kInvalidArgument, "object key must not begin with '/': " + key_prefix);
  }
  ObjectPath p;
  p.bucket = std::move(b);
  p.key = std::move(key_prefix);
  return p;
}

std::string join_key(std::string_view prefix, std::string_view name) {
  while (!prefix.empty() && prefix.back() == '/') prefix.remove_suffix(1);
  while (!name.empty() && name.front() == '/') name.remove_prefix(1);
  if (prefix.empty()) return std::string(name);
  std::string out(prefix);
  out.push_back('/');
  out.append(name);
  return out;
}

void check_range(ByteRange range) {
  if (range.start >= range.end) {
    throw Error(Errc::kInvalidRange,
                "empty or inverted range [" + std::to_string(range.start) + "," + std::to_string(range.end) + ")");
  }
}

MultipartWriter::MultipartWriter(std::unique_ptr<MultipartUpload> upload, ObjectPath path,
                                 std::uint64_t min_part_bytes)
    : upload_(std::move(upload)), path_(std::move(path)), min_part_bytes_(min_part_bytes) {}

MultipartWriter::~MultipartWriter() { abort(); }

void MultipartWriter::upload_part(std::string_view bytes) {
  if (finished_ || !upload_) throw Error(Errc::kAbortedUpload, "upload to " + path_.to_string() + " already closed");
  if (parts_ > 0 && last_part_bytes_ < min_part_bytes_) {
    abort();
    throw Error(Errc::kPartTooSmall, "part " + std::to_string(parts_) + " of " + path_.to_string() + " has " +
                                         std::to_string(last_part_bytes_) + " bytes; minimum is " +
                                         std::to_string(min_part_bytes_));
  }
  try {
    upload_->upload_part(parts_ + 1, bytes);
  } catch (...) {
    abort();
    throw;
  }
  ++parts_;
  last_part_bytes_ = bytes.size();
}

void MultipartWriter::complete() {
  if (finished_ || !upload_) throw Error(Errc::kAbortedUpload, "upload to " + path_.to_string() + " already closed");
  if (parts_ == 0) upload_part({});
  try {
    upload_->complete();
  } catch (...) {
    abort();
    throw;
  }
  finished_ = true;
}

void MultipartWriter::abort() noexcept {
  if (finished_ || !upload_) return;
  finished_ = true;
  upload_->abort();
}

MultipartWriter ObjectStore::begin_multipart(const ObjectPath& path, std::uint64_t min_part_bytes) {
  return MultipartWriter(start_multipart(path), path, min_part_bytes);
}

void multipart_put(ObjectStore& store, const ObjectPath& path, std::span<const std::string> parts,
                   std::uint64_t min_part_bytes) {
  auto writer = store.begin_multipart(path, min_part_bytes);
  for (const auto& part : parts) writer.upload_part(part);
  writer.complete();
}

std::string get_object(ObjectStore& store, const ObjectPath& path) {
  const auto size = store.object_size(path);
  if (size == 0) return {};
  return store.get_object_range(path, ByteRange{0, size});
}

}  // namespace mrflow::storage
