#include "mrflow/storage/local_store.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"

namespace fs = std::filesystem;

namespace mrflow::storage {
namespace {

constexpr const char* kStagingDir = ".mrflow-staging";

[[noreturn]] void rethrow_fs(const std::string& what, const std::error_code& ec) {
  if (ec == std::errc::permission_denied || ec == std::errc::operation_not_permitted) {
    throw Error(Errc::kAccessDenied, what + ": " + ec.message());
  }
  throw Error(Errc::kStoreUnavailable, what + ": " + ec.message());
}

void write_file(const fs::path& file, std::string_view payload) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) rethrow_fs("cannot open " + file.string(), std::error_code(errno, std::generic_category()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.flush();
  if (!out) rethrow_fs("cannot write " + file.string(), std::error_code(errno, std::generic_category()));
}

}  // namespace

class LocalMultipartUpload final : public MultipartUpload {
 public:
  LocalMultipartUpload(LocalObjectStore& store, ObjectPath path)
      : store_(store), path_(std::move(path)), staged_(store.staging_file()) {
    out_.open(staged_, std::ios::binary | std::ios::trunc);
    if (!out_) rethrow_fs("cannot stage multipart upload " + staged_.string(),
                          std::error_code(errno, std::generic_category()));
  }

  ~LocalMultipartUpload() override { abort(); }

  void upload_part(int, std::string_view bytes) override {
    out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out_) rethrow_fs("cannot write part for " + path_.to_string(), std::error_code(errno, std::generic_category()));
  }

  void complete() override {
    out_.close();
    if (!out_) rethrow_fs("cannot finish " + path_.to_string(), std::error_code(errno, std::generic_category()));
    store_.commit(staged_, path_);
    done_ = true;
  }

  void abort() noexcept override {
    if (done_) return;
    done_ = true;
    out_.close();
    std::error_code ec;
    fs::remove(staged_, ec);
  }

 private:
  LocalObjectStore& store_;
  ObjectPath path_;
  fs::path staged_;
  std::ofstream out_;
  bool done_ = false;
};

LocalObjectStore::LocalObjectStore(fs::path root) : root_(std::move(root)) {}

fs::path LocalObjectStore::object_file(const ObjectPath& path) const {
  if (path.bucket == kStagingDir) throw Error(Errc::kInvalidArgument, "bucket name is reserved");
  return root_ / path.bucket / fs::path(path.key);
}

fs::path LocalObjectStore::staging_file() {
  static std::atomic<std::uint64_t> counter{0};
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const fs::path dir = root_ / kStagingDir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) rethrow_fs("cannot create staging area under " + root_.string(), ec);
  return dir / ("obj-" + std::to_string(rng()) + "-" + std::to_string(counter.fetch_add(1)));
}

void LocalObjectStore::commit(const fs::path& staged, const ObjectPath& path) {
  const fs::path target = object_file(path);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) rethrow_fs("cannot create directory for " + path.to_string(), ec);
  fs::rename(staged, target, ec);
  if (ec) {
    fs::remove(staged, ec);
    rethrow_fs("cannot commit " + path.to_string(), ec);
  }
}

void LocalObjectStore::put_object(const ObjectPath& path, std::string_view payload) {
  const fs::path staged = staging_file();
  try {
    write_file(staged, payload);
  } catch (...) {
    std::error_code ec;
    fs::remove(staged, ec);
    throw;
  }
  commit(staged, path);
}

std::string LocalObjectStore::get_object_range(const ObjectPath& path, ByteRange range) {
  check_range(range);
  const fs::path file = object_file(path);
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    std::error_code ec;
    if (!fs::exists(file, ec) || fs::is_directory(file, ec)) {
      throw Error(Errc::kNoSuchObject, path.to_string());
    }
    rethrow_fs("cannot open " + path.to_string(), std::error_code(errno, std::generic_category()));
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (range.start >= size) {
    throw Error(Errc::kInvalidRange, "range start " + std::to_string(range.start) + " >= size " +
                                         std::to_string(size) + " of " + path.to_string());
  }
  const std::uint64_t end = std::min(range.end, size);
  std::string out(end - range.start, '\0');
  in.seekg(static_cast<std::streamoff>(range.start));
  in.read(out.data(), static_cast<std::streamsize>(out.size()));
  if (!in) throw Error(Errc::kStoreUnavailable, "short read from " + path.to_string());
  return out;
}

std::uint64_t LocalObjectStore::object_size(const ObjectPath& path) {
  std::error_code ec;
  const fs::path file = object_file(path);
  const auto status = fs::status(file, ec);
  if (ec || !fs::is_regular_file(status)) {
    if (ec && ec != std::errc::no_such_file_or_directory && ec != std::errc::not_a_directory) {
      rethrow_fs("cannot stat " + path.to_string(), ec);
    }
    throw Error(Errc::kNoSuchObject, path.to_string());
  }
  const auto size = fs::file_size(file, ec);
  if (ec) rethrow_fs("cannot stat " + path.to_string(), ec);
  return size;
}

std::vector<ObjectInfo> LocalObjectStore::list_objects(const ObjectPath& prefix) {
  if (prefix.bucket == kStagingDir) throw Error(Errc::kInvalidArgument, "bucket name is reserved");
  std::error_code ec;
  if (!fs::exists(root_, ec)) {
    if (ec) rethrow_fs("cannot reach " + root_.string(), ec);
    fs::create_directories(root_, ec);
    if (ec) rethrow_fs("cannot create store root " + root_.string(), ec);
  } else if (!fs::is_directory(root_, ec)) {
    throw Error(Errc::kStoreUnavailable, "store root " + root_.string() + " is not a directory");
  }
  const fs::path bucket_dir = root_ / prefix.bucket;
  // Only descend into the directory named by the prefix's complete segments.
  const auto slash = prefix.key.rfind('/');
  const fs::path start = slash == std::string::npos ? bucket_dir : bucket_dir / prefix.key.substr(0, slash);

  std::vector<ObjectInfo> out;
  if (!fs::is_directory(start, ec)) return out;
  for (fs::recursive_directory_iterator it(start, ec), end; !ec && it != end; it.increment(ec)) {
    if (!it->is_regular_file(ec)) continue;
    std::string key = fs::relative(it->path(), bucket_dir, ec).generic_string();
    if (ec) break;
    if (key.compare(0, prefix.key.size(), prefix.key) != 0) continue;
    ObjectInfo info;
    info.path = ObjectPath(prefix.bucket, std::move(key));
    info.size = it->file_size(ec);
    if (ec) {
      // Deleted between listing and stat.
      ec.clear();
      continue;
    }
    out.push_back(std::move(info));
  }
  if (ec) rethrow_fs("cannot list " + prefix.to_string(), ec);
  std::sort(out.begin(), out.end(), [](const ObjectInfo& a, const ObjectInfo& b) { return a.path.key < b.path.key; });
  return out;
}

void LocalObjectStore::delete_object(const ObjectPath& path) {
  std::error_code ec;
  fs::remove(object_file(path), ec);
  if (ec && ec != std::errc::no_such_file_or_directory) rethrow_fs("cannot delete " + path.to_string(), ec);
}

std::unique_ptr<MultipartUpload> LocalObjectStore::start_multipart(const ObjectPath& path) {
  object_file(path);
  return std::make_unique<LocalMultipartUpload>(*this, path);
}

}  // namespace mrflow::storage
