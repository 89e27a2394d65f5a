#include "mrflow/storage/s3_store.hpp"

#include <algorithm>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"

namespace mrflow::storage {

namespace xml {

std::vector<std::string_view> blocks(std::string_view doc, std::string_view tag) {
  std::vector<std::string_view> out;
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  std::size_t pos = 0;
  while (true) {
    const auto b = doc.find(open, pos);
    if (b == std::string_view::npos) break;
    const auto e = doc.find(close, b + open.size());
    if (e == std::string_view::npos) break;
    out.push_back(doc.substr(b + open.size(), e - b - open.size()));
    pos = e + close.size();
  }
  return out;
}

std::string unescape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    const auto semi = text.find(';', i);
    if (semi == std::string_view::npos) {
      out.push_back('&');
      continue;
    }
    const auto entity = text.substr(i + 1, semi - i - 1);
    if (entity == "amp") out.push_back('&');
    else if (entity == "lt") out.push_back('<');
    else if (entity == "gt") out.push_back('>');
    else if (entity == "quot") out.push_back('"');
    else if (entity == "apos") out.push_back('\'');
    else if (!entity.empty() && entity[0] == '#') {
      const bool hex = entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X');
      const unsigned long cp = std::stoul(std::string(entity.substr(hex ? 2 : 1)), nullptr, hex ? 16 : 10);
      if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
      } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      }
    } else {
      out.append(text.substr(i, semi - i + 1));
    }
    i = semi;
  }
  return out;
}

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> all_elements(std::string_view doc, std::string_view tag) {
  std::vector<std::string> out;
  for (const auto b : blocks(doc, tag)) out.push_back(unescape(b));
  return out;
}

}  // namespace xml

namespace {

std::string object_target(const ObjectPath& path) { return "/" + path.bucket + "/" + path.key; }

[[noreturn]] void throw_status(const S3ObjectStore::Response& r, const std::string& what) {
  const auto codes = xml::all_elements(r.body, "Code");
  const std::string detail = what + ": HTTP " + std::to_string(r.status) + (codes.empty() ? "" : " " + codes[0]);
  switch (r.status) {
    case 403: throw Error(Errc::kAccessDenied, detail);
    case 404: throw Error(Errc::kNoSuchObject, detail);
    case 416: throw Error(Errc::kInvalidRange, detail);
    default: throw Error(Errc::kStoreUnavailable, detail);
  }
}

bool ok(int status) { return status >= 200 && status < 300; }

class S3MultipartUpload final : public MultipartUpload {
 public:
  S3MultipartUpload(S3ObjectStore& store, ObjectPath path, std::string upload_id)
      : store_(store), path_(std::move(path)), upload_id_(std::move(upload_id)) {}

  ~S3MultipartUpload() override { abort(); }

  void upload_part(int part_number, std::string_view bytes) override {
    const auto r = store_.send("PUT", object_target(path_),
                               {{"partNumber", std::to_string(part_number)}, {"uploadId", upload_id_}}, bytes);
    if (!ok(r.status)) throw_status(r, "upload part " + std::to_string(part_number) + " of " + path_.to_string());
    etags_.emplace_back(part_number, r.etag);
  }

  void complete() override {
    std::string body = "<CompleteMultipartUpload>";
    for (const auto& [n, etag] : etags_) {
      body += "<Part><PartNumber>" + std::to_string(n) + "</PartNumber><ETag>" + xml::escape(etag) + "</ETag></Part>";
    }
    body += "</CompleteMultipartUpload>";
    const auto r = store_.send("POST", object_target(path_), {{"uploadId", upload_id_}}, body);
    // S3 may report a failed completion inside a 200 response.
    if (!ok(r.status) || r.body.find("<Error>") != std::string::npos) {
      throw_status(r, "complete multipart upload of " + path_.to_string());
    }
    done_ = true;
  }

  void abort() noexcept override {
    if (done_) return;
    done_ = true;
    try {
      store_.send("DELETE", object_target(path_), {{"uploadId", upload_id_}}, {});
    } catch (const std::exception& e) {
      spdlog::warn("abort of multipart upload {} failed: {}", path_.to_string(), e.what());
    }
  }

 private:
  S3ObjectStore& store_;
  ObjectPath path_;
  std::string upload_id_;
  std::vector<std::pair<int, std::string>> etags_;
  bool done_ = false;
};

}  // namespace

S3ObjectStore::S3ObjectStore(S3Settings settings) : settings_(std::move(settings)) {
  std::string_view ep = settings_.endpoint;
  if (ep.starts_with("http://")) ep.remove_prefix(7);
  else if (ep.starts_with("https://")) throw Error(Errc::kInvalidArgument, "https endpoints are not supported");
  while (!ep.empty() && ep.back() == '/') ep.remove_suffix(1);
  host_header_ = std::string(ep);
}

S3ObjectStore::Response S3ObjectStore::send(const std::string& method, const std::string& path,
                                            const std::vector<std::pair<std::string, std::string>>& query,
                                            std::string_view body,
                                            const std::vector<std::pair<std::string, std::string>>& extra_headers) {
  sigv4::Request req;
  req.method = method;
  req.path = path;
  req.query = query;
  req.payload_sha256 = sigv4::sha256_hex(body);
  const std::string amz_date = sigv4::amz_timestamp(std::chrono::system_clock::now());
  req.headers["host"] = host_header_;
  req.headers["x-amz-date"] = amz_date;
  req.headers["x-amz-content-sha256"] = req.payload_sha256;
  for (const auto& [k, v] : extra_headers) req.headers[k] = v;

  httplib::Headers headers;
  headers.emplace("Host", host_header_);
  for (const auto& [k, v] : req.headers) {
    if (k != "host") headers.emplace(k, v);
  }
  headers.emplace("Authorization", sigv4::authorization(req, settings_.credentials, amz_date));

  std::string target = sigv4::uri_encode(path, true);
  const std::string qs = sigv4::canonical_query(req);
  if (!qs.empty()) target += "?" + qs;

  httplib::Client cli("http://" + host_header_);
  cli.set_url_encode(false);
  const auto timeout = std::chrono::milliseconds(settings_.timeout_ms);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);

  httplib::Result res;
  if (method == "GET") res = cli.Get(target, headers);
  else if (method == "HEAD") res = cli.Head(target, headers);
  else if (method == "DELETE") res = cli.Delete(target, headers);
  else if (method == "PUT") res = cli.Put(target, headers, body.data(), body.size(), "application/octet-stream");
  else if (method == "POST") res = cli.Post(target, headers, body.data(), body.size(), "application/xml");
  else throw Error(Errc::kInvalidArgument, "unsupported method " + method);

  if (!res) {
    throw Error(Errc::kStoreUnavailable,
                method + " " + path + " to " + host_header_ + " failed: " + httplib::to_string(res.error()));
  }
  Response out;
  out.status = res->status;
  out.body = std::move(res->body);
  out.etag = res->get_header_value("ETag");
  out.content_length = res->get_header_value("Content-Length");
  return out;
}

void S3ObjectStore::put_object(const ObjectPath& path, std::string_view payload) {
  const auto r = send("PUT", object_target(path), {}, payload);
  if (!ok(r.status)) throw_status(r, "put " + path.to_string());
}

std::string S3ObjectStore::get_object_range(const ObjectPath& path, ByteRange range) {
  check_range(range);
  const std::string header = "bytes=" + std::to_string(range.start) + "-" + std::to_string(range.end - 1);
  auto r = send("GET", object_target(path), {}, {}, {{"range", header}});
  if (!ok(r.status)) throw_status(r, "get " + path.to_string());
  // A server that ignores Range answers 200 with the whole object.
  if (r.status == 200) {
    if (range.start >= r.body.size()) {
      throw Error(Errc::kInvalidRange, "range start beyond size of " + path.to_string());
    }
    return r.body.substr(range.start, std::min<std::uint64_t>(range.end, r.body.size()) - range.start);
  }
  return std::move(r.body);
}

std::uint64_t S3ObjectStore::object_size(const ObjectPath& path) {
  const auto r = send("HEAD", object_target(path), {}, {});
  if (!ok(r.status)) throw_status(r, "head " + path.to_string());
  return std::stoull(r.content_length.empty() ? "0" : r.content_length);
}

void S3ObjectStore::delete_object(const ObjectPath& path) {
  const auto r = send("DELETE", object_target(path), {}, {});
  if (!ok(r.status) && r.status != 404) throw_status(r, "delete " + path.to_string());
}

std::vector<ObjectInfo> S3ObjectStore::list_objects(const ObjectPath& prefix) {
  std::vector<ObjectInfo> out;
  std::string token;
  while (true) {
    std::vector<std::pair<std::string, std::string>> query = {{"list-type", "2"}, {"prefix", prefix.key}};
    if (!token.empty()) query.emplace_back("continuation-token", token);
    const auto r = send("GET", "/" + prefix.bucket, query, {});
    if (r.status == 404) return out;  // missing bucket lists as empty
    if (!ok(r.status)) throw_status(r, "list " + prefix.to_string());
    for (const auto block : xml::blocks(r.body, "Contents")) {
      const auto keys = xml::all_elements(block, "Key");
      const auto sizes = xml::all_elements(block, "Size");
      if (keys.empty()) continue;
      out.push_back(ObjectInfo{ObjectPath(prefix.bucket, keys[0]), sizes.empty() ? 0 : std::stoull(sizes[0])});
    }
    const auto truncated = xml::all_elements(r.body, "IsTruncated");
    const auto next = xml::all_elements(r.body, "NextContinuationToken");
    if (truncated.empty() || truncated[0] != "true" || next.empty()) break;
    token = next[0];
  }
  std::sort(out.begin(), out.end(), [](const ObjectInfo& a, const ObjectInfo& b) { return a.path.key < b.path.key; });
  return out;
}

std::unique_ptr<MultipartUpload> S3ObjectStore::start_multipart(const ObjectPath& path) {
  const auto r = send("POST", object_target(path), {{"uploads", ""}}, {});
  if (!ok(r.status)) throw_status(r, "initiate multipart upload of " + path.to_string());
  const auto ids = xml::all_elements(r.body, "UploadId");
  if (ids.empty()) throw Error(Errc::kStoreUnavailable, "initiate multipart upload returned no UploadId");
  return std::make_unique<S3MultipartUpload>(*this, path, ids[0]);
}

}  // namespace mrflow::storage
