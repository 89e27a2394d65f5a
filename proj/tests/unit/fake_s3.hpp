#pragma once

#include <httplib.h>

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "mrflow/core/error.hpp"
#include "mrflow/storage/memory_store.hpp"
#include "mrflow/storage/s3_store.hpp"

namespace mrflow::test {

// Minimal S3 look-alike over a MemoryObjectStore. Verifies every request's
// SigV4 signature and pages listings two keys at a time.
class FakeS3 {
 public:
  explicit FakeS3(storage::sigv4::Credentials creds) : creds_(std::move(creds)) {
    server_.Get(R"(/([^/]+))", [this](const auto& req, auto& res) { guarded(req, res, &FakeS3::list); });
    server_.Get(R"(/([^/]+)/(.+))", [this](const auto& req, auto& res) { guarded(req, res, &FakeS3::get); });
    server_.Put(R"(/([^/]+)/(.+))", [this](const auto& req, auto& res) { guarded(req, res, &FakeS3::put); });
    server_.Post(R"(/([^/]+)/(.+))", [this](const auto& req, auto& res) { guarded(req, res, &FakeS3::post); });
    server_.Delete(R"(/([^/]+)/(.+))", [this](const auto& req, auto& res) { guarded(req, res, &FakeS3::del); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeS3() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  storage::MemoryObjectStore& backing() { return backing_; }
  int list_pages() const { return list_pages_; }
  std::size_t open_uploads() {
    std::lock_guard lock(mu_);
    return uploads_.size();
  }

 private:
  using Handler = void (FakeS3::*)(const httplib::Request&, httplib::Response&);

  void guarded(const httplib::Request& req, httplib::Response& res, Handler h) {
    if (!signature_ok(req)) {
      error(res, 403, "SignatureDoesNotMatch");
      return;
    }
    (this->*h)(req, res);
  }

  bool signature_ok(const httplib::Request& req) {
    const auto auth = req.get_header_value("Authorization");
    const auto sh = auth.find("SignedHeaders=");
    if (sh == std::string::npos) return false;
    const auto end = auth.find(',', sh);
    const std::string names = auth.substr(sh + 14, end - sh - 14);
    storage::sigv4::Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace_back(k, v);
    std::size_t pos = 0;
    while (pos <= names.size()) {
      auto semi = names.find(';', pos);
      if (semi == std::string::npos) semi = names.size();
      const auto name = names.substr(pos, semi - pos);
      r.headers[name] = req.get_header_value(name.c_str());
      pos = semi + 1;
    }
    r.payload_sha256 = req.get_header_value("x-amz-content-sha256");
    if (r.payload_sha256 != storage::sigv4::sha256_hex(req.body)) return false;
    return storage::sigv4::authorization(r, creds_, req.get_header_value("x-amz-date")) == auth;
  }

  static void error(httplib::Response& res, int status, const std::string& code) {
    res.status = status;
    res.set_content("<Error><Code>" + code + "</Code></Error>", "application/xml");
  }

  static storage::ObjectPath path_of(const httplib::Request& req) { return storage::ObjectPath(req.matches[1], req.matches[2]); }

  void list(const httplib::Request& req, httplib::Response& res) {
    ++list_pages_;
    const auto all = backing_.list_objects(storage::ObjectPath::prefix(req.matches[1], req.get_param_value("prefix")));
    const auto token = req.get_param_value("continuation-token");
    std::string body = "<ListBucketResult>";
    std::size_t shown = 0;
    std::string last;
    bool truncated = false;
    for (const auto& info : all) {
      if (!token.empty() && info.path.key <= token) continue;
      if (shown == 2) {
        truncated = true;
        break;
      }
      body += "<Contents><Key>" + storage::xml::escape(info.path.key) + "</Key><Size>" + std::to_string(info.size) +
              "</Size></Contents>";
      last = info.path.key;
      ++shown;
    }
    body += std::string("<IsTruncated>") + (truncated ? "true" : "false") + "</IsTruncated>";
    if (truncated) body += "<NextContinuationToken>" + storage::xml::escape(last) + "</NextContinuationToken>";
    body += "</ListBucketResult>";
    res.set_content(body, "application/xml");
  }

  void get(const httplib::Request& req, httplib::Response& res) {
    try {
      const auto path = path_of(req);
      const auto size = backing_.object_size(path);
      if (req.method == "HEAD") {
        res.set_content(std::string(size, 'x'), "application/octet-stream");
        return;
      }
      const auto range = req.get_header_value("range");
      if (range.empty()) {
        res.set_content(storage::get_object(backing_, path), "application/octet-stream");
        return;
      }
      // S3 clamps an overlong range end where httplib would answer 416, so
      // slice here and keep httplib out of it.
      const_cast<httplib::Request&>(req).ranges.clear();
      const auto dash = range.find('-');
      const auto start = std::stoull(range.substr(6, dash - 6));
      const auto last = std::stoull(range.substr(dash + 1));
      if (start >= size) return error(res, 416, "InvalidRange");
      res.status = 206;
      res.set_content(backing_.get_object_range(path, {start, last + 1}), "application/octet-stream");
    } catch (const Error&) {
      error(res, 404, "NoSuchKey");
    }
  }

  void put(const httplib::Request& req, httplib::Response& res) {
    if (req.has_param("uploadId")) {
      std::lock_guard lock(mu_);
      auto it = uploads_.find(req.get_param_value("uploadId"));
      if (it == uploads_.end()) return error(res, 404, "NoSuchUpload");
      const int n = std::stoi(req.get_param_value("partNumber"));
      it->second[n] = req.body;
      res.set_header("ETag", "\"etag-" + std::to_string(n) + "\"");
      return;
    }
    backing_.put_object(path_of(req), req.body);
  }

  void post(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu_);
    if (req.has_param("uploads")) {
      const auto id = "up&" + std::to_string(++next_upload_);
      uploads_[id];
      res.set_content("<InitiateMultipartUploadResult><UploadId>" + storage::xml::escape(id) +
                          "</UploadId></InitiateMultipartUploadResult>",
                      "application/xml");
      return;
    }
    auto it = uploads_.find(req.get_param_value("uploadId"));
    if (it == uploads_.end()) return error(res, 404, "NoSuchUpload");
    std::string payload;
    for (const auto& num : storage::xml::all_elements(req.body, "PartNumber")) payload += it->second.at(std::stoi(num));
    backing_.put_object(path_of(req), payload);
    uploads_.erase(it);
    res.set_content("<CompleteMultipartUploadResult/>", "application/xml");
  }

  void del(const httplib::Request& req, httplib::Response& res) {
    if (req.has_param("uploadId")) {
      std::lock_guard lock(mu_);
      uploads_.erase(req.get_param_value("uploadId"));
    } else {
      backing_.delete_object(path_of(req));
    }
    res.status = 204;
  }

  storage::sigv4::Credentials creds_;
  storage::MemoryObjectStore backing_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::map<std::string, std::map<int, std::string>> uploads_;
  int next_upload_ = 0;
  std::atomic<int> list_pages_{0};
};

}  // namespace mrflow::test
