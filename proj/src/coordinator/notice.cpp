#include "mrflow/coordinator/notice.hpp"

#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"

namespace mrflow {

CompletionNotice CompletionNotice::ok(std::string job_id, JobPhase phase, std::uint32_t worker_id) {
  return CompletionNotice{std::move(job_id), phase, worker_id, NoticeStatus::kOk, std::nullopt};
}

CompletionNotice CompletionNotice::failed(std::string job_id, JobPhase phase, std::uint32_t worker_id,
                                          std::string detail) {
  return CompletionNotice{std::move(job_id), phase, worker_id, NoticeStatus::kFailed, std::move(detail)};
}

nlohmann::json to_json(const CompletionNotice& n) {
  nlohmann::json doc = {
      {"job_id", n.job_id},
      {"phase", std::string(to_string(n.phase))},
      {"worker_id", n.worker_id},
      {"status", n.status == NoticeStatus::kOk ? "OK" : "FAILED"},
  };
  if (n.error_detail) doc["error_detail"] = *n.error_detail;
  return doc;
}

CompletionNotice completion_notice_from_json(const nlohmann::json& doc) {
  CompletionNotice n;
  try {
    n.job_id = doc.at("job_id").get<std::string>();
    n.phase = phase_from_string(doc.at("phase").get<std::string>());
    n.worker_id = doc.at("worker_id").get<std::uint32_t>();
    const auto status = doc.at("status").get<std::string>();
    if (status == "OK") n.status = NoticeStatus::kOk;
    else if (status == "FAILED") n.status = NoticeStatus::kFailed;
    else throw Error(Errc::kInvalidArgument, "notice status must be OK or FAILED");
    if (doc.contains("error_detail") && !doc["error_detail"].is_null()) {
      n.error_detail = doc["error_detail"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("bad completion notice: ") + e.what());
  }
  if (n.status == NoticeStatus::kFailed && !n.error_detail) {
    throw Error(Errc::kInvalidArgument, "FAILED notice needs error_detail");
  }
  return n;
}

void HttpNotifier::notify(const std::string& callback, const CompletionNotice& notice) {
  // Split "http://host:port/path" into client base and request path.
  const auto scheme = callback.find("://");
  const auto path_start = callback.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (scheme == std::string::npos || path_start == std::string::npos) {
    throw Error(Errc::kInvalidArgument, "bad coordinator callback URL: " + callback);
  }
  const std::string base = callback.substr(0, path_start);
  const std::string path = callback.substr(path_start);
  const std::string body = to_json(notice).dump();

  auto backoff = policy_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= policy_.attempts; ++attempt) {
    httplib::Client cli(base);
    cli.set_connection_timeout(std::chrono::seconds(5));
    cli.set_read_timeout(std::chrono::seconds(30));
    const auto res = cli.Post(path, body, "application/json");
    if (res) {
      if (res->status >= 200 && res->status < 300) return;
      if (res->status == 404) throw Error(Errc::kNoSuchJob, notice.job_id + " (coordinator: " + res->body + ")");
      if (res->status < 500) {
        throw Error(Errc::kInvalidArgument, "coordinator rejected notice: HTTP " + std::to_string(res->status) +
                                                " " + res->body);
      }
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < policy_.attempts) {
      spdlog::warn("notice for {} attempt {} failed ({}); retrying in {}ms", notice.job_id, attempt, last_error,
                   backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(Errc::kCoordinatorUnreachable, "could not deliver notice to " + callback + " after " +
                                                 std::to_string(policy_.attempts) + " attempts: " + last_error);
}

void DuplicatingNotifier::notify(const std::string& callback, const CompletionNotice& notice) {
  bool twice = false;
  {
    std::lock_guard lock(mutex_);
    twice = std::bernoulli_distribution(rate_)(rng_);
    if (twice) ++duplicates_;
  }
  inner_.notify(callback, notice);
  if (twice) inner_.notify(callback, notice);
}

std::size_t DuplicatingNotifier::duplicates_sent() const {
  std::lock_guard lock(mutex_);
  return duplicates_;
}

}  // namespace mrflow
