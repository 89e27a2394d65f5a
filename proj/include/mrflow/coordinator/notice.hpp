#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include <json.hpp>

#include "mrflow/metastore/metastore.hpp"

namespace mrflow {

enum class NoticeStatus { kOk, kFailed };

// Worker -> coordinator report that one task of one phase finished.
struct CompletionNotice {
  std::string job_id;
  JobPhase phase = JobPhase::kSplitting;
  std::uint32_t worker_id = 0;
  NoticeStatus status = NoticeStatus::kOk;
  std::optional<std::string> error_detail;  // present iff FAILED

  static CompletionNotice ok(std::string job_id, JobPhase phase, std::uint32_t worker_id);
  static CompletionNotice failed(std::string job_id, JobPhase phase, std::uint32_t worker_id, std::string detail);

  friend bool operator==(const CompletionNotice&, const CompletionNotice&) = default;
};

nlohmann::json to_json(const CompletionNotice& notice);
// Throws InvalidArgument on a malformed document or FAILED without detail.
CompletionNotice completion_notice_from_json(const nlohmann::json& doc);

// Delivers notices to the coordinator named by an event's callback.
class CompletionNotifier {
 public:
  virtual ~CompletionNotifier() = default;
  virtual void notify(const std::string& callback, const CompletionNotice& notice) = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
};

// POSTs the notice as JSON to the callback URL. Connection errors and 5xx
// replies are retried with exponential backoff; after the last attempt the
// call throws CoordinatorUnreachable. A 404 throws NoSuchJob immediately.
class HttpNotifier final : public CompletionNotifier {
 public:
  explicit HttpNotifier(RetryPolicy policy = {}) : policy_(policy) {}
  void notify(const std::string& callback, const CompletionNotice& notice) override;

 private:
  RetryPolicy policy_;
};

// In-process delivery; the callback URL is ignored.
class CallbackNotifier final : public CompletionNotifier {
 public:
  explicit CallbackNotifier(std::function<void(const CompletionNotice&)> fn) : fn_(std::move(fn)) {}
  void notify(const std::string&, const CompletionNotice& notice) override { fn_(notice); }

 private:
  std::function<void(const CompletionNotice&)> fn_;
};

// Fault injection: forwards every notice and, with probability `rate`, sends
// it a second time.
class DuplicatingNotifier final : public CompletionNotifier {
 public:
  DuplicatingNotifier(CompletionNotifier& inner, double rate, std::uint64_t seed)
      : inner_(inner), rate_(rate), rng_(seed) {}
  void notify(const std::string& callback, const CompletionNotice& notice) override;
  std::size_t duplicates_sent() const;

 private:
  CompletionNotifier& inner_;
  double rate_;
  mutable std::mutex mutex_;
  std::mt19937_64 rng_;
  std::size_t duplicates_ = 0;
};

}  // namespace mrflow
