#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mrflow/eventbus/event_bus.hpp"

namespace mrflow {

// One ephemeral worker instance. Created for a single event, run once, then
// destroyed.
class Worker {
 public:
  virtual ~Worker() = default;
  virtual void run(const TriggerEvent& event) = 0;
};

using WorkerFactory = std::function<std::unique_ptr<Worker>()>;
// Invoked when an instance cannot be created (SpawnFailure).
using SpawnFailureHandler = std::function<void(const TriggerEvent& event, const std::string& reason)>;

struct SpawnerOptions {
  std::chrono::milliseconds cold_start_delay{0};
  std::size_t max_concurrency = 0;  // 0 = unbounded
};

// Consumes one topic and starts a fresh worker instance per delivered event
// (scale-from-zero emulation). With no pending events no instance is alive.
class Spawner {
 public:
  Spawner(EventBus& bus, std::string topic, WorkerFactory factory, SpawnerOptions options,
          SpawnFailureHandler on_failure = {});
  Spawner(const Spawner&) = delete;
  Spawner& operator=(const Spawner&) = delete;
  ~Spawner();

  void start();
  // Stops taking events and waits for running instances. Undelivered events
  // stay queued on the bus.
  void stop();

  std::size_t live_instances() const { return live_.load(); }
  std::size_t peak_instances() const { return peak_.load(); }
  std::size_t instances_created() const { return created_.load(); }
  std::size_t instances_failed() const { return failed_.load(); }
  const std::string& topic() const { return topic_; }

 private:
  void dispatch_loop();
  void run_instance(std::uint64_t id, TriggerEvent event);
  void reap_finished();

  EventBus& bus_;
  std::string topic_;
  WorkerFactory factory_;
  SpawnerOptions options_;
  SpawnFailureHandler on_failure_;

  std::atomic<bool> running_{false};
  std::thread dispatcher_;
  std::mutex mutex_;
  std::condition_variable capacity_cv_;
  std::map<std::uint64_t, std::thread> instances_;
  std::vector<std::uint64_t> finished_;
  std::uint64_t next_id_ = 0;
  std::atomic<std::size_t> live_{0};
  std::atomic<std::size_t> peak_{0};
  std::atomic<std::size_t> created_{0};
  std::atomic<std::size_t> failed_{0};
};

// Registry of worker kinds ("splitter", "mapper", ...) that can be bound to
// topics.
class WorkerRuntime {
 public:
  void register_kind(const std::string& kind, WorkerFactory factory);
  bool has_kind(const std::string& kind) const;

  // Subscribes a new spawner for `kind` to `topic` and starts it. Throws
  // InvalidArgument for unregistered kinds and UnknownTopic for undeclared
  // topics.
  std::unique_ptr<Spawner> spawn_on_trigger(EventBus& bus, const std::string& topic, const std::string& kind,
                                            SpawnerOptions options, SpawnFailureHandler on_failure = {}) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, WorkerFactory> kinds_;
};

}  // namespace mrflow
