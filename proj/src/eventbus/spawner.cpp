#include "mrflow/eventbus/spawner.hpp"

#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"

namespace mrflow {

Spawner::Spawner(EventBus& bus, std::string topic, WorkerFactory factory, SpawnerOptions options,
                 SpawnFailureHandler on_failure)
    : bus_(bus),
      topic_(std::move(topic)),
      factory_(std::move(factory)),
      options_(options),
      on_failure_(std::move(on_failure)) {}

Spawner::~Spawner() { stop(); }

void Spawner::start() {
  if (running_.exchange(true)) return;
  dispatcher_ = std::thread([this] { dispatch_loop(); });
}

void Spawner::stop() {
  if (running_.exchange(false)) {
    capacity_cv_.notify_all();
    if (dispatcher_.joinable()) dispatcher_.join();
  }
  std::map<std::uint64_t, std::thread> instances;
  {
    std::lock_guard lock(mutex_);
    instances.swap(instances_);
    finished_.clear();
  }
  for (auto& [_, t] : instances) t.join();
}

void Spawner::reap_finished() {
  std::vector<std::thread> done;
  {
    std::lock_guard lock(mutex_);
    for (const auto id : finished_) {
      const auto it = instances_.find(id);
      if (it == instances_.end()) continue;
      done.push_back(std::move(it->second));
      instances_.erase(it);
    }
    finished_.clear();
  }
  for (auto& t : done) t.join();
}

void Spawner::dispatch_loop() {
  while (running_) {
    reap_finished();
    if (options_.max_concurrency > 0) {
      std::unique_lock lock(mutex_);
      capacity_cv_.wait_for(lock, std::chrono::milliseconds(50),
                            [&] { return !running_ || live_.load() < options_.max_concurrency; });
      if (!running_) break;
      if (live_.load() >= options_.max_concurrency) continue;
    }
    std::optional<TriggerEvent> event;
    try {
      event = bus_.receive(topic_, std::chrono::milliseconds(50));
    } catch (const Error& e) {
      spdlog::error("spawner on {} cannot receive: {}", topic_, e.what());
      break;
    }
    if (!event) continue;

    const std::size_t live = ++live_;
    std::size_t peak = peak_.load();
    while (live > peak && !peak_.compare_exchange_weak(peak, live)) {
    }
    std::lock_guard lock(mutex_);
    const std::uint64_t id = next_id_++;
    try {
      instances_.emplace(id, std::thread([this, id, ev = std::move(*event)]() mutable { run_instance(id, std::move(ev)); }));
    } catch (const std::system_error& e) {
      --live_;
      ++failed_;
      spdlog::error("cannot start worker thread for {}: {}", topic_, e.what());
    }
  }
}

void Spawner::run_instance(std::uint64_t id, TriggerEvent event) {
  if (options_.cold_start_delay.count() > 0) std::this_thread::sleep_for(options_.cold_start_delay);
  std::unique_ptr<Worker> worker;
  try {
    worker = factory_();
    if (!worker) throw Error(Errc::kSpawnFailure, "factory returned no worker");
    ++created_;
  } catch (const std::exception& e) {
    spdlog::error("spawn failure on {} for job {}: {}", topic_, event.job_id, e.what());
    if (on_failure_) {
      try {
        on_failure_(event, std::string("SpawnFailure: ") + e.what());
      } catch (const std::exception& report) {
        spdlog::error("could not report spawn failure: {}", report.what());
      }
    }
    ++failed_;
  }
  if (worker) {
    try {
      worker->run(event);
    } catch (const std::exception& e) {
      // Equivalent of a worker process exiting nonzero.
      ++failed_;
      spdlog::error("worker for {} {}[{}] exited abnormally: {}", event.job_id, to_string(event.event_type),
                    event.worker_index, e.what());
    }
    worker.reset();
  }
  --live_;
  {
    std::lock_guard lock(mutex_);
    finished_.push_back(id);
  }
  capacity_cv_.notify_all();
}

void WorkerRuntime::register_kind(const std::string& kind, WorkerFactory factory) {
  std::lock_guard lock(mutex_);
  kinds_[kind] = std::move(factory);
}

bool WorkerRuntime::has_kind(const std::string& kind) const {
  std::lock_guard lock(mutex_);
  return kinds_.contains(kind);
}

std::unique_ptr<Spawner> WorkerRuntime::spawn_on_trigger(EventBus& bus, const std::string& topic,
                                                         const std::string& kind, SpawnerOptions options,
                                                         SpawnFailureHandler on_failure) const {
  WorkerFactory factory;
  {
    std::lock_guard lock(mutex_);
    const auto it = kinds_.find(kind);
    if (it == kinds_.end()) throw Error(Errc::kInvalidArgument, "worker kind '" + kind + "' is not registered");
    factory = it->second;
  }
  if (!bus.has_topic(topic)) throw Error(Errc::kUnknownTopic, topic);
  auto spawner = std::make_unique<Spawner>(bus, topic, std::move(factory), options, std::move(on_failure));
  spawner->start();
  return spawner;
}

}  // namespace mrflow
