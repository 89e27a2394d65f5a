#include "mrflow/runtime/worker_pool.hpp"

#include <spdlog/spdlog.h>

#include "mrflow/finalizer/finalizer.hpp"
#include "mrflow/mapper/mapper.hpp"
#include "mrflow/reducer/reducer.hpp"
#include "mrflow/splitter/splitter.hpp"

namespace mrflow {
namespace {

using TaskEntry = bool (*)(const WorkerContext&, const TriggerEvent&);

class TaskWorker final : public Worker {
 public:
  TaskWorker(const WorkerContext& ctx, TaskEntry entry) : ctx_(ctx), entry_(entry) {}
  void run(const TriggerEvent& event) override { entry_(ctx_, event); }

 private:
  const WorkerContext& ctx_;
  TaskEntry entry_;
};

WorkerFactory factory_for(const WorkerContext& ctx, TaskEntry entry) {
  return [&ctx, entry] { return std::make_unique<TaskWorker>(ctx, entry); };
}

}  // namespace

void register_standard_workers(WorkerRuntime& runtime, const WorkerContext& ctx) {
  runtime.register_kind("splitter", factory_for(ctx, &run_split));
  runtime.register_kind("mapper", factory_for(ctx, &run_map));
  runtime.register_kind("reducer", factory_for(ctx, &run_reduce));
  runtime.register_kind("finalizer", factory_for(ctx, &run_finalize));
}

WorkerPool::WorkerPool(EventBus& bus, const WorkerContext& ctx, SpawnerOptions options) {
  register_standard_workers(runtime_, ctx);
  declare_standard_topics(bus);
  const std::pair<EventType, const char*> bindings[] = {
      {EventType::kSplit, "splitter"},
      {EventType::kMap, "mapper"},
      {EventType::kReduce, "reducer"},
      {EventType::kFinalize, "finalizer"},
  };
  for (const auto& [type, kind] : bindings) {
    // A worker that cannot start is reported like any other task failure.
    auto on_failure = [&ctx](const TriggerEvent& event, const std::string& reason) {
      try {
        ctx.notifier.notify(event.coordinator_callback,
                            CompletionNotice::failed(event.job_id, phase_for(event.event_type), event.worker_index,
                                                     "spawn failure: " + reason));
      } catch (const std::exception& e) {
        spdlog::error("{}: could not report spawn failure: {}", event.event_id, e.what());
      }
    };
    spawners_.push_back(runtime_.spawn_on_trigger(bus, std::string(topic_for(type)), kind, options, on_failure));
  }
}

WorkerPool::~WorkerPool() { stop(); }

void WorkerPool::stop() {
  for (auto& s : spawners_) s->stop();
}

std::size_t WorkerPool::live_instances() const {
  std::size_t n = 0;
  for (const auto& s : spawners_) n += s->live_instances();
  return n;
}

std::size_t WorkerPool::instances_created() const {
  std::size_t n = 0;
  for (const auto& s : spawners_) n += s->instances_created();
  return n;
}

std::size_t WorkerPool::peak_instances() const {
  std::size_t n = 0;
  for (const auto& s : spawners_) n += s->peak_instances();
  return n;
}

}  // namespace mrflow
