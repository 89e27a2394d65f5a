#pragma once

#include <memory>
#include <vector>

#include "mrflow/eventbus/spawner.hpp"
#include "mrflow/runtime/worker_context.hpp"

namespace mrflow {

// Registers the "splitter", "mapper", "reducer" and "finalizer" kinds.
void register_standard_workers(WorkerRuntime& runtime, const WorkerContext& ctx);

// One spawner per standard topic, each creating a fresh worker per event.
class WorkerPool {
 public:
  WorkerPool(EventBus& bus, const WorkerContext& ctx, SpawnerOptions options);
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;
  ~WorkerPool();

  void stop();

  std::size_t live_instances() const;
  std::size_t instances_created() const;
  std::size_t peak_instances() const;

 private:
  WorkerRuntime runtime_;
  std::vector<std::unique_ptr<Spawner>> spawners_;
};

}  // namespace mrflow
