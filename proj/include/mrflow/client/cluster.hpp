#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mrflow/client/client.hpp"
#include "mrflow/coordinator/coordinator.hpp"
#include "mrflow/coordinator/http_service.hpp"
#include "mrflow/eventbus/event_bus.hpp"
#include "mrflow/runtime/worker_pool.hpp"

namespace mrflow {

struct ClusterOptions {
  std::shared_ptr<storage::ObjectStore> store;
  std::string bucket = "mrflow";
  std::shared_ptr<metastore::KvStore> kv;
  SpawnerOptions spawner;
  const FunctionCatalog* catalog = &FunctionCatalog::global();

  // Serve the coordinator over HTTP (workers post notices to it) instead of
  // calling it in-process.
  bool http = false;
  std::string host = "127.0.0.1";
  int port = 0;
  RetryPolicy notice_retry;

  // Fault injection.
  double event_duplicate_rate = 0.0;
  double notice_duplicate_rate = 0.0;
  std::uint64_t seed = 1;
};

// A whole deployment in one process: event bus, worker pool, coordinator and
// (optionally) its HTTP service over caller-supplied storage and metastore.
class Cluster {
 public:
  explicit Cluster(ClusterOptions options);
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;
  ~Cluster();

  std::string submit(const JobConfig& config);
  SubmitFn submitter();

  // Tears the coordinator down and brings up a fresh instance (same port in
  // HTTP mode). While it is down, in-process notices fail with
  // CoordinatorUnreachable and HTTP notices hit connection errors.
  void stop_coordinator();
  void start_coordinator();
  void restart_coordinator();
  int coordinator_port() const;

  // Every phase advance seen by any coordinator incarnation.
  std::vector<PhaseAdvance> phase_log() const;

  storage::ObjectStore& store() { return *options_.store; }
  Metastore& metastore() { return metastore_; }
  InProcessEventBus& bus() { return bus_; }
  WorkerPool& workers() { return *workers_; }
  const std::string& bucket() const { return options_.bucket; }
  const FunctionCatalog& catalog() const { return *options_.catalog; }
  std::size_t notice_duplicates() const;

  void shutdown();

 private:
  void deliver(const CompletionNotice& notice);

  ClusterOptions options_;
  Metastore metastore_;
  InProcessEventBus bus_;

  mutable std::mutex mutex_;
  std::shared_ptr<Coordinator> coordinator_;  // shared with in-flight deliveries
  std::unique_ptr<CoordinatorService> service_;
  int port_ = 0;
  std::vector<PhaseAdvance> phase_log_;

  std::unique_ptr<CompletionNotifier> base_notifier_;
  std::unique_ptr<DuplicatingNotifier> duplicating_;
  std::unique_ptr<WorkerContext> context_;
  std::unique_ptr<WorkerPool> workers_;
  bool shut_down_ = false;
};

}  // namespace mrflow
