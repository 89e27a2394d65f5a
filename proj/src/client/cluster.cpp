#include "mrflow/client/cluster.hpp"

#include "mrflow/core/error.hpp"
#include "mrflow/metastore/kv_store.hpp"
#include "mrflow/storage/memory_store.hpp"

namespace mrflow {
namespace {

ClusterOptions with_defaults(ClusterOptions options) {
  if (!options.store) options.store = std::make_shared<storage::MemoryObjectStore>();
  if (!options.kv) options.kv = std::make_shared<metastore::MemoryKvStore>();
  if (!options.catalog) options.catalog = &FunctionCatalog::global();
  return options;
}

}  // namespace

Cluster::Cluster(ClusterOptions options) : options_(with_defaults(std::move(options))), metastore_(options_.kv) {
  declare_standard_topics(bus_);
  if (options_.event_duplicate_rate > 0) bus_.set_duplicate_rate(options_.event_duplicate_rate, options_.seed);

  if (options_.http) {
    base_notifier_ = std::make_unique<HttpNotifier>(options_.notice_retry);
    port_ = options_.port;
  } else {
    base_notifier_ = std::make_unique<CallbackNotifier>([this](const CompletionNotice& n) { deliver(n); });
  }
  CompletionNotifier* notifier = base_notifier_.get();
  if (options_.notice_duplicate_rate > 0) {
    duplicating_ = std::make_unique<DuplicatingNotifier>(*base_notifier_, options_.notice_duplicate_rate,
                                                         options_.seed + 1);
    notifier = duplicating_.get();
  }

  start_coordinator();
  context_ = std::unique_ptr<WorkerContext>(
      new WorkerContext{*options_.store, metastore_, *notifier, *options_.catalog, options_.bucket});
  workers_ = std::make_unique<WorkerPool>(bus_, *context_, options_.spawner);
}

Cluster::~Cluster() { shutdown(); }

void Cluster::shutdown() {
  {
    std::lock_guard lock(mutex_);
    if (shut_down_) return;
    shut_down_ = true;
  }
  bus_.shutdown();
  if (workers_) workers_->stop();
  stop_coordinator();
}

void Cluster::start_coordinator() {
  std::lock_guard lock(mutex_);
  if (coordinator_) return;
  coordinator_ = std::make_shared<Coordinator>(metastore_, bus_, *options_.catalog, "");
  coordinator_->set_observer([this](const PhaseAdvance& advance) {
    std::lock_guard log_lock(mutex_);
    phase_log_.push_back(advance);
  });
  if (options_.http) {
    service_ = std::make_unique<CoordinatorService>(*coordinator_, *options_.catalog);
    port_ = service_->start(options_.host, port_);
  } else {
    coordinator_->set_callback_base("inproc://coordinator");
  }
}

void Cluster::stop_coordinator() {
  std::unique_ptr<CoordinatorService> service;
  std::shared_ptr<Coordinator> coordinator;
  {
    std::lock_guard lock(mutex_);
    service = std::move(service_);
    coordinator = std::move(coordinator_);
  }
  // Stopping the server waits for in-flight handlers, which may need mutex_.
  if (service) service->stop();
}

void Cluster::restart_coordinator() {
  stop_coordinator();
  start_coordinator();
}

int Cluster::coordinator_port() const {
  std::lock_guard lock(mutex_);
  return port_;
}

std::vector<PhaseAdvance> Cluster::phase_log() const {
  std::lock_guard lock(mutex_);
  return phase_log_;
}

std::size_t Cluster::notice_duplicates() const { return duplicating_ ? duplicating_->duplicates_sent() : 0; }

std::string Cluster::submit(const JobConfig& config) {
  if (options_.http) return CoordinatorClient(options_.host, coordinator_port()).submit(config);
  std::shared_ptr<Coordinator> coordinator;
  {
    std::lock_guard lock(mutex_);
    coordinator = coordinator_;
  }
  if (!coordinator) throw Error(Errc::kCoordinatorUnreachable, "coordinator is down");
  return coordinator->submit_job(config);
}

SubmitFn Cluster::submitter() {
  return [this](const JobConfig& config) { return submit(config); };
}

void Cluster::deliver(const CompletionNotice& notice) {
  std::shared_ptr<Coordinator> coordinator;
  {
    std::lock_guard lock(mutex_);
    coordinator = coordinator_;
  }
  if (!coordinator) throw Error(Errc::kCoordinatorUnreachable, "coordinator is down");
  try {
    coordinator->on_worker_done(notice);
  } catch (const Error& e) {
    if (e.code() != Errc::kNoSuchJob) throw;
  }
}

}  // namespace mrflow
