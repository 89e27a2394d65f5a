#pragma once

#include <memory>
#include <string>
#include <thread>

#include "mrflow/coordinator/coordinator.hpp"

namespace httplib {
class Server;
}

namespace mrflow {

// HTTP front end for a Coordinator.
//
//   POST /jobs                 job-config document -> {"job_id": ...}
//   POST /jobs/{id}/notify     CompletionNotice document
//   GET  /healthz
//
// 400 for malformed or invalid input, 404 for unknown jobs, 503 when the
// metastore or bus is unreachable.
class CoordinatorService {
 public:
  CoordinatorService(Coordinator& coordinator, const FunctionCatalog& catalog = FunctionCatalog::global());
  CoordinatorService(const CoordinatorService&) = delete;
  CoordinatorService& operator=(const CoordinatorService&) = delete;
  ~CoordinatorService();

  // Binds (port 0 picks a free port), starts serving on a background thread
  // and returns the bound port. Sets the coordinator's callback base to this
  // address unless one was configured already.
  int start(const std::string& host, int port);
  void stop();

  int port() const { return port_; }

 private:
  void install_routes();

  Coordinator& coordinator_;
  const FunctionCatalog& catalog_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

// Client side of POST /jobs and GET /healthz.
class CoordinatorClient {
 public:
  CoordinatorClient(std::string host, int port);

  // Returns the assigned job id. CoordinatorUnreachable on transport errors,
  // InvalidConfig/NoSuchJob/StoreUnavailable per HTTP status otherwise.
  std::string submit(const JobConfig& config) const;
  bool healthy() const;

 private:
  std::string host_;
  int port_;
};

}  // namespace mrflow
