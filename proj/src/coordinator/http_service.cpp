#include "mrflow/coordinator/http_service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"

namespace mrflow {
namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::kMalformedConfig:
    case Errc::kInvalidConfig:
    case Errc::kUnknownFunction:
    case Errc::kInvalidArgument:
    case Errc::kIllegalTransition:
      return 400;
    case Errc::kNoSuchJob:
      return 404;
    default:
      return 503;
  }
}

void reply_error(httplib::Response& res, const Error& e) {
  res.status = status_for(e.code());
  res.set_content(nlohmann::json{{"error", std::string(errc_name(e.code()))}, {"detail", e.detail()}}.dump(),
                  "application/json");
}

}  // namespace

CoordinatorService::CoordinatorService(Coordinator& coordinator, const FunctionCatalog& catalog)
    : coordinator_(coordinator), catalog_(catalog), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

CoordinatorService::~CoordinatorService() { stop(); }

void CoordinatorService::install_routes() {
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  server_->Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto config = parse_job_config(req.body, catalog_);
      const auto job_id = coordinator_.submit_job(std::move(config));
      res.set_content(nlohmann::json{{"job_id", job_id}}.dump(), "application/json");
    } catch (const Error& e) {
      spdlog::warn("POST /jobs rejected: {}", e.what());
      reply_error(res, e);
    }
  });

  server_->Post(R"(/jobs/([^/]+)/notify)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::kInvalidArgument, std::string("notice is not JSON: ") + e.what());
      }
      const auto notice = completion_notice_from_json(doc);
      if (notice.job_id != req.matches[1].str()) {
        throw Error(Errc::kInvalidArgument, "notice job_id does not match URL");
      }
      const auto outcome = coordinator_.on_worker_done(notice);
      res.set_content(nlohmann::json{{"outcome", std::string(to_string(outcome))}}.dump(), "application/json");
    } catch (const Error& e) {
      if (e.code() == Errc::kNoSuchJob) spdlog::warn("dropping notice for unknown job {}", req.matches[1].str());
      reply_error(res, e);
    }
  });
}

int CoordinatorService::start(const std::string& host, int port) {
  if (thread_.joinable()) throw Error(Errc::kInvalidArgument, "coordinator service already running");
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(Errc::kInvalidArgument, "cannot bind coordinator to " + host + ":" + std::to_string(port));
  if (!coordinator_.has_callback_base()) {
    coordinator_.set_callback_base("http://" + host + ":" + std::to_string(port_));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("coordinator listening on {}:{}", host, port_);
  return port_;
}

void CoordinatorService::stop() {
  if (!thread_.joinable()) return;
  server_->stop();
  thread_.join();
}

CoordinatorClient::CoordinatorClient(std::string host, int port) : host_(std::move(host)), port_(port) {}

std::string CoordinatorClient::submit(const JobConfig& config) const {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(std::chrono::seconds(5));
  cli.set_read_timeout(std::chrono::seconds(30));
  const auto res = cli.Post("/jobs", serialize_job_config(config), "application/json");
  if (!res) {
    throw Error(Errc::kCoordinatorUnreachable,
                host_ + ":" + std::to_string(port_) + ": " + httplib::to_string(res.error()));
  }
  std::string detail = res->body;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    if (res->status == 200) return doc.at("job_id").get<std::string>();
    detail = doc.value("detail", res->body);
  } catch (const nlohmann::json::exception&) {
    if (res->status == 200) throw Error(Errc::kCoordinatorUnreachable, "unexpected reply: " + res->body);
  }
  switch (res->status) {
    case 400: throw Error(Errc::kInvalidConfig, detail);
    case 404: throw Error(Errc::kNoSuchJob, detail);
    default: throw Error(Errc::kCoordinatorUnreachable, "HTTP " + std::to_string(res->status) + ": " + detail);
  }
}

bool CoordinatorClient::healthy() const {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(std::chrono::seconds(2));
  const auto res = cli.Get("/healthz");
  return res && res->status == 200;
}

}  // namespace mrflow
