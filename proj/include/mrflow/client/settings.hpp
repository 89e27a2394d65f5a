#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include "mrflow/metastore/kv_store.hpp"
#include "mrflow/storage/object_store.hpp"
#include "mrflow/storage/s3_store.hpp"

namespace mrflow {

struct StorageSettings {
  std::string backend = "local";  // local | s3 | memory
  std::string root = "./mrflow-data";
  std::string bucket = "mrflow";
  storage::S3Settings s3;
};

struct MetastoreSettings {
  std::string backend = "memory";  // memory | kv
  std::string host = "127.0.0.1";
  int port = 6379;
};

struct CoordinatorSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct EventBusSettings {
  std::chrono::milliseconds cold_start_delay{0};
  std::size_t max_concurrency = 0;
};

struct ClientSettings {
  std::chrono::milliseconds poll_interval{500};
  std::chrono::milliseconds deadline{10 * 60 * 1000};
};

// Deployment-wide settings, read from one YAML file.
//
//   storage:     {backend, root, bucket, endpoint, access_key, secret_key, region}
//   metastore:   {backend, host, port}
//   coordinator: {host, port}
//   eventbus:    {cold_start_delay_ms, max_concurrency}
//   client:      {poll_interval_ms, deadline_ms}
//
// Every key is optional. Unknown keys are rejected (InvalidArgument).
struct Settings {
  StorageSettings storage;
  MetastoreSettings metastore;
  CoordinatorSettings coordinator;
  EventBusSettings eventbus;
  ClientSettings client;
};

Settings parse_settings(const std::string& yaml_text);
Settings load_settings(const std::filesystem::path& path);

std::shared_ptr<storage::ObjectStore> make_object_store(const StorageSettings& settings);
std::shared_ptr<metastore::KvStore> make_kv_store(const MetastoreSettings& settings);

}  // namespace mrflow
