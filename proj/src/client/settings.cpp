#include "mrflow/client/settings.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mrflow/core/error.hpp"
#include "mrflow/metastore/resp.hpp"
#include "mrflow/storage/local_store.hpp"
#include "mrflow/storage/memory_store.hpp"

namespace mrflow {
namespace {

void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw Error(Errc::kInvalidArgument, "settings: '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw Error(Errc::kInvalidArgument, "settings: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

void read_ms(const YAML::Node& node, const char* key, std::chrono::milliseconds& out) {
  if (node[key]) {
    const auto ms = node[key].as<long long>();
    if (ms < 0) throw Error(Errc::kInvalidArgument, std::string("settings: ") + key + " must be >= 0");
    out = std::chrono::milliseconds(ms);
  }
}

}  // namespace

Settings parse_settings(const std::string& yaml_text) {
  Settings s;
  try {
    const auto root = YAML::Load(yaml_text);
    if (!root || root.IsNull()) return s;
    check_keys(root, "<root>", {"storage", "metastore", "coordinator", "eventbus", "client"});

    if (const auto n = root["storage"]) {
      check_keys(n, "storage", {"backend", "root", "bucket", "endpoint", "access_key", "secret_key", "region", "timeout_ms"});
      read(n, "backend", s.storage.backend);
      read(n, "root", s.storage.root);
      read(n, "bucket", s.storage.bucket);
      read(n, "endpoint", s.storage.s3.endpoint);
      read(n, "access_key", s.storage.s3.credentials.access_key);
      read(n, "secret_key", s.storage.s3.credentials.secret_key);
      read(n, "region", s.storage.s3.credentials.region);
      read(n, "timeout_ms", s.storage.s3.timeout_ms);
    }
    if (const auto n = root["metastore"]) {
      check_keys(n, "metastore", {"backend", "host", "port"});
      read(n, "backend", s.metastore.backend);
      read(n, "host", s.metastore.host);
      read(n, "port", s.metastore.port);
    }
    if (const auto n = root["coordinator"]) {
      check_keys(n, "coordinator", {"host", "port"});
      read(n, "host", s.coordinator.host);
      read(n, "port", s.coordinator.port);
    }
    if (const auto n = root["eventbus"]) {
      check_keys(n, "eventbus", {"cold_start_delay_ms", "max_concurrency"});
      read_ms(n, "cold_start_delay_ms", s.eventbus.cold_start_delay);
      read(n, "max_concurrency", s.eventbus.max_concurrency);
    }
    if (const auto n = root["client"]) {
      check_keys(n, "client", {"poll_interval_ms", "deadline_ms"});
      read_ms(n, "poll_interval_ms", s.client.poll_interval);
      read_ms(n, "deadline_ms", s.client.deadline);
    }
  } catch (const YAML::Exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("settings: ") + e.what());
  }

  if (s.storage.backend != "local" && s.storage.backend != "s3" && s.storage.backend != "memory") {
    throw Error(Errc::kInvalidArgument, "settings: storage.backend must be local, s3 or memory");
  }
  if (s.metastore.backend != "memory" && s.metastore.backend != "kv") {
    throw Error(Errc::kInvalidArgument, "settings: metastore.backend must be memory or kv");
  }
  if (s.storage.bucket.empty()) throw Error(Errc::kInvalidArgument, "settings: storage.bucket is empty");
  if (s.client.poll_interval.count() == 0) {
    throw Error(Errc::kInvalidArgument, "settings: client.poll_interval_ms must be > 0");
  }
  return s;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kInvalidArgument, "cannot read settings file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_settings(text.str());
}

std::shared_ptr<storage::ObjectStore> make_object_store(const StorageSettings& settings) {
  if (settings.backend == "memory") return std::make_shared<storage::MemoryObjectStore>();
  if (settings.backend == "s3") return std::make_shared<storage::S3ObjectStore>(settings.s3);
  return std::make_shared<storage::LocalObjectStore>(settings.root);
}

std::shared_ptr<metastore::KvStore> make_kv_store(const MetastoreSettings& settings) {
  if (settings.backend == "kv") {
    return std::make_shared<metastore::RespKvStore>(metastore::KvEndpoint{settings.host, settings.port});
  }
  return std::make_shared<metastore::MemoryKvStore>();
}

}  // namespace mrflow
