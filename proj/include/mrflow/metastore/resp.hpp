#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mrflow/metastore/kv_store.hpp"

namespace mrflow::metastore {

// One decoded RESP reply.
struct RespValue {
  enum class Kind { kSimple, kError, kInteger, kBulk, kNull, kArray, kNullArray };
  Kind kind = Kind::kNull;
  std::string text;  // simple, error, bulk
  std::int64_t integer = 0;
  std::vector<RespValue> elements;

  static RespValue simple(std::string s) { return {Kind::kSimple, std::move(s), 0, {}}; }
  static RespValue error(std::string s) { return {Kind::kError, std::move(s), 0, {}}; }
  static RespValue integer_value(std::int64_t v) { return {Kind::kInteger, {}, v, {}}; }
  static RespValue bulk(std::string s) { return {Kind::kBulk, std::move(s), 0, {}}; }
  static RespValue null() { return {Kind::kNull, {}, 0, {}}; }
  static RespValue null_array() { return {Kind::kNullArray, {}, 0, {}}; }
  static RespValue array(std::vector<RespValue> v) { return {Kind::kArray, {}, 0, std::move(v)}; }
};

namespace resp {
std::string encode_command(const std::vector<std::string>& args);
std::string encode(const RespValue& value);
// Parses one value from the front of `buffer`; nullopt if incomplete.
// On success `consumed` holds the number of bytes used.
std::optional<RespValue> parse(std::string_view buffer, std::size_t& consumed);
}  // namespace resp

struct KvEndpoint {
  std::string host = "127.0.0.1";
  int port = 6379;
};

// KvStore over the Redis protocol. Works against Redis itself or against
// RespServer below. Connections are pooled; each call leases one connection,
// so WATCH/MULTI/EXEC sequences never interleave.
class RespKvStore final : public KvStore {
 public:
  explicit RespKvStore(KvEndpoint endpoint, int timeout_ms = 5000);
  ~RespKvStore() override;

  std::optional<std::string> get(const std::string& key) override;
  void set(const std::string& key, const std::string& value) override;
  bool compare_and_set(const std::string& key, const std::optional<std::string>& expected,
                       const std::string& value) override;
  SetAddResult set_add(const std::string& key, const std::string& member) override;
  std::size_t set_size(const std::string& key) override;
  std::vector<std::string> set_members(const std::string& key) override;
  std::vector<std::string> keys_with_prefix(const std::string& prefix) override;
  void erase(const std::string& key) override;

  bool ping();

  class Connection;

 private:
  class Lease;
  std::unique_ptr<Connection> acquire();
  void release(std::unique_ptr<Connection> conn);
  RespValue run(const std::vector<std::string>& args);

  KvEndpoint endpoint_;
  int timeout_ms_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<Connection>> idle_;
};

// Small single-process server speaking the subset of the Redis protocol that
// RespKvStore uses (PING GET SET DEL KEYS SADD SREM SCARD SMEMBERS WATCH
// UNWATCH MULTI EXEC DISCARD FLUSHALL QUIT). Lets several processes share
// metadata without an external Redis.
class RespServer {
 public:
  RespServer() = default;
  RespServer(const RespServer&) = delete;
  RespServer& operator=(const RespServer&) = delete;
  ~RespServer();

  // Binds and starts serving on a background thread. Port 0 picks a free
  // port; returns the bound port.
  int start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

  // Executes one command against the data set (no transaction context).
  RespValue execute(const std::vector<std::string>& args);

 private:
  struct Session;
  void accept_loop();
  void serve(int fd);
  RespValue dispatch(Session& session, const std::vector<std::string>& args);
  RespValue apply(const std::vector<std::string>& args);  // caller holds mutex_
  void touch(const std::string& key);

  std::mutex mutex_;
  std::map<std::string, std::string> strings_;
  std::map<std::string, std::set<std::string>> sets_;
  std::map<std::string, std::uint64_t> versions_;
  std::uint64_t clock_ = 0;

  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex clients_mutex_;
  std::vector<int> client_fds_;
  std::vector<std::thread> client_threads_;
};

// Glob matching as used by KEYS: '*', '?', and '\' escapes.
bool glob_match(std::string_view pattern, std::string_view text);

}  // namespace mrflow::metastore
