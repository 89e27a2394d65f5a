#include "mrflow/metastore/resp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <exception>
#include <cstring>

#include <spdlog/spdlog.h>

#include "mrflow/core/error.hpp"

namespace mrflow::metastore {

namespace resp {

std::string encode_command(const std::vector<std::string>& args) {
  std::string out = "*" + std::to_string(args.size()) + "\r\n";
  for (const auto& a : args) {
    out += "$" + std::to_string(a.size()) + "\r\n";
    out += a;
    out += "\r\n";
  }
  return out;
}

std::string encode(const RespValue& v) {
  switch (v.kind) {
    case RespValue::Kind::kSimple: return "+" + v.text + "\r\n";
    case RespValue::Kind::kError: return "-" + v.text + "\r\n";
    case RespValue::Kind::kInteger: return ":" + std::to_string(v.integer) + "\r\n";
    case RespValue::Kind::kBulk: return "$" + std::to_string(v.text.size()) + "\r\n" + v.text + "\r\n";
    case RespValue::Kind::kNull: return "$-1\r\n";
    case RespValue::Kind::kNullArray: return "*-1\r\n";
    case RespValue::Kind::kArray: {
      std::string out = "*" + std::to_string(v.elements.size()) + "\r\n";
      for (const auto& e : v.elements) out += encode(e);
      return out;
    }
  }
  return {};
}

namespace {

std::optional<RespValue> parse_at(std::string_view buf, std::size_t& pos) {
  if (pos >= buf.size()) return std::nullopt;
  const auto eol = buf.find("\r\n", pos);
  if (eol == std::string_view::npos) return std::nullopt;
  const char type = buf[pos];
  const std::string line(buf.substr(pos + 1, eol - pos - 1));
  std::size_t next = eol + 2;
  auto to_int = [&](const std::string& s) -> std::int64_t {
    try {
      return std::stoll(s);
    } catch (const std::exception&) {
      throw Error(Errc::kMetastoreUnavailable, "malformed RESP integer: " + s);
    }
  };
  switch (type) {
    case '+': pos = next; return RespValue::simple(line);
    case '-': pos = next; return RespValue::error(line);
    case ':': pos = next; return RespValue::integer_value(to_int(line));
    case '$': {
      const auto len = to_int(line);
      if (len < 0) {
        pos = next;
        return RespValue::null();
      }
      if (buf.size() < next + static_cast<std::size_t>(len) + 2) return std::nullopt;
      RespValue v = RespValue::bulk(std::string(buf.substr(next, static_cast<std::size_t>(len))));
      pos = next + static_cast<std::size_t>(len) + 2;
      return v;
    }
    case '*': {
      const auto n = to_int(line);
      if (n < 0) {
        pos = next;
        return RespValue::null_array();
      }
      std::vector<RespValue> elems;
      elems.reserve(static_cast<std::size_t>(n));
      std::size_t p = next;
      for (std::int64_t i = 0; i < n; ++i) {
        auto e = parse_at(buf, p);
        if (!e) return std::nullopt;
        elems.push_back(std::move(*e));
      }
      pos = p;
      return RespValue::array(std::move(elems));
    }
    default: {
      // Inline command (telnet style): whitespace-separated words.
      std::vector<RespValue> words;
      std::string cur;
      for (const char c : std::string(buf.substr(pos, eol - pos))) {
        if (c == ' ' || c == '\t') {
          if (!cur.empty()) words.push_back(RespValue::bulk(std::move(cur)));
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      if (!cur.empty()) words.push_back(RespValue::bulk(std::move(cur)));
      pos = next;
      return RespValue::array(std::move(words));
    }
  }
}

}  // namespace

std::optional<RespValue> parse(std::string_view buffer, std::size_t& consumed) {
  std::size_t pos = 0;
  auto v = parse_at(buffer, pos);
  if (v) consumed = pos;
  return v;
}

}  // namespace resp

bool glob_match(std::string_view p, std::string_view t) {
  std::size_t pi = 0, ti = 0, star = std::string_view::npos, mark = 0;
  while (ti < t.size()) {
    if (pi < p.size() && p[pi] == '\\' && pi + 1 < p.size() && p[pi + 1] == t[ti]) {
      pi += 2;
      ++ti;
    } else if (pi < p.size() && (p[pi] == '?' || (p[pi] != '*' && p[pi] != '\\' && p[pi] == t[ti]))) {
      ++pi;
      ++ti;
    } else if (pi < p.size() && p[pi] == '*') {
      star = pi++;
      mark = ti;
    } else if (star != std::string_view::npos) {
      pi = star + 1;
      ti = ++mark;
    } else {
      return false;
    }
  }
  while (pi < p.size() && p[pi] == '*') ++pi;
  return pi == p.size();
}

// ---------------------------------------------------------------------------
// Client

class RespKvStore::Connection {
 public:
  Connection(const KvEndpoint& ep, int timeout_ms) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    if (getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
      throw Error(Errc::kMetastoreUnavailable, "cannot resolve " + ep.host);
    }
    for (auto* ai = res; ai; ai = ai->ai_next) {
      fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd_ < 0) continue;
      timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
      setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
      setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
      int one = 1;
      setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    freeaddrinfo(res);
    if (fd_ < 0) {
      throw Error(Errc::kMetastoreUnavailable, "cannot connect to " + ep.host + ":" + port + ": " + std::strerror(errno));
    }
  }

  ~Connection() {
    if (fd_ >= 0) ::close(fd_);
  }

  RespValue command(const std::vector<std::string>& args) {
    const std::string wire = resp::encode_command(args);
    std::size_t sent = 0;
    while (sent < wire.size()) {
      const auto n = ::send(fd_, wire.data() + sent, wire.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) throw Error(Errc::kMetastoreUnavailable, std::string("send failed: ") + std::strerror(errno));
      sent += static_cast<std::size_t>(n);
    }
    while (true) {
      std::size_t used = 0;
      if (auto v = resp::parse(buffer_, used)) {
        buffer_.erase(0, used);
        return *v;
      }
      char chunk[16384];
      const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) throw Error(Errc::kMetastoreUnavailable, "connection to metastore lost");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

class RespKvStore::Lease {
 public:
  explicit Lease(RespKvStore& store) : store_(store), conn_(store.acquire()) {}
  Lease(const Lease&) = delete;
  Lease& operator=(const Lease&) = delete;
  ~Lease() {
    if (!conn_) return;
    if (std::uncaught_exceptions() > 0) {
      // A half-finished WATCH/MULTI sequence must not leak into the next lease.
      try {
        conn_->command({"DISCARD"});
      } catch (...) {
      }
      try {
        conn_->command({"UNWATCH"});
      } catch (...) {
        return;
      }
    }
    store_.release(std::move(conn_));
  }
  RespValue command(const std::vector<std::string>& args) {
    RespValue v;
    try {
      v = conn_->command(args);
    } catch (const Error&) {
      conn_.reset();  // broken socket; never return it to the pool
      throw;
    }
    if (v.kind == RespValue::Kind::kError) throw Error(Errc::kMetastoreUnavailable, "metastore replied: " + v.text);
    return v;
  }

 private:
  RespKvStore& store_;
  std::unique_ptr<Connection> conn_;
};

RespKvStore::RespKvStore(KvEndpoint endpoint, int timeout_ms) : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {}

RespKvStore::~RespKvStore() = default;

std::unique_ptr<RespKvStore::Connection> RespKvStore::acquire() {
  {
    std::lock_guard lock(mutex_);
    if (!idle_.empty()) {
      auto c = std::move(idle_.back());
      idle_.pop_back();
      return c;
    }
  }
  return std::make_unique<Connection>(endpoint_, timeout_ms_);
}

void RespKvStore::release(std::unique_ptr<Connection> conn) {
  std::lock_guard lock(mutex_);
  idle_.push_back(std::move(conn));
}

RespValue RespKvStore::run(const std::vector<std::string>& args) {
  Lease lease(*this);
  return lease.command(args);
}

std::optional<std::string> RespKvStore::get(const std::string& key) {
  auto v = run({"GET", key});
  if (v.kind == RespValue::Kind::kNull) return std::nullopt;
  return std::move(v.text);
}

void RespKvStore::set(const std::string& key, const std::string& value) { run({"SET", key, value}); }

bool RespKvStore::compare_and_set(const std::string& key, const std::optional<std::string>& expected,
                                  const std::string& value) {
  Lease lease(*this);
  lease.command({"WATCH", key});
  const auto cur = lease.command({"GET", key});
  const bool absent = cur.kind == RespValue::Kind::kNull;
  const bool matches = expected ? (!absent && cur.text == *expected) : absent;
  if (!matches) {
    lease.command({"UNWATCH"});
    return false;
  }
  lease.command({"MULTI"});
  lease.command({"SET", key, value});
  const auto exec = lease.command({"EXEC"});
  return exec.kind == RespValue::Kind::kArray;
}

SetAddResult RespKvStore::set_add(const std::string& key, const std::string& member) {
  Lease lease(*this);
  lease.command({"MULTI"});
  lease.command({"SADD", key, member});
  lease.command({"SCARD", key});
  const auto exec = lease.command({"EXEC"});
  if (exec.kind != RespValue::Kind::kArray || exec.elements.size() != 2) {
    throw Error(Errc::kMetastoreUnavailable, "unexpected EXEC reply for SADD/SCARD");
  }
  for (const auto& reply : exec.elements) {
    if (reply.kind == RespValue::Kind::kError) throw Error(Errc::kMetastoreUnavailable, reply.text);
  }
  return {exec.elements[0].integer > 0, static_cast<std::size_t>(exec.elements[1].integer)};
}

std::size_t RespKvStore::set_size(const std::string& key) {
  return static_cast<std::size_t>(run({"SCARD", key}).integer);
}

std::vector<std::string> RespKvStore::set_members(const std::string& key) {
  auto v = run({"SMEMBERS", key});
  std::vector<std::string> out;
  for (auto& e : v.elements) out.push_back(std::move(e.text));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> RespKvStore::keys_with_prefix(const std::string& prefix) {
  std::string pattern;
  for (const char c : prefix) {
    if (c == '*' || c == '?' || c == '[' || c == ']' || c == '\\') pattern.push_back('\\');
    pattern.push_back(c);
  }
  pattern.push_back('*');
  auto v = run({"KEYS", pattern});
  std::vector<std::string> out;
  for (auto& e : v.elements) out.push_back(std::move(e.text));
  std::sort(out.begin(), out.end());
  return out;
}

void RespKvStore::erase(const std::string& key) { run({"DEL", key}); }

bool RespKvStore::ping() {
  try {
    return run({"PING"}).text == "PONG";
  } catch (const Error&) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Server

struct RespServer::Session {
  bool in_multi = false;
  bool multi_error = false;
  std::vector<std::vector<std::string>> queued;
  std::map<std::string, std::uint64_t> watched;
};

RespServer::~RespServer() { stop(); }

int RespServer::start(const std::string& host, int port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(Errc::kMetastoreUnavailable, "socket() failed");
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::kInvalidArgument, "kv server needs an IPv4 address, got " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 128) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(Errc::kMetastoreUnavailable, "cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  return port_;
}

void RespServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(clients_mutex_);
    for (const int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    threads.swap(client_threads_);
  }
  for (auto& t : threads) t.join();
}

void RespServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      continue;
    }
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(clients_mutex_);
    client_fds_.push_back(fd);
    client_threads_.emplace_back([this, fd] { serve(fd); });
  }
}

void RespServer::serve(int fd) {
  Session session;
  std::string buffer;
  char chunk[16384];
  bool open = true;
  while (open && running_) {
    const auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::string out;
    while (true) {
      std::size_t used = 0;
      std::optional<RespValue> req;
      try {
        req = resp::parse(buffer, used);
      } catch (const Error& e) {
        out += resp::encode(RespValue::error("ERR protocol error"));
        open = false;
        break;
      }
      if (!req) break;
      buffer.erase(0, used);
      std::vector<std::string> args;
      for (auto& e : req->elements) args.push_back(std::move(e.text));
      if (args.empty()) continue;
      std::string cmd = args[0];
      for (auto& c : cmd) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (cmd == "QUIT") {
        out += resp::encode(RespValue::simple("OK"));
        open = false;
        break;
      }
      out += resp::encode(dispatch(session, args));
    }
    std::size_t sent = 0;
    while (sent < out.size()) {
      const auto m = ::send(fd, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
      if (m <= 0) {
        open = false;
        break;
      }
      sent += static_cast<std::size_t>(m);
    }
  }
  std::lock_guard lock(clients_mutex_);
  std::erase(client_fds_, fd);
  ::close(fd);
}

void RespServer::touch(const std::string& key) { versions_[key] = ++clock_; }

RespValue RespServer::execute(const std::vector<std::string>& args) {
  std::lock_guard lock(mutex_);
  return apply(args);
}

RespValue RespServer::dispatch(Session& s, const std::vector<std::string>& args) {
  std::string cmd = args[0];
  for (auto& c : cmd) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));

  if (cmd == "MULTI") {
    if (s.in_multi) return RespValue::error("ERR MULTI calls can not be nested");
    s.in_multi = true;
    s.multi_error = false;
    s.queued.clear();
    return RespValue::simple("OK");
  }
  if (cmd == "DISCARD") {
    if (!s.in_multi) return RespValue::error("ERR DISCARD without MULTI");
    s.in_multi = false;
    s.queued.clear();
    s.watched.clear();
    return RespValue::simple("OK");
  }
  if (cmd == "EXEC") {
    if (!s.in_multi) return RespValue::error("ERR EXEC without MULTI");
    s.in_multi = false;
    std::lock_guard lock(mutex_);
    const bool dirty = std::any_of(s.watched.begin(), s.watched.end(), [&](const auto& w) {
      const auto it = versions_.find(w.first);
      return (it == versions_.end() ? 0 : it->second) != w.second;
    });
    s.watched.clear();
    auto queued = std::move(s.queued);
    s.queued.clear();
    if (s.multi_error) return RespValue::error("EXECABORT Transaction discarded because of previous errors.");
    if (dirty) return RespValue::null_array();
    std::vector<RespValue> replies;
    for (const auto& q : queued) replies.push_back(apply(q));
    return RespValue::array(std::move(replies));
  }
  if (cmd == "WATCH") {
    if (s.in_multi) return RespValue::error("ERR WATCH inside MULTI is not allowed");
    std::lock_guard lock(mutex_);
    for (std::size_t i = 1; i < args.size(); ++i) {
      const auto it = versions_.find(args[i]);
      s.watched[args[i]] = it == versions_.end() ? 0 : it->second;
    }
    return RespValue::simple("OK");
  }
  if (cmd == "UNWATCH") {
    s.watched.clear();
    return RespValue::simple("OK");
  }
  if (s.in_multi) {
    static const std::set<std::string> known = {"PING", "GET", "SET", "DEL", "KEYS", "SADD",
                                                "SREM", "SCARD", "SMEMBERS", "FLUSHALL", "EXISTS"};
    if (!known.contains(cmd)) {
      s.multi_error = true;
      return RespValue::error("ERR unknown command '" + args[0] + "'");
    }
    s.queued.push_back(args);
    return RespValue::simple("QUEUED");
  }
  std::lock_guard lock(mutex_);
  return apply(args);
}

RespValue RespServer::apply(const std::vector<std::string>& args) {
  std::string cmd = args[0];
  for (auto& c : cmd) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  auto arity = [&](std::size_t n) { return args.size() >= n; };
  static const auto wrongtype =
      RespValue::error("WRONGTYPE Operation against a key holding the wrong kind of value");

  if (cmd == "PING") return RespValue::simple("PONG");
  if (cmd == "GET" && arity(2)) {
    if (sets_.contains(args[1])) return wrongtype;
    const auto it = strings_.find(args[1]);
    return it == strings_.end() ? RespValue::null() : RespValue::bulk(it->second);
  }
  if (cmd == "SET" && arity(3)) {
    sets_.erase(args[1]);
    strings_[args[1]] = args[2];
    touch(args[1]);
    return RespValue::simple("OK");
  }
  if (cmd == "DEL" && arity(2)) {
    std::int64_t n = 0;
    for (std::size_t i = 1; i < args.size(); ++i) {
      n += static_cast<std::int64_t>(strings_.erase(args[i]) + sets_.erase(args[i]));
      touch(args[i]);
    }
    return RespValue::integer_value(n);
  }
  if (cmd == "EXISTS" && arity(2)) {
    std::int64_t n = 0;
    for (std::size_t i = 1; i < args.size(); ++i) n += strings_.contains(args[i]) || sets_.contains(args[i]);
    return RespValue::integer_value(n);
  }
  if (cmd == "KEYS" && arity(2)) {
    std::vector<RespValue> out;
    for (const auto& [k, _] : strings_) {
      if (glob_match(args[1], k)) out.push_back(RespValue::bulk(k));
    }
    for (const auto& [k, _] : sets_) {
      if (glob_match(args[1], k)) out.push_back(RespValue::bulk(k));
    }
    return RespValue::array(std::move(out));
  }
  if (cmd == "SADD" && arity(3)) {
    if (strings_.contains(args[1])) return wrongtype;
    auto& s = sets_[args[1]];
    std::int64_t added = 0;
    for (std::size_t i = 2; i < args.size(); ++i) added += s.insert(args[i]).second;
    if (added) touch(args[1]);
    return RespValue::integer_value(added);
  }
  if (cmd == "SREM" && arity(3)) {
    const auto it = sets_.find(args[1]);
    std::int64_t removed = 0;
    if (it != sets_.end()) {
      for (std::size_t i = 2; i < args.size(); ++i) removed += static_cast<std::int64_t>(it->second.erase(args[i]));
      if (it->second.empty()) sets_.erase(it);
    }
    if (removed) touch(args[1]);
    return RespValue::integer_value(removed);
  }
  if (cmd == "SCARD" && arity(2)) {
    if (strings_.contains(args[1])) return wrongtype;
    const auto it = sets_.find(args[1]);
    return RespValue::integer_value(it == sets_.end() ? 0 : static_cast<std::int64_t>(it->second.size()));
  }
  if (cmd == "SMEMBERS" && arity(2)) {
    if (strings_.contains(args[1])) return wrongtype;
    std::vector<RespValue> out;
    const auto it = sets_.find(args[1]);
    if (it != sets_.end()) {
      for (const auto& m : it->second) out.push_back(RespValue::bulk(m));
    }
    return RespValue::array(std::move(out));
  }
  if (cmd == "FLUSHALL") {
    for (const auto& [k, _] : strings_) touch(k);
    for (const auto& [k, _] : sets_) touch(k);
    strings_.clear();
    sets_.clear();
    return RespValue::simple("OK");
  }
  return RespValue::error("ERR unknown command or wrong number of arguments for '" + args[0] + "'");
}

}  // namespace mrflow::metastore
