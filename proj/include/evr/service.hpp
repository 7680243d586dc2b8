#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "evr/assessment.hpp"
#include "evr/error.hpp"

namespace evr::service {

struct Session {
  std::string id;
  AssessmentState state;
  std::string created;
  std::string updated;
  std::uint64_t revision = 1;
};

/// Whole-state snapshot. Beliefs are not stored; they are recomputed from the
/// ledger on load, which reproduces them exactly.
nlohmann::json snapshot(const Session& session);
Session restore(const nlohmann::json& snapshot);

/// One JSON file per session, replaced by atomic rename.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path directory);

  const std::filesystem::path& directory() const { return directory_; }
  void persist(const Session& session) const;
  /// Every readable snapshot in the directory, keyed by session id.
  std::map<std::string, Session> load_all() const;

 private:
  std::filesystem::path directory_;
};

struct Response {
  int status = 200;
  std::string body;
};

/// Transport-independent session API. Requests for different sessions run
/// concurrently; requests for one session are serialized and mutating ones
/// are checked against `expected_revision` when the body carries it.
class Service {
 public:
  explicit Service(std::optional<std::filesystem::path> data_dir);

  Response handle_request(std::string_view method, std::string_view path, std::string_view body);
  std::size_t session_count() const;

 private:
  struct Slot {
    explicit Slot(Session s) : session(std::move(s)) {}
    std::mutex mutex;
    Session session;
  };

  std::shared_ptr<Slot> find(const std::string& id) const;
  std::string fresh_id();

  std::optional<SessionStore> store_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t id_counter_ = 0;
};

/// HTTP status for an engine error code.
int http_status(ErrorCode code);

/// HTTP transport for a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port (an ephemeral one when `port` is 0), or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocks serving `service` over HTTP until the process is stopped.
/// Returns false if the port cannot be bound.
bool serve_http(Service& service, const std::string& host, int port);

}  // namespace evr::service
