#pragma once

// JSON-over-HTTP front end for guidance sessions. Request handling is
// transport independent (`handle`) so it can be driven directly in tests;
// `listen` binds it to an HTTP server.

#include "stgnav/app_model.hpp"
#include "stgnav/capture.hpp"
#include "stgnav/error.hpp"
#include "stgnav/guidance.hpp"
#include "stgnav/merging.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

namespace httplib {
class Server;
}

namespace stgnav {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  Millis idle_threshold_ms = kDefaultIdleThresholdMs;
  double tau = kDefaultSimilarityThreshold;
  std::size_t n_exact = kDefaultExactCapacity;
  /// Fixture documents (apps or graphs) loaded at startup; id = file stem.
  std::string fixture_dir;
  /// Per-session newline-delimited event logs; sessions are restored from
  /// here at startup.
  std::string log_dir;
};

/// Display document of a graph for the explorer's map view.
Json display_document(const StgGraph& graph);

struct HttpResponse {
  int status = 200;
  Json body;
};

/// Error body {code, message, path} and the HTTP status for an error code.
HttpResponse error_response(const Error& error);

class GuidanceService {
 public:
  explicit GuidanceService(ServiceConfig config);
  ~GuidanceService();

  GuidanceService(const GuidanceService&) = delete;
  GuidanceService& operator=(const GuidanceService&) = delete;

  const ServiceConfig& config() const { return config_; }

  /// Dispatches one request. Never throws; errors become error responses.
  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body);

  /// Registers an app graph directly (as POST /apps would); returns its id.
  std::string add_app(const Json& document, std::optional<std::string> id = std::nullopt);

  /// Replays every session log in log_dir; returns how many were restored.
  std::size_t restore_sessions();

  /// Routes all endpoints on `server`.
  void bind(httplib::Server& server);

  /// Blocking HTTP loop on config().host:config().port.
  bool listen();
  void stop();

 private:
  struct App {
    StgGraph graph;
    Json summary;
  };
  struct Slot {
    std::mutex mutex;
    std::optional<Session> session;
    std::string app_id;
    std::chrono::steady_clock::time_point created;
    std::size_t persisted_events = 0;
  };

  HttpResponse route(const std::string& method, const std::string& path, const Json& body);
  HttpResponse create_app(const Json& body);
  HttpResponse get_stg(const std::string& app_id);
  HttpResponse create_session(const Json& body);
  HttpResponse session_hint(const std::string& session_id);
  HttpResponse session_action(const std::string& session_id, const Json& body);
  HttpResponse session_idle(const std::string& session_id, const Json& body);
  HttpResponse session_metrics(const std::string& session_id);
  HttpResponse session_events(const std::string& session_id);

  std::shared_ptr<Slot> slot(const std::string& session_id);
  Json session_view(const Session& session, const std::string& app_id) const;
  Millis clock_ms(const Slot& slot, const Json& body) const;
  void persist(Slot& slot);

  ServiceConfig config_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, App> apps_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t next_app_ = 1;
  std::uint64_t next_session_ = 1;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace stgnav
