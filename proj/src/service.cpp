#include "stgnav/service.hpp"

#include "stgnav/error.hpp"

#include <httplib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stgnav {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string clean = path.substr(0, path.find('?'));
  std::stringstream stream(clean);
  std::string part;
  while (std::getline(stream, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "cannot read " + path.string(), path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json optional_object(const Json& body) { return body.is_null() ? Json::object() : body; }

}  // namespace

Json display_document(const StgGraph& graph) {
  Json nodes = Json::array();
  std::map<std::string, std::vector<std::string>> activities;
  for (const auto& state : graph.states) {
    nodes.push_back({{"id", state.state_id}, {"activity", state.activity}, {"visit_count", state.visit_count}});
    activities[state.activity].push_back(state.state_id);
  }
  Json edges = Json::array();
  for (const auto& edge : graph.actions) {
    edges.push_back({{"id", edge.action_id},
                     {"source", edge.source},
                     {"target", edge.target},
                     {"trigger", std::string(to_string(edge.trigger))},
                     {"component_ref", edge.component_ref},
                     {"provenance", std::string(to_string(edge.provenance))}});
  }
  Json groups = Json::array();
  for (const auto& [name, states] : activities) groups.push_back({{"name", name}, {"states", states}});
  return {{"version", kDocumentVersion},
          {"start_state", graph.start_state},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"activities", std::move(groups)}};
}

HttpResponse error_response(const Error& error) {
  int status = 400;
  switch (error.code()) {
    case ErrorCode::parse:
    case ErrorCode::version:
    case ErrorCode::validation:
    case ErrorCode::parameter:
      status = 400;
      break;
    case ErrorCode::not_found: status = 404; break;
    case ErrorCode::conflict:
    case ErrorCode::precondition:
    case ErrorCode::unknown_state:
      status = 409;
      break;
    case ErrorCode::capacity: status = 422; break;
    case ErrorCode::internal: status = 500; break;
  }
  return {status,
          {{"version", kDocumentVersion},
           {"code", std::string(to_string(error.code()))},
           {"message", error.what()},
           {"path", error.path()}}};
}

GuidanceService::GuidanceService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.idle_threshold_ms <= 0) throw Error(ErrorCode::parameter, "idle threshold must be positive");
  if (!(config_.tau > 0.0 && config_.tau <= 1.0)) throw Error(ErrorCode::parameter, "tau must lie in (0, 1]");
  if (config_.n_exact < 1 || config_.n_exact > 24) throw Error(ErrorCode::parameter, "n_exact must lie in [1, 24]");
  if (!config_.fixture_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(config_.fixture_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) add_app(parse_json(read_file(file)), file.stem().string());
  }
}

GuidanceService::~GuidanceService() { stop(); }

std::string GuidanceService::add_app(const Json& document, std::optional<std::string> id) {
  App app;
  if (document.is_object() && document.contains("true_graph")) {
    const auto model = app_from_document(document);
    if (auto violations = validate_app(model); !violations.empty()) {
      throw Error(ErrorCode::validation, "invalid app fixture: " + violations.front().invariant + " " +
                                             violations.front().id,
                  violations.front().id);
    }
    app.graph = model.true_graph;
    app.summary = {{"kind", "app"}, {"activities", model.activities.size()}};
  } else {
    const auto graph = graph_from_document(document);
    if (auto violations = validate(graph); !violations.empty()) {
      throw Error(ErrorCode::validation, "invalid graph: " + violations.front().invariant + " " + violations.front().id,
                  violations.front().id);
    }
    auto signature = signature_merge(graph);
    auto context = context_merge(signature.graph, config_.tau);
    app.graph = std::move(context.graph);
    app.summary = {{"kind", "stg"},
                   {"signature_merge", merge_report_document(signature.report)},
                   {"context_merge", merge_report_document(context.report)}};
  }
  app.summary["states"] = app.graph.states.size();
  app.summary["actions"] = app.graph.actions.size();
  std::unique_lock lock(registry_mutex_);
  std::string app_id = id ? *id : "app-" + std::to_string(next_app_++);
  app.summary["app_id"] = app_id;
  apps_[app_id] = std::move(app);
  return app_id;
}

HttpResponse GuidanceService::handle(const std::string& method, const std::string& path, const std::string& body) {
  try {
    Json parsed = body.empty() ? Json(nullptr) : parse_json(body);
    return route(method, path, parsed);
  } catch (const Error& error) {
    return error_response(error);
  } catch (const std::exception& error) {
    return error_response(Error(ErrorCode::internal, error.what()));
  }
}

HttpResponse GuidanceService::route(const std::string& method, const std::string& path, const Json& body) {
  const auto parts = split_path(path);
  if (parts.size() == 1 && parts[0] == "apps" && method == "POST") return create_app(body);
  if (parts.size() == 3 && parts[0] == "apps" && parts[2] == "stg" && method == "GET") return get_stg(parts[1]);
  if (parts.size() == 1 && parts[0] == "sessions" && method == "POST") return create_session(body);
  if (parts.size() == 3 && parts[0] == "sessions") {
    const auto& id = parts[1];
    const auto& verb = parts[2];
    if (verb == "hint" && method == "GET") return session_hint(id);
    if (verb == "action" && method == "POST") return session_action(id, body);
    if (verb == "idle-tick" && method == "POST") return session_idle(id, body);
    if (verb == "metrics" && method == "GET") return session_metrics(id);
    if (verb == "events" && method == "GET") return session_events(id);
  }
  throw Error(ErrorCode::not_found, "no route for " + method + " " + path, path);
}

HttpResponse GuidanceService::create_app(const Json& body) {
  if (!body.is_object()) throw Error(ErrorCode::parse, "expected an app or graph document", "");
  const auto id = add_app(body);
  std::shared_lock lock(registry_mutex_);
  Json out = apps_.at(id).summary;
  out["version"] = kDocumentVersion;
  return {201, out};
}

HttpResponse GuidanceService::get_stg(const std::string& app_id) {
  std::shared_lock lock(registry_mutex_);
  auto it = apps_.find(app_id);
  if (it == apps_.end()) throw Error(ErrorCode::not_found, "unknown app " + app_id, app_id);
  Json out = display_document(it->second.graph);
  out["app_id"] = app_id;
  return {200, out};
}

std::shared_ptr<GuidanceService::Slot> GuidanceService::slot(const std::string& session_id) {
  std::shared_lock lock(registry_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session " + session_id, session_id);
  return it->second;
}

Json GuidanceService::session_view(const Session& session, const std::string& app_id) const {
  const auto* state = find_state(session.graph(), session.current());
  const auto hint = session.current_hint();
  std::vector<std::string> remaining(session.plan().node_order.begin() + static_cast<std::ptrdiff_t>(std::min(
                                         session.cursor(), session.plan().node_order.size())),
                                     session.plan().node_order.end());
  return {{"version", kDocumentVersion},
          {"session_id", session.id()},
          {"app_id", app_id},
          {"current", session.current()},
          {"screen", to_json(layout_state(*state))},
          {"hint", hint ? to_json(*hint) : Json(nullptr)},
          {"plan", plan_document(session.plan())},
          {"cursor", session.cursor()},
          {"remaining_route", remaining},
          {"visited", session.visit_counts()},
          {"coverage", to_json(session.metrics())}};
}

Millis GuidanceService::clock_ms(const Slot& slot, const Json& body) const {
  if (body.is_object()) {
    if (auto it = body.find("at_ms"); it != body.end()) {
      if (!it->is_number_integer()) throw Error(ErrorCode::validation, "at_ms must be an integer", "/at_ms");
      return it->get<Millis>();
    }
  }
  const auto elapsed = std::chrono::steady_clock::now() - slot.created;
  const Millis now = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
  return std::max(now, slot.session ? slot.session->last_event_time() : 0);
}

void GuidanceService::persist(Slot& slot) {
  if (config_.log_dir.empty() || !slot.session) return;
  const auto& session = *slot.session;
  const fs::path file = fs::path(config_.log_dir) / (session.id() + ".ndjson");
  std::ofstream out(file, std::ios::app);
  if (slot.persisted_events == 0 && fs::file_size(file) == 0) {
    Json header = {{"kind", "session"},
                   {"version", kDocumentVersion},
                   {"session_id", session.id()},
                   {"app_id", slot.app_id},
                   {"start_state", session.start_state()},
                   {"idle_threshold_ms", session.config().idle_threshold_ms},
                   {"n_exact", session.config().planner.exact_capacity},
                   {"graph", graph_body(session.initial_graph())}};
    out << header.dump() << '\n';
  }
  const auto& log = session.event_log();
  for (std::size_t i = slot.persisted_events; i < log.size(); ++i) out << to_json(log[i]).dump() << '\n';
  slot.persisted_events = log.size();
}

HttpResponse GuidanceService::create_session(const Json& raw) {
  const Json body = optional_object(raw);
  FieldReader reader(body, "", {"version", "app_id", "start_state", "idle_threshold_ms"});
  const auto app_id = reader.string("app_id");
  StgGraph graph;
  {
    std::shared_lock lock(registry_mutex_);
    auto it = apps_.find(app_id);
    if (it == apps_.end()) throw Error(ErrorCode::not_found, "unknown app " + app_id, "/app_id");
    graph = it->second.graph;
  }
  SessionConfig config;
  config.idle_threshold_ms = config_.idle_threshold_ms;
  config.planner.exact_capacity = config_.n_exact;
  if (reader.optional("idle_threshold_ms")) {
    config.idle_threshold_ms = static_cast<Millis>(reader.unsigned_integer("idle_threshold_ms"));
  }
  const auto start = reader.optional_string("start_state").value_or(graph.start_state);

  auto slot = std::make_shared<Slot>();
  slot->app_id = app_id;
  slot->created = std::chrono::steady_clock::now();
  std::string session_id;
  {
    std::unique_lock lock(registry_mutex_);
    session_id = "s-" + std::to_string(next_session_++);
  }
  slot->session = Session::start(session_id, std::move(graph), start, config);
  persist(*slot);
  Json view = session_view(*slot->session, app_id);
  {
    std::unique_lock lock(registry_mutex_);
    sessions_[session_id] = slot;
  }
  return {201, view};
}

HttpResponse GuidanceService::session_hint(const std::string& session_id) {
  auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  // A hint read is not tester activity; it is stamped at the last event so
  // that it never moves the idle clock and replays identically.
  const auto hint = s->session->serve_hint(s->session->last_event_time());
  persist(*s);
  return {200, {{"version", kDocumentVersion},
                {"session_id", session_id},
                {"current", s->session->current()},
                {"hint", hint ? to_json(*hint) : Json(nullptr)}}};
}

HttpResponse GuidanceService::session_action(const std::string& session_id, const Json& raw) {
  auto s = slot(session_id);
  const Json body = optional_object(raw);
  FieldReader reader(body, "", {"version", "action_id", "observed", "state", "edge", "at_ms"});
  std::lock_guard lock(s->mutex);
  auto& session = *s->session;
  const Millis at = clock_ms(*s, body);
  if (const auto* state = reader.optional("state")) {
    const auto* edge = reader.optional("edge");
    if (edge == nullptr) throw Error(ErrorCode::validation, "registering a state needs the inbound edge", "/edge");
    session.register_unknown_state(state_from_json(*state, "/state"), action_from_json(*edge, "/edge"), at);
  } else if (const auto* edge = reader.optional("edge")) {
    session.register_unknown_transition(action_from_json(*edge, "/edge"), at);
  } else {
    session.report_transition({reader.optional_string("action_id"), reader.optional_string("observed"), at});
  }
  persist(*s);
  return {200, session_view(session, s->app_id)};
}

HttpResponse GuidanceService::session_idle(const std::string& session_id, const Json& raw) {
  auto s = slot(session_id);
  const Json body = optional_object(raw);
  FieldReader reader(body, "", {"version", "at_ms"});
  std::lock_guard lock(s->mutex);
  const bool replanned = s->session->on_idle(clock_ms(*s, body));
  persist(*s);
  Json view = session_view(*s->session, s->app_id);
  view["replanned"] = replanned;
  return {200, view};
}

HttpResponse GuidanceService::session_metrics(const std::string& session_id) {
  auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  const auto& session = *s->session;
  return {200, {{"version", kDocumentVersion},
                {"session_id", session_id},
                {"metrics", to_json(session.metrics())},
                {"plan", plan_document(session.plan())},
                {"visited", session.visit_counts()}}};
}

HttpResponse GuidanceService::session_events(const std::string& session_id) {
  auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  Json events = Json::array();
  for (const auto& event : s->session->event_log()) events.push_back(to_json(event));
  return {200, {{"version", kDocumentVersion}, {"session_id", session_id}, {"events", std::move(events)}}};
}

std::size_t GuidanceService::restore_sessions() {
  if (config_.log_dir.empty() || !fs::exists(config_.log_dir)) return 0;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(config_.log_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ndjson") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t restored = 0;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    if (!std::getline(in, line)) continue;
    const auto header = parse_json(line);
    FieldReader reader(header, "", {"kind", "version", "session_id", "app_id", "start_state", "idle_threshold_ms",
                                    "n_exact", "graph"});
    SessionConfig config;
    config.idle_threshold_ms = static_cast<Millis>(reader.unsigned_integer("idle_threshold_ms"));
    config.planner.exact_capacity = reader.unsigned_integer("n_exact");
    const auto graph = graph_from_body(reader.required("graph"), "/graph");
    std::vector<TesterEvent> events;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (!line.empty()) events.push_back(event_from_json(parse_json(line), "line " + std::to_string(n + 1)));
    }
    auto slot = std::make_shared<Slot>();
    slot->app_id = reader.string("app_id");
    slot->created = std::chrono::steady_clock::now();
    const auto session_id = reader.string("session_id");
    slot->session = replay(session_id, graph, reader.string("start_state"), config, events);
    slot->persisted_events = slot->session->event_log().size();
    std::unique_lock lock(registry_mutex_);
    sessions_[session_id] = slot;
    if (session_id.rfind("s-", 0) == 0) {
      try {
        next_session_ = std::max<std::uint64_t>(next_session_, std::stoull(session_id.substr(2)) + 1);
      } catch (const std::exception&) {
      }
    }
    ++restored;
  }
  return restored;
}

void GuidanceService::bind(httplib::Server& server) {
  auto handler = [this](const httplib::Request& request, httplib::Response& response) {
    const auto result = handle(request.method, request.path, request.body);
    response.status = result.status;
    response.set_content(result.body.dump(), "application/json");
  };
  server.Post(R"(/apps)", handler);
  server.Get(R"(/apps/[^/]+/stg)", handler);
  server.Post(R"(/sessions)", handler);
  server.Get(R"(/sessions/[^/]+/(hint|metrics|events))", handler);
  server.Post(R"(/sessions/[^/]+/(action|idle-tick))", handler);
  server.set_error_handler([](const httplib::Request& request, httplib::Response& response) {
    if (!response.body.empty()) return;
    const auto body = error_response(Error(ErrorCode::not_found, "no route for " + request.method + " " + request.path,
                                           request.path));
    response.set_content(body.body.dump(), "application/json");
  });
}

bool GuidanceService::listen() {
  server_ = std::make_unique<httplib::Server>();
  bind(*server_);
  return server_->listen(config_.host, config_.port);
}

void GuidanceService::stop() {
  if (server_) server_->stop();
}

}  // namespace stgnav
