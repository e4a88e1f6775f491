#include "stgnav/guidance.hpp"

#include "stgnav/error.hpp"

#include <algorithm>
#include <deque>

namespace stgnav {
namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 5> kEventNames{{
    {EventKind::transition, "transition"},
    {EventKind::idle_tick, "idle_tick"},
    {EventKind::hint_served, "hint_served"},
    {EventKind::deviation, "deviation"},
    {EventKind::unknown_state, "unknown_state"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return name;
  }
  return "?";
}

Json to_json(const TesterEvent& event) {
  Json out = {{"kind", std::string(to_string(event.kind))}, {"at_ms", event.at_ms}};
  if (event.action_id) out["action_id"] = *event.action_id;
  if (event.state_id) out["state_id"] = *event.state_id;
  if (event.expected_action) out["expected_action"] = *event.expected_action;
  if (event.state) out["state"] = to_json(*event.state);
  if (event.edge) out["edge"] = to_json(*event.edge);
  return out;
}

TesterEvent event_from_json(const Json& json, const std::string& path) {
  FieldReader reader(json, path, {"kind", "at_ms", "action_id", "state_id", "expected_action", "state", "edge"});
  TesterEvent event;
  const auto kind = reader.string("kind");
  const auto it = std::find_if(kEventNames.begin(), kEventNames.end(),
                               [&](const auto& entry) { return entry.second == kind; });
  if (it == kEventNames.end()) throw_field_error(reader.path_of("kind"), "unknown event kind");
  event.kind = it->first;
  const auto& at = reader.required("at_ms");
  if (!at.is_number_integer()) throw_field_error(reader.path_of("at_ms"), "expected an integer");
  event.at_ms = at.get<Millis>();
  event.action_id = reader.optional_string("action_id");
  event.state_id = reader.optional_string("state_id");
  event.expected_action = reader.optional_string("expected_action");
  if (const auto* state = reader.optional("state")) event.state = state_from_json(*state, reader.path_of("state"));
  if (const auto* edge = reader.optional("edge")) event.edge = action_from_json(*edge, reader.path_of("edge"));
  return event;
}

Json to_json(const SessionMetrics& m) {
  return {{"steps", m.steps},
          {"states_visited", m.states_visited},
          {"states_total", m.states_total},
          {"activities_visited", m.activities_visited},
          {"activities_total", m.activities_total},
          {"repeated_visits", m.repeated_visits},
          {"deviations", m.deviations},
          {"replans", m.replans},
          {"state_coverage", m.state_coverage}};
}

Json to_json(const Hint& hint) {
  return {{"action_id", hint.action_id},
          {"trigger", std::string(to_string(hint.trigger))},
          {"component_ref", hint.component_ref},
          {"target", hint.target},
          {"overlay", {{"bounds", to_json(hint.overlay.bounds)}, {"label", hint.overlay.label}}}};
}

Hint make_hint(const ActionEdge& action, const StateNode& state) {
  const auto layout = layout_state(state);
  Hint hint{action.action_id, action.trigger, action.component_ref, action.target, {}};
  const auto* component = layout.find(action.component_ref);
  switch (action.trigger) {
    case Trigger::click:
      hint.overlay.label = "click";
      break;
    case Trigger::back:
      hint.overlay.label = "back";
      break;
    case Trigger::long_press:
      hint.overlay.label = "long press";
      break;
  }
  if (action.trigger == Trigger::back && (action.component_ref == kTouchBack || component == nullptr)) {
    hint.overlay.bounds = layout.back_key;
  } else if (component != nullptr) {
    hint.overlay.bounds = component->bounds;
  } else {
    hint.overlay.bounds = layout.viewport;
  }
  return hint;
}

Session Session::start(std::string session_id, StgGraph graph, const std::string& start, SessionConfig config) {
  if (find_state(graph, start) == nullptr) {
    throw Error(ErrorCode::not_found, "unknown start state " + start, start);
  }
  if (config.idle_threshold_ms <= 0) throw Error(ErrorCode::parameter, "idle threshold must be positive");
  Session session;
  session.id_ = std::move(session_id);
  session.initial_graph_ = graph;
  session.graph_ = std::move(graph);
  session.start_ = start;
  session.config_ = config;
  session.current_ = start;
  session.visits_[start] = 1;
  session.refresh_closure();
  session.plan_ = stgnav::replan(session.graph_, *session.closure_, start, session.visited(), config.planner);
  return session;
}

std::set<std::string> Session::visited() const {
  std::set<std::string> out;
  for (const auto& [id, count] : visits_) {
    if (count > 0) out.insert(id);
  }
  return out;
}

void Session::refresh_closure() { closure_ = std::make_shared<const MetricClosure>(metric_closure(graph_)); }

void Session::replan_from_current() {
  plan_ = stgnav::replan(graph_, *closure_, current_, visited(), config_.planner);
  cursor_ = 0;
  ++replans_;
}

void Session::check_time(Millis at_ms) const {
  if (at_ms < last_event_ms_) {
    throw Error(ErrorCode::validation,
                "event time " + std::to_string(at_ms) + " precedes the last event at " + std::to_string(last_event_ms_),
                "at_ms");
  }
}

std::optional<Hint> Session::current_hint() const {
  if (cursor_ >= plan_.actions.size()) return std::nullopt;
  const auto* action = find_action(graph_, plan_.actions[cursor_]);
  const auto* state = find_state(graph_, current_);
  if (action == nullptr || state == nullptr || action->source != current_) {
    throw Error(ErrorCode::internal, "active plan does not continue from the current state", current_);
  }
  return make_hint(*action, *state);
}

std::optional<Hint> Session::serve_hint(Millis at_ms) {
  check_time(at_ms);
  auto hint = current_hint();
  TesterEvent event{EventKind::hint_served, at_ms, {}, current_, {}, {}, {}};
  event.action_id = hint ? hint->action_id : std::string();
  log_.push_back(std::move(event));
  return hint;
}

void Session::report_transition(const TransitionReport& report) {
  check_time(report.at_ms);
  std::string observed;
  if (report.action_id) {
    const auto* action = find_action(graph_, *report.action_id);
    if (action == nullptr || action->source != current_) {
      throw Error(ErrorCode::validation,
                  "action " + *report.action_id + " is not an outgoing action of state " + current_, "action_id");
    }
    if (report.observed && *report.observed != action->target) {
      throw Error(ErrorCode::validation,
                  "observed state " + *report.observed + " disagrees with the target of " + *report.action_id,
                  "observed");
    }
    observed = action->target;
  } else if (report.observed) {
    observed = *report.observed;
    if (find_state(graph_, observed) == nullptr) {
      throw Error(ErrorCode::unknown_state,
                  "state " + observed + " is not in the graph" +
                      (config_.allow_unknown_states ? "; register it first" : ""),
                  observed);
    }
  } else {
    throw Error(ErrorCode::validation, "a transition needs an action_id or an observed state", "action_id");
  }

  const auto hint = current_hint();
  const bool followed = hint && (report.action_id ? *report.action_id == hint->action_id : observed == hint->target);

  current_ = observed;
  ++visits_[observed];
  ++steps_;
  last_event_ms_ = report.at_ms;
  log_.push_back({EventKind::transition, report.at_ms, report.action_id, observed, {}, {}, {}});

  if (followed) {
    ++cursor_;
    return;
  }
  if (hint) {
    ++deviations_;
    log_.push_back({EventKind::deviation, report.at_ms, report.action_id, observed, hint->action_id, {}, {}});
  }
  replan_from_current();
}

bool Session::on_idle(Millis now_ms) {
  if (now_ms - last_event_ms_ <= config_.idle_threshold_ms) return false;
  replan_from_current();
  last_event_ms_ = now_ms;
  log_.push_back({EventKind::idle_tick, now_ms, {}, current_, {}, {}, {}});
  return true;
}

void Session::check_new_edge(const ActionEdge& via) const {
  const auto* source = find_state(graph_, via.source);
  if (source == nullptr) throw Error(ErrorCode::validation, "edge source " + via.source + " is not in the graph", "edge/source");
  const bool touch_back = via.trigger == Trigger::back && via.component_ref == kTouchBack;
  if (!touch_back && find_component(source->root, via.component_ref) == nullptr) {
    throw Error(ErrorCode::validation, "edge component " + via.component_ref + " is not in " + via.source,
                "edge/component_ref");
  }
  if (via.action_id.empty()) throw Error(ErrorCode::validation, "edge needs an action id", "edge/action_id");
  if (find_action(graph_, via.action_id) != nullptr) {
    throw Error(ErrorCode::validation, "action id " + via.action_id + " already exists", "edge/action_id");
  }
}

void Session::enter_via(ActionEdge via, Millis at_ms) {
  via.provenance = Provenance::manual;
  const auto target = via.target;
  insert_action(graph_, std::move(via));
  refresh_closure();
  current_ = target;
  ++visits_[target];
  ++steps_;
  last_event_ms_ = at_ms;
  replan_from_current();
}

void Session::register_unknown_state(StateNode observed, ActionEdge via, Millis at_ms) {
  if (!config_.allow_unknown_states) {
    throw Error(ErrorCode::unknown_state, "unknown-state registration is disabled", observed.state_id);
  }
  check_time(at_ms);
  if (find_state(graph_, observed.state_id) != nullptr) {
    throw Error(ErrorCode::precondition, "state " + observed.state_id + " is already in the graph", observed.state_id);
  }
  if (auto violations = validate_state(observed); !violations.empty()) {
    throw Error(ErrorCode::validation,
                "malformed state: " + violations.front().invariant + " " + violations.front().detail, "state");
  }
  if (via.target != observed.state_id) {
    throw Error(ErrorCode::validation, "edge target must be the registered state", "edge/target");
  }
  check_new_edge(via);
  via.provenance = Provenance::manual;
  observed.visit_count = 0;

  log_.push_back({EventKind::unknown_state, at_ms, {}, observed.state_id, {}, observed, via});
  graph_.states.push_back(std::move(observed));
  enter_via(std::move(via), at_ms);
}

void Session::register_unknown_transition(ActionEdge via, Millis at_ms) {
  if (!config_.allow_unknown_states) {
    throw Error(ErrorCode::unknown_state, "unknown-transition registration is disabled", via.action_id);
  }
  check_time(at_ms);
  if (via.source != current_) {
    throw Error(ErrorCode::validation, "edge source must be the current state " + current_, "edge/source");
  }
  if (find_state(graph_, via.target) == nullptr) {
    throw Error(ErrorCode::unknown_state, "edge target " + via.target + " is not in the graph", "edge/target");
  }
  check_new_edge(via);
  for (const auto& edge : graph_.actions) {
    if (edge.source == via.source && edge.target == via.target && edge.trigger == via.trigger &&
        edge.component_ref == via.component_ref) {
      throw Error(ErrorCode::precondition, "transition already exists as " + edge.action_id, "edge");
    }
  }
  via.provenance = Provenance::manual;
  log_.push_back({EventKind::unknown_state, at_ms, {}, via.target, {}, std::nullopt, via});
  enter_via(std::move(via), at_ms);
}

std::set<std::string> Session::unvisited_reachable() const {
  std::set<std::string> out;
  const auto& nodes = closure_->dist.nodes;
  const auto from = nodes.at(current_);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const auto& id = nodes.id(j);
    if (closure_->dist.reachable(from, j) && !visits_.contains(id)) out.insert(id);
  }
  return out;
}

SessionMetrics Session::metrics() const {
  SessionMetrics m;
  m.steps = steps_;
  m.states_total = graph_.states.size();
  std::set<std::string> activities_all;
  std::set<std::string> activities_seen;
  for (const auto& state : graph_.states) {
    activities_all.insert(state.activity);
    auto it = visits_.find(state.state_id);
    if (it != visits_.end() && it->second > 0) {
      ++m.states_visited;
      activities_seen.insert(state.activity);
      m.repeated_visits += it->second - 1;
    }
  }
  m.activities_total = activities_all.size();
  m.activities_visited = activities_seen.size();
  m.deviations = deviations_;
  m.replans = replans_;
  m.state_coverage =
      m.states_total == 0 ? 0.0 : static_cast<double>(m.states_visited) / static_cast<double>(m.states_total);
  return m;
}

Json Session::snapshot() const {
  Json events = Json::array();
  for (const auto& event : log_) events.push_back(to_json(event));
  const auto hint = current_hint();
  return {{"version", kDocumentVersion},
          {"session_id", id_},
          {"start_state", start_},
          {"current", current_},
          {"visits", visits_},
          {"plan", plan_document(plan_)},
          {"cursor", cursor_},
          {"last_event_ms", last_event_ms_},
          {"hint", hint ? to_json(*hint) : Json(nullptr)},
          {"metrics", to_json(metrics())},
          {"graph", graph_body(graph_)},
          {"events", std::move(events)}};
}

Session replay(std::string session_id, const StgGraph& initial_graph, const std::string& start,
               const SessionConfig& config, const std::vector<TesterEvent>& events) {
  auto session = Session::start(std::move(session_id), initial_graph, start, config);
  for (const auto& event : events) {
    switch (event.kind) {
      case EventKind::transition:
        session.report_transition({event.action_id, event.state_id, event.at_ms});
        break;
      case EventKind::idle_tick:
        session.on_idle(event.at_ms);
        break;
      case EventKind::hint_served:
        session.serve_hint(event.at_ms);
        break;
      case EventKind::unknown_state:
        if (!event.edge) throw Error(ErrorCode::parse, "unknown_state event without an edge payload", "edge");
        if (event.state) {
          session.register_unknown_state(*event.state, *event.edge, event.at_ms);
        } else {
          session.register_unknown_transition(*event.edge, event.at_ms);
        }
        break;
      case EventKind::deviation:
        break;
    }
  }
  return session;
}

}  // namespace stgnav
