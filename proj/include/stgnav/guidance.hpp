#pragma once

// Live guidance session: tracks where the explorer is, serves the next hint
// move of the active plan, and replans on deviation, on idle, and when the
// explorer reaches a state the graph does not know yet.
//
// A session is a single-threaded event loop. Every input is appended to the
// event log, and replaying that log against a fresh session reproduces the
// final state exactly.

#include "stgnav/capture.hpp"
#include "stgnav/layout.hpp"
#include "stgnav/planner.hpp"
#include "stgnav/stg.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stgnav {

/// Milliseconds since session start.
using Millis = std::int64_t;

inline constexpr Millis kDefaultIdleThresholdMs = 5000;

struct Overlay {
  Rect bounds;
  std::string label;

  bool operator==(const Overlay&) const = default;
};

struct Hint {
  std::string action_id;
  Trigger trigger = Trigger::click;
  std::string component_ref;
  std::string target;
  Overlay overlay;

  bool operator==(const Hint&) const = default;
};

enum class EventKind { transition, idle_tick, hint_served, deviation, unknown_state };

std::string_view to_string(EventKind kind);

/// Payload fields used per kind:
///   transition    action_id (if known), state_id = observed state
///   idle_tick     state_id = current state
///   hint_served   action_id = hinted action (empty when none)
///   deviation     action_id = taken action, expected_action, state_id
///   unknown_state edge, plus state when the target is new
struct TesterEvent {
  EventKind kind = EventKind::transition;
  Millis at_ms = 0;
  std::optional<std::string> action_id;
  std::optional<std::string> state_id;
  std::optional<std::string> expected_action;
  std::optional<StateNode> state;
  std::optional<ActionEdge> edge;

  bool operator==(const TesterEvent&) const = default;
};

Json to_json(const TesterEvent& event);
TesterEvent event_from_json(const Json& json, const std::string& path = "");

struct SessionConfig {
  Millis idle_threshold_ms = kDefaultIdleThresholdMs;
  PlannerOptions planner;
  bool allow_unknown_states = true;
};

/// What the explorer did: the action taken, the state observed afterwards,
/// or both (they must agree).
struct TransitionReport {
  std::optional<std::string> action_id;
  std::optional<std::string> observed;
  Millis at_ms = 0;
};

struct SessionMetrics {
  std::uint64_t steps = 0;
  std::size_t states_visited = 0;
  std::size_t states_total = 0;
  std::size_t activities_visited = 0;
  std::size_t activities_total = 0;
  std::uint64_t repeated_visits = 0;
  std::uint64_t deviations = 0;
  std::uint64_t replans = 0;
  double state_coverage = 0.0;

  bool operator==(const SessionMetrics&) const = default;
};

Json to_json(const SessionMetrics& metrics);

class Session {
 public:
  /// Throws ErrorCode::not_found when `start` is not a state of `graph`.
  static Session start(std::string session_id, StgGraph graph, const std::string& start, SessionConfig config = {});

  const std::string& id() const { return id_; }
  const StgGraph& graph() const { return graph_; }
  const StgGraph& initial_graph() const { return initial_graph_; }
  const std::string& start_state() const { return start_; }
  const std::string& current() const { return current_; }
  const std::map<std::string, std::uint64_t>& visit_counts() const { return visits_; }
  std::set<std::string> visited() const;
  const Plan& plan() const { return plan_; }
  std::size_t cursor() const { return cursor_; }
  Millis last_event_time() const { return last_event_ms_; }
  const std::vector<TesterEvent>& event_log() const { return log_; }
  const SessionConfig& config() const { return config_; }
  const MetricClosure& closure() const { return *closure_; }

  /// Next planned action dressed with overlay metadata; none once the plan
  /// is exhausted.
  std::optional<Hint> current_hint() const;

  /// current_hint(), recorded in the event log.
  std::optional<Hint> serve_hint(Millis at_ms);

  /// Moves the explorer. Following the hint advances the cursor; any other
  /// move is a deviation and replans from the observed state.
  void report_transition(const TransitionReport& report);

  /// Replans from the current state when more than the idle threshold has
  /// passed since the last event. Returns whether it replanned.
  bool on_idle(Millis now_ms);

  /// Adds a state the graph did not know, reached from an existing state via
  /// `via`, moves the explorer there and replans.
  void register_unknown_state(StateNode observed, ActionEdge via, Millis at_ms);

  /// Adds an edge the graph did not know from the current state to a known
  /// state, moves the explorer along it and replans.
  void register_unknown_transition(ActionEdge via, Millis at_ms);

  SessionMetrics metrics() const;

  /// Unvisited states reachable from the current state.
  std::set<std::string> unvisited_reachable() const;

  /// Full observable state, for comparisons and persistence.
  Json snapshot() const;

 private:
  Session() = default;

  void check_time(Millis at_ms) const;
  void replan_from_current();
  void refresh_closure();
  void check_new_edge(const ActionEdge& via) const;
  void enter_via(ActionEdge via, Millis at_ms);

  std::string id_;
  StgGraph initial_graph_;
  StgGraph graph_;
  std::string start_;
  SessionConfig config_;
  std::shared_ptr<const MetricClosure> closure_;
  std::string current_;
  std::map<std::string, std::uint64_t> visits_;
  Plan plan_;
  std::size_t cursor_ = 0;
  Millis last_event_ms_ = 0;
  std::uint64_t steps_ = 0;
  std::uint64_t deviations_ = 0;
  std::uint64_t replans_ = 0;
  std::vector<TesterEvent> log_;
};

/// Builds the hint for `action` in `state`'s rendered layout.
Hint make_hint(const ActionEdge& action, const StateNode& state);

/// Fresh session fed with the input events of `events` (derived deviation
/// entries are regenerated rather than applied).
Session replay(std::string session_id, const StgGraph& initial_graph, const std::string& start,
               const SessionConfig& config, const std::vector<TesterEvent>& events);

Json to_json(const Hint& hint);

}  // namespace stgnav
