#pragma once

// Synthetic app fixtures and the two extraction passes over them: a static
// pass that reads activity-level declarations, and a seeded random-walk pass
// that records the states and transitions it observes.

#include "stgnav/capture.hpp"
#include "stgnav/stg.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stgnav {

struct ActivityDecl {
  std::string name;
  std::vector<std::string> declared_targets;
  /// Owned states; the first one is the activity's entry state.
  std::vector<std::string> states;

  bool operator==(const ActivityDecl&) const = default;
};

/// local_id -> replacement content.
using ContentAssignment = std::map<std::string, std::string>;

struct AppModel {
  std::vector<ActivityDecl> activities;
  std::string launch_activity;
  StgGraph true_graph;
  std::map<std::string, std::vector<ContentAssignment>> content_variants;

  bool operator==(const AppModel&) const = default;
};

struct AppParams {
  int n_activities = 3;
  int states_per_activity = 4;
  int branching = 2;
  double duplicate_rate = 0.0;
  std::uint64_t seed = 7;
};

struct TraceStep {
  std::string state_id;
  std::string action_id;
  std::string result_state_id;

  bool operator==(const TraceStep&) const = default;
};

struct ExplorationTrace {
  std::vector<TraceStep> steps;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;

  bool operator==(const ExplorationTrace&) const = default;
};

struct ExplorationResult {
  StgGraph graph;
  ExplorationTrace trace;
};

/// Separator between a ground-truth state id and its content-variant index
/// in ids recorded by dynamic exploration ("A0_S1~v2").
inline constexpr std::string_view kVariantMarker = "~v";

/// Ground-truth state id behind a (possibly variant) recorded id.
std::string base_state_id(std::string_view recorded_id);

AppModel generate_random_app(const AppParams& params);

const ActivityDecl* find_activity(const AppModel& app, std::string_view name);
std::string entry_state(const ActivityDecl& activity);

/// Structural checks on a fixture: graph validity, reachability from the
/// start state, declared targets, launch activity.
std::vector<Violation> validate_app(const AppModel& app);

StgGraph static_extract(const AppModel& app);

ExplorationResult dynamic_explore(const AppModel& app, std::uint64_t budget, std::uint64_t seed);

/// Union of two partial graphs sharing one state-id namespace. Throws
/// ErrorCode::conflict when the same state id carries different payloads.
StgGraph combine(const StgGraph& static_graph, const StgGraph& dynamic_graph);

Json app_document(const AppModel& app);
AppModel app_from_document(const Json& doc);
std::string save_app(const AppModel& app);
AppModel load_app(std::string_view bytes);

Json trace_to_json(const ExplorationTrace& trace);

}  // namespace stgnav
