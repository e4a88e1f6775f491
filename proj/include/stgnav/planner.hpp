#pragma once

// Coverage path planning over an STG. Every action costs one step. Shortest
// distances between all states come from a Floyd-Warshall closure; the order
// in which targets are visited is chosen by a bitmask dynamic program over
// that closure (open walk, free end node), with a clustered heuristic for
// target sets too large for the exact program.

#include "stgnav/capture.hpp"
#include "stgnav/stg.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stgnav {

using Cost = std::int64_t;
inline constexpr Cost kUnreachable = std::numeric_limits<Cost>::max() / 4;
inline constexpr std::size_t kDefaultExactCapacity = 16;

/// Saturating addition: anything plus kUnreachable stays kUnreachable.
inline Cost add_cost(Cost a, Cost b) { return (a >= kUnreachable || b >= kUnreachable) ? kUnreachable : a + b; }

/// Node indices follow the graph's states sorted by state_id.
class NodeIndex {
 public:
  explicit NodeIndex(const StgGraph& graph);

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t index) const { return ids_[index]; }
  std::optional<std::size_t> find(std::string_view id) const;
  std::size_t at(std::string_view id) const;

 private:
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct DistanceMatrix {
  NodeIndex nodes;
  std::vector<Cost> d;  // row-major |N| x |N|

  Cost at(std::size_t i, std::size_t j) const { return d[i * nodes.size() + j]; }
  bool reachable(std::size_t i, std::size_t j) const { return at(i, j) < kUnreachable; }
};

inline constexpr std::size_t kNoHop = std::numeric_limits<std::size_t>::max();

struct PredecessorMatrix {
  std::size_t n = 0;
  /// First node after i on a shortest i -> j path; kNoHop when unreachable
  /// or i == j.
  std::vector<std::size_t> next_hop;

  std::size_t at(std::size_t i, std::size_t j) const { return next_hop[i * n + j]; }
};

struct MetricClosure {
  DistanceMatrix dist;
  PredecessorMatrix pred;
};

/// Bit k set = target k already visited.
struct VisitMask {
  std::uint32_t bits = 0;

  bool contains(std::size_t k) const { return (bits >> k) & 1U; }
  VisitMask with(std::size_t k) const { return {bits | (1U << k)}; }
  VisitMask without(std::size_t k) const { return {bits & ~(1U << k)}; }
  int count() const { return __builtin_popcount(bits); }
  static VisitMask full(std::size_t n) { return {n >= 32 ? ~0U : (1U << n) - 1U}; }

  bool operator==(const VisitMask&) const = default;
};

struct Plan {
  /// Every state the walk passes through, starting with the start state
  /// (size total_cost + 1).
  std::vector<std::string> node_order;
  /// Targets in the order the plan first reaches them (start excluded).
  std::vector<std::string> targets;
  std::vector<std::string> actions;
  Cost total_cost = 0;
  /// Targets the walk cannot reach from the start.
  std::set<std::string> uncovered;

  bool operator==(const Plan&) const = default;
};

struct PlannerOptions {
  std::size_t exact_capacity = kDefaultExactCapacity;
};

MetricClosure metric_closure(const StgGraph& graph);

/// Exact minimum-step walk from `start` visiting every reachable target.
/// Throws ErrorCode::not_found for an unknown start and ErrorCode::capacity
/// when more than `exact_capacity` reachable targets remain.
Plan plan_coverage_path(const StgGraph& graph, const std::string& start, const std::set<std::string>& targets,
                        const PlannerOptions& options = {});
Plan plan_coverage_path(const StgGraph& graph, const MetricClosure& closure, const std::string& start,
                        const std::set<std::string>& targets, const PlannerOptions& options = {});

/// Expands a sequence of nodes (consecutive entries mutually reachable) into
/// concrete action ids along closure shortest paths. Among parallel edges the
/// smallest action id is used.
std::vector<std::string> expand_plan(const std::vector<std::string>& node_order, const MetricClosure& closure,
                                     const StgGraph& graph);

/// Walk through every state of a node sequence expansion (inclusive).
std::vector<std::size_t> expand_nodes(const std::vector<std::size_t>& order, const PredecessorMatrix& pred);

/// Plan from `current` over all states not in `visited`; routed to
/// plan_scalable when the exact planner is over capacity.
Plan replan(const StgGraph& graph, const std::string& current, const std::set<std::string>& visited,
            const PlannerOptions& options = {});
Plan replan(const StgGraph& graph, const MetricClosure& closure, const std::string& current,
            const std::set<std::string>& visited, const PlannerOptions& options = {});

/// Activity-clustered planner for large target sets. Never worse than
/// nearest-neighbour over all targets.
Plan plan_scalable(const StgGraph& graph, const std::string& start, const std::set<std::string>& targets,
                   const PlannerOptions& options = {});
Plan plan_scalable(const StgGraph& graph, const MetricClosure& closure, const std::string& start,
                   const std::set<std::string>& targets, const PlannerOptions& options = {});

/// Nearest-neighbour visiting order (ties to the smallest index) over the
/// closure; the baseline the scalable planner must match or beat.
Plan plan_nearest_neighbor(const StgGraph& graph, const MetricClosure& closure, const std::string& start,
                           const std::set<std::string>& targets);

/// Improves an open visiting order with fixed start by 2-opt segment
/// reversals on the (directed) closure distances. Returns the order cost.
Cost two_opt(std::vector<std::size_t>& order, std::size_t start, const DistanceMatrix& dist);

Json plan_document(const Plan& plan);
Plan plan_from_document(const Json& doc);

}  // namespace stgnav
