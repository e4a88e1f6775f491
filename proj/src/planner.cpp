#include "stgnav/planner.hpp"

#include "stgnav/error.hpp"

#include <algorithm>
#include <tuple>

namespace stgnav {

NodeIndex::NodeIndex(const StgGraph& graph) {
  for (const auto& state : graph.states) ids_.push_back(state.state_id);
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

std::optional<std::size_t> NodeIndex::find(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t NodeIndex::at(std::string_view id) const {
  auto found = find(id);
  if (!found) throw Error(ErrorCode::not_found, "unknown state " + std::string(id), std::string(id));
  return *found;
}

MetricClosure metric_closure(const StgGraph& graph) {
  MetricClosure out{DistanceMatrix{NodeIndex(graph), {}}, PredecessorMatrix{}};
  const std::size_t n = out.dist.nodes.size();
  auto& d = out.dist.d;
  auto& next = out.pred.next_hop;
  out.pred.n = n;
  d.assign(n * n, kUnreachable);
  next.assign(n * n, kNoHop);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0;
  for (const auto& edge : graph.actions) {
    const auto s = out.dist.nodes.find(edge.source);
    const auto t = out.dist.nodes.find(edge.target);
    if (!s || !t || *s == *t) continue;
    d[*s * n + *t] = 1;
    next[*s * n + *t] = *t;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const Cost dik = d[i * n + k];
      if (dik >= kUnreachable) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const Cost candidate = add_cost(dik, d[k * n + j]);
        if (candidate < d[i * n + j]) {
          d[i * n + j] = candidate;
          next[i * n + j] = next[i * n + k];
        }
      }
    }
  }
  return out;
}

std::vector<std::size_t> expand_nodes(const std::vector<std::size_t>& order, const PredecessorMatrix& pred) {
  std::vector<std::size_t> walk;
  if (order.empty()) return walk;
  walk.push_back(order.front());
  for (std::size_t k = 1; k < order.size(); ++k) {
    std::size_t at = walk.back();
    const std::size_t goal = order[k];
    std::size_t guard = 0;
    while (at != goal) {
      const std::size_t hop = pred.at(at, goal);
      if (hop == kNoHop || ++guard > pred.n) {
        throw Error(ErrorCode::internal, "closure has no path between consecutive plan nodes");
      }
      walk.push_back(hop);
      at = hop;
    }
  }
  return walk;
}

std::vector<std::string> expand_plan(const std::vector<std::string>& node_order, const MetricClosure& closure,
                                     const StgGraph& graph) {
  const auto& nodes = closure.dist.nodes;
  std::map<std::pair<std::size_t, std::size_t>, const std::string*> edge_of;
  for (const auto& edge : graph.actions) {
    const auto s = nodes.find(edge.source);
    const auto t = nodes.find(edge.target);
    if (!s || !t) continue;
    auto [it, inserted] = edge_of.try_emplace({*s, *t}, &edge.action_id);
    if (!inserted && edge.action_id < *it->second) it->second = &edge.action_id;
  }
  std::vector<std::size_t> order;
  order.reserve(node_order.size());
  for (const auto& id : node_order) {
    const auto index = nodes.find(id);
    if (!index) throw Error(ErrorCode::internal, "plan node " + id + " is not in the closure", id);
    order.push_back(*index);
  }
  const auto walk = expand_nodes(order, closure.pred);
  std::vector<std::string> actions;
  for (std::size_t k = 1; k < walk.size(); ++k) {
    auto it = edge_of.find({walk[k - 1], walk[k]});
    if (it == edge_of.end()) {
      throw Error(ErrorCode::internal,
                  "no action realizes closure hop " + nodes.id(walk[k - 1]) + " -> " + nodes.id(walk[k]));
    }
    actions.push_back(*it->second);
  }
  return actions;
}

namespace {

Cost order_cost(std::size_t start, const std::vector<std::size_t>& order, const DistanceMatrix& dist) {
  Cost total = 0;
  std::size_t at = start;
  for (auto next : order) {
    total = add_cost(total, dist.at(at, next));
    at = next;
  }
  return total;
}

struct Targets {
  std::vector<std::size_t> reachable;  // ascending node index, start excluded
  std::set<std::string> uncovered;
};

Targets classify_targets(const MetricClosure& closure, std::size_t start, const std::set<std::string>& targets) {
  Targets out;
  for (const auto& id : targets) {
    const auto index = closure.dist.nodes.find(id);
    if (!index) throw Error(ErrorCode::not_found, "unknown target state " + id, id);
    if (*index == start) continue;
    if (closure.dist.reachable(start, *index)) {
      out.reachable.push_back(*index);
    } else {
      out.uncovered.insert(id);
    }
  }
  std::sort(out.reachable.begin(), out.reachable.end());
  return out;
}

struct OrderResult {
  std::vector<std::size_t> order;
  std::vector<std::size_t> missed;
};

// Held-Karp over closure distances: DP[V][j] is the cheapest walk from
// `start` that visits exactly the targets in V and ends at target j.
OrderResult exact_order(const DistanceMatrix& dist, std::size_t start, const std::vector<std::size_t>& targets) {
  const std::size_t m = targets.size();
  OrderResult out;
  if (m == 0) return out;
  const std::size_t states = std::size_t{1} << m;
  std::vector<Cost> local(m * m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) local[j * m + k] = dist.at(targets[j], targets[k]);
  }
  std::vector<Cost> dp(states * m, kUnreachable);
  auto cell = [m](std::uint32_t mask, std::size_t j) { return static_cast<std::size_t>(mask) * m + j; };
  for (std::size_t j = 0; j < m; ++j) dp[cell(VisitMask{}.with(j).bits, j)] = dist.at(start, targets[j]);
  const std::uint32_t all = VisitMask::full(m).bits;
  for (std::uint32_t mask = 1; mask < states; ++mask) {
    const Cost* row = &dp[cell(mask, 0)];
    for (std::uint32_t js = mask; js != 0; js &= js - 1) {
      const auto j = static_cast<std::size_t>(__builtin_ctz(js));
      const Cost here = row[j];
      if (here >= kUnreachable) continue;
      const Cost* from_j = &local[j * m];
      for (std::uint32_t ks = all & ~mask; ks != 0; ks &= ks - 1) {
        const auto k = static_cast<std::size_t>(__builtin_ctz(ks));
        if (from_j[k] >= kUnreachable) continue;
        const Cost candidate = here + from_j[k];
        Cost& slot = dp[cell(mask | (1U << k), k)];
        if (candidate < slot) slot = candidate;
      }
    }
  }

  // Most targets covered, then cheapest.
  Cost best_cost = kUnreachable;
  int best_count = 0;
  for (std::uint32_t mask = 1; mask < states; ++mask) {
    const int count = __builtin_popcount(mask);
    if (count < best_count) continue;
    const Cost* row = &dp[cell(mask, 0)];
    for (std::uint32_t js = mask; js != 0; js &= js - 1) {
      const Cost c = row[__builtin_ctz(js)];
      if (c >= kUnreachable) continue;
      if (count > best_count || c < best_cost) {
        best_cost = c;
        best_count = count;
      }
    }
  }

  // rest[V][i]: cheapest way to reach best_count targets from i having
  // visited V. Walking forward and always taking the smallest target that
  // stays on an optimal walk yields the lexicographically smallest order.
  std::vector<Cost> rest(states * m, kUnreachable);
  for (std::uint32_t mask = static_cast<std::uint32_t>(states - 1); mask > 0; --mask) {
    const int count = __builtin_popcount(mask);
    if (count > best_count) continue;
    for (std::uint32_t is = mask; is != 0; is &= is - 1) {
      const auto i = static_cast<std::size_t>(__builtin_ctz(is));
      if (count == best_count) {
        rest[cell(mask, i)] = 0;
        continue;
      }
      const Cost* from_i = &local[i * m];
      Cost best = kUnreachable;
      for (std::uint32_t ks = all & ~mask; ks != 0; ks &= ks - 1) {
        const auto k = static_cast<std::size_t>(__builtin_ctz(ks));
        best = std::min(best, add_cost(from_i[k], rest[cell(mask | (1U << k), k)]));
      }
      rest[cell(mask, i)] = best;
    }
  }

  VisitMask visited{};
  std::size_t at_node = start;
  Cost spent = 0;
  while (visited.count() < best_count) {
    bool advanced = false;
    for (std::size_t k = 0; k < m; ++k) {
      if (visited.contains(k)) continue;
      const VisitMask next = visited.with(k);
      const Cost step = dist.at(at_node, targets[k]);
      if (add_cost(add_cost(spent, step), rest[cell(next.bits, k)]) == best_cost) {
        out.order.push_back(targets[k]);
        spent += step;
        visited = next;
        at_node = targets[k];
        advanced = true;
        break;
      }
    }
    if (!advanced) throw Error(ErrorCode::internal, "coverage order reconstruction failed");
  }
  const VisitMask best_mask = visited;
  for (std::size_t j = 0; j < m; ++j) {
    if (!best_mask.contains(j)) out.missed.push_back(targets[j]);
  }
  return out;
}

// Greedy nearest target (ties to the smallest index); targets passed on the
// way count as visited.
OrderResult nearest_neighbor_order(const MetricClosure& closure, std::size_t start,
                                   const std::vector<std::size_t>& targets) {
  OrderResult out;
  std::set<std::size_t> remaining(targets.begin(), targets.end());
  std::size_t at = start;
  while (!remaining.empty()) {
    std::size_t best = kNoHop;
    Cost best_d = kUnreachable;
    for (auto t : remaining) {
      const Cost d = closure.dist.at(at, t);
      if (d < best_d) {
        best_d = d;
        best = t;
      }
    }
    if (best == kNoHop) break;
    for (auto node : expand_nodes({at, best}, closure.pred)) {
      if (remaining.erase(node) > 0) out.order.push_back(node);
    }
    at = best;
  }
  out.missed.assign(remaining.begin(), remaining.end());
  return out;
}

Plan build_plan(const StgGraph& graph, const MetricClosure& closure, std::size_t start,
                const std::vector<std::size_t>& order, const std::set<std::size_t>& target_set,
                std::set<std::string> uncovered) {
  const auto& nodes = closure.dist.nodes;
  std::vector<std::size_t> sequence{start};
  sequence.insert(sequence.end(), order.begin(), order.end());
  const auto walk = expand_nodes(sequence, closure.pred);

  Plan plan;
  std::set<std::size_t> reached{start};
  for (auto node : walk) {
    plan.node_order.push_back(nodes.id(node));
    if (target_set.contains(node) && reached.insert(node).second) plan.targets.push_back(nodes.id(node));
  }
  std::vector<std::string> ids;
  ids.reserve(sequence.size());
  for (auto node : sequence) ids.push_back(nodes.id(node));
  plan.actions = expand_plan(ids, closure, graph);
  plan.total_cost = static_cast<Cost>(plan.actions.size());
  if (plan.total_cost != order_cost(start, order, closure.dist)) {
    throw Error(ErrorCode::internal, "expanded plan length disagrees with closure distances");
  }
  plan.uncovered = std::move(uncovered);
  return plan;
}

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

Cost two_opt(std::vector<std::size_t>& order, std::size_t start, const DistanceMatrix& dist) {
  const std::size_t m = order.size();
  Cost best = order_cost(start, order, dist);
  if (m < 2) return best;
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i + 1 < m && !improved; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        std::reverse(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        const Cost candidate = order_cost(start, order, dist);
        if (candidate < best) {
          best = candidate;
          improved = true;
          break;
        }
        std::reverse(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(j) + 1);
      }
    }
  }
  return best;
}

Plan plan_coverage_path(const StgGraph& graph, const std::string& start, const std::set<std::string>& targets,
                        const PlannerOptions& options) {
  return plan_coverage_path(graph, metric_closure(graph), start, targets, options);
}

Plan plan_coverage_path(const StgGraph& graph, const MetricClosure& closure, const std::string& start,
                        const std::set<std::string>& targets, const PlannerOptions& options) {
  const auto start_index = closure.dist.nodes.at(start);
  auto classified = classify_targets(closure, start_index, targets);
  if (classified.reachable.size() > options.exact_capacity) {
    throw Error(ErrorCode::capacity,
                std::to_string(classified.reachable.size()) + " reachable targets exceed the exact planner capacity of " +
                    std::to_string(options.exact_capacity) + "; use plan_scalable",
                start);
  }
  auto result = exact_order(closure.dist, start_index, classified.reachable);
  for (auto missed : result.missed) classified.uncovered.insert(closure.dist.nodes.id(missed));
  return build_plan(graph, closure, start_index, result.order, as_set(classified.reachable),
                    std::move(classified.uncovered));
}

Plan plan_nearest_neighbor(const StgGraph& graph, const MetricClosure& closure, const std::string& start,
                           const std::set<std::string>& targets) {
  const auto start_index = closure.dist.nodes.at(start);
  auto classified = classify_targets(closure, start_index, targets);
  auto result = nearest_neighbor_order(closure, start_index, classified.reachable);
  for (auto missed : result.missed) classified.uncovered.insert(closure.dist.nodes.id(missed));
  return build_plan(graph, closure, start_index, result.order, as_set(classified.reachable),
                    std::move(classified.uncovered));
}

Plan plan_scalable(const StgGraph& graph, const std::string& start, const std::set<std::string>& targets,
                   const PlannerOptions& options) {
  return plan_scalable(graph, metric_closure(graph), start, targets, options);
}

Plan plan_scalable(const StgGraph& graph, const MetricClosure& closure, const std::string& start,
                   const std::set<std::string>& targets, const PlannerOptions& options) {
  const auto start_index = closure.dist.nodes.at(start);
  auto classified = classify_targets(closure, start_index, targets);
  if (classified.reachable.size() <= options.exact_capacity) {
    return plan_coverage_path(graph, closure, start, targets, options);
  }
  const auto& nodes = closure.dist.nodes;
  const GraphIndex index(graph);
  auto activity_of = [&](std::size_t node) -> const std::string& { return index.state(nodes.id(node))->activity; };

  // Clustered candidate: repeatedly enter the activity holding the nearest
  // remaining target and cover that activity before moving on.
  std::set<std::size_t> remaining(classified.reachable.begin(), classified.reachable.end());
  std::vector<std::size_t> clustered;
  std::size_t at = start_index;
  while (!remaining.empty()) {
    std::map<std::string, std::vector<std::size_t>> clusters;
    for (auto t : remaining) clusters[activity_of(t)].push_back(t);
    const std::vector<std::size_t>* chosen = nullptr;
    Cost chosen_d = kUnreachable;
    for (const auto& [_, members] : clusters) {
      Cost nearest = kUnreachable;
      for (auto t : members) nearest = std::min(nearest, closure.dist.at(at, t));
      if (nearest < chosen_d) {
        chosen_d = nearest;
        chosen = &members;
      }
    }
    if (chosen == nullptr) break;
    std::vector<std::size_t> part;
    if (chosen->size() <= options.exact_capacity) {
      part = exact_order(closure.dist, at, *chosen).order;
    } else {
      part = nearest_neighbor_order(closure, at, *chosen).order;
      two_opt(part, at, closure.dist);
    }
    if (part.empty()) break;
    std::vector<std::size_t> segment{at};
    segment.insert(segment.end(), part.begin(), part.end());
    for (auto node : expand_nodes(segment, closure.pred)) {
      if (remaining.erase(node) > 0) clustered.push_back(node);
    }
    at = part.back();
  }
  std::set<std::string> clustered_uncovered = classified.uncovered;
  for (auto t : remaining) clustered_uncovered.insert(nodes.id(t));

  const auto target_set = as_set(classified.reachable);
  Plan best = build_plan(graph, closure, start_index, clustered, target_set, std::move(clustered_uncovered));

  // Global nearest-neighbour order, 2-opt improved; taken only if strictly better.
  auto global = nearest_neighbor_order(closure, start_index, classified.reachable);
  two_opt(global.order, start_index, closure.dist);
  std::set<std::string> global_uncovered = classified.uncovered;
  for (auto t : global.missed) global_uncovered.insert(nodes.id(t));
  Plan alternative = build_plan(graph, closure, start_index, global.order, target_set, std::move(global_uncovered));
  if (std::make_pair(alternative.uncovered.size(), alternative.total_cost) <
      std::make_pair(best.uncovered.size(), best.total_cost)) {
    return alternative;
  }
  return best;
}

Plan replan(const StgGraph& graph, const std::string& current, const std::set<std::string>& visited,
            const PlannerOptions& options) {
  return replan(graph, metric_closure(graph), current, visited, options);
}

Plan replan(const StgGraph& graph, const MetricClosure& closure, const std::string& current,
            const std::set<std::string>& visited, const PlannerOptions& options) {
  std::set<std::string> targets;
  for (const auto& state : graph.states) {
    if (!visited.contains(state.state_id) && state.state_id != current) targets.insert(state.state_id);
  }
  return plan_scalable(graph, closure, current, targets, options);
}

Json plan_document(const Plan& plan) {
  return {{"version", kDocumentVersion},
          {"node_order", plan.node_order},
          {"targets", plan.targets},
          {"actions", plan.actions},
          {"total_cost", plan.total_cost},
          {"uncovered", plan.uncovered}};
}

Plan plan_from_document(const Json& doc) {
  check_envelope(doc, {"node_order", "targets", "actions", "total_cost", "uncovered"});
  FieldReader reader(doc, "", {"version", "node_order", "targets", "actions", "total_cost", "uncovered"});
  Plan plan;
  try {
    plan.node_order = reader.required("node_order").get<std::vector<std::string>>();
    plan.targets = reader.required("targets").get<std::vector<std::string>>();
    plan.actions = reader.required("actions").get<std::vector<std::string>>();
    plan.uncovered = reader.required("uncovered").get<std::set<std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed plan document: ") + e.what());
  }
  plan.total_cost = static_cast<Cost>(reader.unsigned_integer("total_cost"));
  return plan;
}

}  // namespace stgnav
