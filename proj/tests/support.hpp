#pragma once

// Graph builders and independent oracles shared by the unit and acceptance
// tests. The oracles use only breadth-first search and exhaustive
// enumeration, never the planner's own closure.

#include "stgnav/app_model.hpp"
#include "stgnav/planner.hpp"
#include "stgnav/stg.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace stgnav::testing {

inline StateNode make_state(const std::string& id, const std::string& activity = "Main") {
  StateNode state;
  state.state_id = id;
  state.activity = activity;
  state.root.local_id = "root";
  state.root.kind = ComponentKind::container;
  state.root.resource_id = activity + "/root";
  return state;
}

inline ComponentNode make_button(const std::string& local_id, std::optional<std::string> content = std::nullopt) {
  ComponentNode node;
  node.local_id = local_id;
  node.kind = ComponentKind::button;
  node.resource_id = "id/" + local_id;
  node.content = std::move(content);
  return node;
}

// Builds graphs edge by edge. Each click edge gets its own button in the
// source state, named after the action id.
class GraphBuilder {
 public:
  GraphBuilder& state(const std::string& id, const std::string& activity = "Main") {
    graph_.states.push_back(make_state(id, activity));
    if (graph_.start_state.empty()) graph_.start_state = id;
    return *this;
  }

  GraphBuilder& click(const std::string& source, const std::string& target) {
    const auto id = next_id();
    mutable_state(source).root.children.push_back(make_button("b_" + id));
    graph_.actions.push_back({id, source, target, Trigger::click, "b_" + id, Provenance::manual});
    return *this;
  }

  GraphBuilder& back(const std::string& source, const std::string& target) {
    graph_.actions.push_back(
        {next_id(), source, target, Trigger::back, std::string(kTouchBack), Provenance::manual});
    return *this;
  }

  GraphBuilder& widget(const std::string& state_id, const std::string& local_id) {
    mutable_state(state_id).root.children.push_back(make_button(local_id));
    return *this;
  }

  GraphBuilder& start(const std::string& id) {
    graph_.start_state = id;
    return *this;
  }

  StgGraph build() const { return normalized(graph_); }

 private:
  std::string next_id() {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "a%03zu", graph_.actions.size());
    return buffer;
  }

  StateNode& mutable_state(const std::string& id) {
    for (auto& state : graph_.states) {
      if (state.state_id == id) return state;
    }
    throw std::logic_error("no state " + id);
  }

  StgGraph graph_;
};

inline std::string node_name(std::size_t i) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "N%02zu", i);
  return buffer;
}

// A→B→C.
inline StgGraph line_graph() { return GraphBuilder().state("A").state("B").state("C").click("A", "B").click("B", "C").build(); }

// A→B→C→A.
inline StgGraph cycle_graph() {
  return GraphBuilder().state("A").state("B").state("C").click("A", "B").click("B", "C").click("C", "A").build();
}

// Hub H with bidirectional unit edges to L1, L2, L3. Each leaf has its own
// widget so the leaves are structurally distinct.
inline StgGraph star_graph() {
  GraphBuilder builder;
  builder.state("H").state("L1").state("L2").state("L3");
  for (const auto* leaf : {"L1", "L2", "L3"}) builder.click("H", leaf).back(leaf, "H").widget(leaf, std::string("w") + leaf);
  return builder.build();
}

// Random directed graph on n nodes, each ordered pair an edge with
// probability p. Not necessarily connected.
inline StgGraph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  GraphBuilder builder;
  for (std::size_t i = 0; i < n; ++i) builder.state(node_name(i));
  std::bernoulli_distribution edge(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && edge(rng)) builder.click(node_name(i), node_name(j));
    }
  }
  return builder.build();
}

// Random strongly connected graph: a Hamiltonian cycle over a shuffled node
// order plus extra random edges. Activities split nodes into `activities`
// groups.
inline StgGraph random_strong_graph(std::size_t n, double extra, std::mt19937_64& rng, std::size_t activities = 1) {
  GraphBuilder builder;
  for (std::size_t i = 0; i < n; ++i) builder.state(node_name(i), "Act" + std::to_string(i * activities / n));
  std::vector<std::size_t> ring(n);
  for (std::size_t i = 0; i < n; ++i) ring[i] = i;
  std::shuffle(ring.begin(), ring.end(), rng);
  for (std::size_t i = 0; i < n && n > 1; ++i) builder.click(node_name(ring[i]), node_name(ring[(i + 1) % n]));
  std::bernoulli_distribution edge(extra);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && edge(rng)) builder.click(node_name(i), node_name(j));
    }
  }
  return builder.build();
}

// All-pairs distances by per-source BFS, indexed by sorted state id.
inline std::vector<std::vector<Cost>> bfs_distances(const StgGraph& graph) {
  std::vector<std::string> ids;
  for (const auto& state : graph.states) ids.push_back(state.state_id);
  std::sort(ids.begin(), ids.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  std::vector<std::vector<std::size_t>> adjacent(ids.size());
  for (const auto& edge : graph.actions) adjacent[index.at(edge.source)].push_back(index.at(edge.target));

  std::vector<std::vector<Cost>> d(ids.size(), std::vector<Cost>(ids.size(), kUnreachable));
  for (std::size_t s = 0; s < ids.size(); ++s) {
    std::deque<std::size_t> queue{s};
    d[s][s] = 0;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (auto v : adjacent[u]) {
        if (d[s][v] == kUnreachable) {
          d[s][v] = d[s][u] + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return d;
}

// Minimum over every visiting order of the non-start states of the summed
// BFS distances; kUnreachable when some state cannot be reached.
inline Cost permutation_oracle(const StgGraph& graph, const std::string& start) {
  const auto d = bfs_distances(graph);
  std::vector<std::string> ids;
  for (const auto& state : graph.states) ids.push_back(state.state_id);
  std::sort(ids.begin(), ids.end());
  const auto s = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), start) - ids.begin());
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i != s) rest.push_back(i);
  }
  Cost best = kUnreachable;
  do {
    Cost total = 0;
    auto at = s;
    for (auto next : rest) {
      total = add_cost(total, d[at][next]);
      at = next;
    }
    best = std::min(best, total);
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

// Follows `actions` from `start` and returns every state passed through.
inline std::vector<std::string> replay_actions(const StgGraph& graph, const std::string& start,
                                               const std::vector<std::string>& actions) {
  std::vector<std::string> walk{start};
  for (const auto& id : actions) {
    const auto* edge = find_action(graph, id);
    if (edge == nullptr || edge->source != walk.back()) throw std::logic_error("action " + id + " not applicable");
    walk.push_back(edge->target);
  }
  return walk;
}

inline std::set<std::string> all_states(const StgGraph& graph) {
  std::set<std::string> out;
  for (const auto& state : graph.states) out.insert(state.state_id);
  return out;
}

// States reachable from `from` (inclusive), by BFS.
inline std::set<std::string> reachable_from(const StgGraph& graph, const std::string& from) {
  std::set<std::string> seen{from};
  std::deque<std::string> queue{from};
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (const auto& edge : graph.actions) {
      if (edge.source == u && seen.insert(edge.target).second) queue.push_back(edge.target);
    }
  }
  return seen;
}

}  // namespace stgnav::testing
