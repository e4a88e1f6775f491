#include "stgnav/merging.hpp"

#include "stgnav/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

namespace stgnav {
namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }

  // Keeps the smaller index as root so roots are the smallest member.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }

  std::vector<std::size_t> parent;
};

bool same_key(const ComponentNode& a, const ComponentNode& b) {
  return a.kind == b.kind && a.resource_id == b.resource_id;
}

std::string unique_local_id(const ComponentNode& root, const std::string& wanted) {
  if (find_component(root, wanted) == nullptr) return wanted;
  for (int n = 1;; ++n) {
    auto candidate = wanted + "#" + std::to_string(n);
    if (find_component(root, candidate) == nullptr) return candidate;
  }
}

// Finds (or grafts) the counterpart of `component` from `from` inside the
// representative tree `into`; returns its local id.
std::string remap_component(const StateNode& from, const std::string& ref, StateNode& into) {
  const auto source_nodes = flatten(from.root);
  const auto it = std::find_if(source_nodes.begin(), source_nodes.end(),
                               [&](const ComponentNode* n) { return n->local_id == ref; });
  if (it == source_nodes.end()) return ref;
  const ComponentNode& component = **it;
  const auto position = static_cast<std::size_t>(it - source_nodes.begin());

  const auto target_nodes = flatten(into.root);
  if (target_nodes.size() == source_nodes.size() && same_key(*target_nodes[position], component)) {
    return target_nodes[position]->local_id;
  }
  if (const auto* same = find_component(into.root, ref); same != nullptr && same_key(*same, component)) {
    return ref;
  }
  for (const auto* node : target_nodes) {
    if (same_key(*node, component)) return node->local_id;
  }
  if (is_leaf_kind(into.root.kind)) return ref;
  ComponentNode graft = component;
  graft.children.clear();
  graft.local_id = unique_local_id(into.root, ref);
  into.root.children.push_back(graft);
  return graft.local_id;
}

std::map<std::string, std::vector<std::string>> neighbours(const StgGraph& graph, bool successors) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& edge : graph.actions) {
    auto& list = successors ? out[edge.source] : out[edge.target];
    list.push_back(successors ? edge.target : edge.source);
  }
  for (auto& [_, list] : out) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return out;
}

std::vector<MergeCluster> clusters_from(const std::map<std::string, std::string>& representative_of) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [member, rep] : representative_of) {
    if (member != rep) groups[rep].push_back(member);
  }
  std::vector<MergeCluster> out;
  for (auto& [rep, members] : groups) {
    std::sort(members.begin(), members.end());
    out.push_back({rep, std::move(members)});
  }
  return out;
}

}  // namespace

std::string_view to_string(MergePass pass) { return pass == MergePass::signature ? "signature" : "context"; }

std::vector<ComponentKey> component_keys(const ComponentNode& root) {
  std::vector<ComponentKey> out;
  for (const auto* node : flatten(root)) out.push_back({node->kind, node->resource_id});
  std::sort(out.begin(), out.end());
  return out;
}

double jaccard(std::span<const ComponentKey> a, std::span<const ComponentKey> b) {
  std::vector<ComponentKey> sa(a.begin(), a.end());
  std::vector<ComponentKey> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<ComponentKey> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  const std::size_t unite = sa.size() + sb.size() - common.size();
  if (unite == 0) return 1.0;
  return static_cast<double>(common.size()) / static_cast<double>(unite);
}

double similarity(const StateNode& a, const StateNode& b) {
  const auto ka = component_keys(a.root);
  const auto kb = component_keys(b.root);
  return jaccard(ka, kb);
}

StgGraph apply_merge(const StgGraph& graph, const std::map<std::string, std::string>& representative_of) {
  auto rep = [&](const std::string& id) -> const std::string& {
    auto it = representative_of.find(id);
    return it == representative_of.end() ? id : it->second;
  };

  std::map<std::string, StateNode> merged;
  for (const auto& state : graph.states) {
    if (rep(state.state_id) == state.state_id) merged.emplace(state.state_id, state);
  }
  for (const auto& state : graph.states) {
    const auto& r = rep(state.state_id);
    if (r == state.state_id) continue;
    auto it = merged.find(r);
    if (it == merged.end()) {
      throw Error(ErrorCode::internal, "merge representative " + r + " is not a state", r);
    }
    it->second.visit_count += state.visit_count;
  }

  const GraphIndex index(graph);
  std::vector<ActionEdge> edges = graph.actions;
  std::sort(edges.begin(), edges.end(),
            [](const ActionEdge& a, const ActionEdge& b) { return a.action_id < b.action_id; });

  StgGraph out;
  out.start_state = rep(graph.start_state);
  for (auto& edge : edges) {
    const auto& new_source = rep(edge.source);
    if (new_source != edge.source && !(edge.trigger == Trigger::back && edge.component_ref == kTouchBack)) {
      const auto* original = index.state(edge.source);
      auto target_state = merged.find(new_source);
      if (original != nullptr && target_state != merged.end()) {
        edge.component_ref = remap_component(*original, edge.component_ref, target_state->second);
      }
    }
    edge.source = new_source;
    edge.target = rep(edge.target);
    insert_action(out, std::move(edge));
  }
  for (auto& [_, state] : merged) out.states.push_back(std::move(state));
  return normalized(std::move(out));
}

MergeResult signature_merge(const StgGraph& graph) {
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> groups;
  for (const auto& state : graph.states) {
    groups[{state.activity, hierarchy_signature(state, true)}].push_back(state.state_id);
  }
  std::map<std::string, std::string> representative_of;
  for (auto& [_, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) representative_of[id] = ids.front();
  }
  MergeResult result;
  result.graph = apply_merge(graph, representative_of);
  result.report.pass = MergePass::signature;
  result.report.clusters = clusters_from(representative_of);
  return result;
}

MergeResult context_merge(const StgGraph& graph, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::parameter, "similarity threshold must lie in (0, 1]", "tau");
  }
  std::map<std::string, std::string> representative_of;
  for (const auto& state : graph.states) representative_of[state.state_id] = state.state_id;

  StgGraph current = normalized(graph);
  for (;;) {
    const auto& states = current.states;
    const std::size_t n = states.size();
    std::map<std::string, std::size_t> position;
    std::vector<std::vector<ComponentKey>> keys;
    keys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      position.emplace(states[i].state_id, i);
      keys.push_back(component_keys(states[i].root));
    }
    std::map<std::pair<std::size_t, std::size_t>, double> cache;
    auto sim = [&](const std::string& a, const std::string& b) {
      auto i = position.at(a);
      auto j = position.at(b);
      if (i == j) return 1.0;
      if (j < i) std::swap(i, j);
      auto [it, inserted] = cache.try_emplace({i, j}, 0.0);
      if (inserted) it->second = jaccard(keys[i], keys[j]);
      return it->second;
    };
    const auto preds = neighbours(current, false);
    const auto succs = neighbours(current, true);
    auto similar_pair_exists = [&](const auto& table, const std::string& a, const std::string& b) {
      auto ia = table.find(a);
      auto ib = table.find(b);
      if (ia == table.end() || ib == table.end()) return false;
      for (const auto& x : ia->second) {
        for (const auto& y : ib->second) {
          if (sim(x, y) >= threshold) return true;
        }
      }
      return false;
    };

    UnionFind uf(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& a = states[i];
        const auto& b = states[j];
        if (a.activity != b.activity) continue;
        if (sim(a.state_id, b.state_id) < threshold) continue;
        const bool involves_start = a.state_id == current.start_state || b.state_id == current.start_state;
        if (!involves_start && !similar_pair_exists(preds, a.state_id, b.state_id)) continue;
        if (!similar_pair_exists(succs, a.state_id, b.state_id)) continue;
        uf.unite(i, j);
        any = true;
      }
    }
    if (!any) break;

    std::map<std::string, std::string> step;
    for (std::size_t i = 0; i < n; ++i) step[states[i].state_id] = states[uf.find(i)].state_id;
    for (auto& [_, rep] : representative_of) rep = step.at(rep);
    current = apply_merge(current, step);
  }

  MergeResult result;
  result.graph = std::move(current);
  result.report.pass = MergePass::context;
  result.report.similarity_threshold = threshold;
  result.report.clusters = clusters_from(representative_of);
  return result;
}

Json merge_report_document(const MergeReport& report) {
  Json clusters = Json::array();
  for (const auto& cluster : report.clusters) {
    clusters.push_back({{"representative", cluster.representative}, {"merged", cluster.merged}});
  }
  Json doc = {{"version", kDocumentVersion}, {"pass", std::string(to_string(report.pass))},
              {"clusters", std::move(clusters)}};
  doc["similarity_threshold"] = report.similarity_threshold ? Json(*report.similarity_threshold) : Json(nullptr);
  return doc;
}

}  // namespace stgnav
