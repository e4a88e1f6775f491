#include "stgnav/stg.hpp"

#include "stgnav/error.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <tuple>
#include <utility>

namespace stgnav {
namespace {

constexpr std::array<std::pair<ComponentKind, std::string_view>, 8> kKindNames{{
    {ComponentKind::button, "button"},
    {ComponentKind::nav_item, "nav_item"},
    {ComponentKind::fragment_tab, "fragment_tab"},
    {ComponentKind::back_control, "back_control"},
    {ComponentKind::app_widget, "app_widget"},
    {ComponentKind::text_view, "text_view"},
    {ComponentKind::image_view, "image_view"},
    {ComponentKind::container, "container"},
}};

constexpr std::array<std::pair<Trigger, std::string_view>, 3> kTriggerNames{{
    {Trigger::click, "click"},
    {Trigger::back, "back"},
    {Trigger::long_press, "long_press"},
}};

constexpr std::array<std::pair<Provenance, std::string_view>, 3> kProvenanceNames{{
    {Provenance::static_pass, "static"},
    {Provenance::dynamic_pass, "dynamic"},
    {Provenance::manual, "manual"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
std::optional<Enum> value_of(const std::array<std::pair<Enum, std::string_view>, N>& table,
                             std::string_view text) {
  for (const auto& [e, name] : table) {
    if (name == text) return e;
  }
  return std::nullopt;
}

void append_field(std::string& out, const std::optional<std::string>& field) {
  if (!field) {
    out += '-';
    return;
  }
  out += std::to_string(field->size());
  out += ':';
  out += *field;
}

void append_signature(std::string& out, const ComponentNode& node, bool strip_content) {
  out += '(';
  out += to_string(node.kind);
  out += ',';
  append_field(out, node.resource_id);
  if (!strip_content) {
    out += ',';
    append_field(out, node.content);
  }
  out += ',';
  out += std::to_string(node.children.size());
  out += ')';
  for (const auto& child : node.children) append_signature(out, child, strip_content);
}

void flatten_into(const ComponentNode& node, std::vector<const ComponentNode*>& out) {
  out.push_back(&node);
  for (const auto& child : node.children) flatten_into(child, out);
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::version: return "version_error";
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::parameter: return "parameter_error";
    case ErrorCode::capacity: return "capacity_error";
    case ErrorCode::conflict: return "conflict_error";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::unknown_state: return "unknown_state";
    case ErrorCode::precondition: return "precondition_error";
    case ErrorCode::internal: return "internal_error";
  }
  return "error";
}

std::string_view to_string(ComponentKind kind) { return name_of(kKindNames, kind); }
std::string_view to_string(Trigger trigger) { return name_of(kTriggerNames, trigger); }
std::string_view to_string(Provenance provenance) { return name_of(kProvenanceNames, provenance); }

std::optional<ComponentKind> parse_component_kind(std::string_view text) {
  return value_of(kKindNames, text);
}
std::optional<Trigger> parse_trigger(std::string_view text) { return value_of(kTriggerNames, text); }
std::optional<Provenance> parse_provenance(std::string_view text) {
  return value_of(kProvenanceNames, text);
}

bool same_transition(const ActionEdge& a, const ActionEdge& b) {
  return std::tie(a.source, a.component_ref, a.trigger, a.target) ==
         std::tie(b.source, b.component_ref, b.trigger, b.target);
}

std::string insert_action(StgGraph& graph, ActionEdge edge) {
  for (const auto& existing : graph.actions) {
    if (same_transition(existing, edge)) return existing.action_id;
  }
  graph.actions.push_back(std::move(edge));
  return graph.actions.back().action_id;
}

StgGraph normalized(StgGraph graph) {
  std::stable_sort(graph.states.begin(), graph.states.end(),
                   [](const StateNode& a, const StateNode& b) { return a.state_id < b.state_id; });
  std::stable_sort(graph.actions.begin(), graph.actions.end(),
                   [](const ActionEdge& a, const ActionEdge& b) { return a.action_id < b.action_id; });
  return graph;
}

const StateNode* find_state(const StgGraph& graph, std::string_view state_id) {
  for (const auto& state : graph.states) {
    if (state.state_id == state_id) return &state;
  }
  return nullptr;
}

const ActionEdge* find_action(const StgGraph& graph, std::string_view action_id) {
  for (const auto& action : graph.actions) {
    if (action.action_id == action_id) return &action;
  }
  return nullptr;
}

const ComponentNode* find_component(const ComponentNode& root, std::string_view local_id) {
  if (root.local_id == local_id) return &root;
  for (const auto& child : root.children) {
    if (const auto* found = find_component(child, local_id)) return found;
  }
  return nullptr;
}

std::vector<const ComponentNode*> flatten(const ComponentNode& root) {
  std::vector<const ComponentNode*> out;
  flatten_into(root, out);
  return out;
}

bool is_leaf_kind(ComponentKind kind) { return kind != ComponentKind::container; }

std::string hierarchy_signature(const StateNode& state, bool strip_content) {
  std::string out;
  append_signature(out, state.root, strip_content);
  return out;
}

std::vector<Violation> validate_state(const StateNode& state) {
  std::vector<Violation> out;
  std::set<std::string_view> seen;
  for (const auto* node : flatten(state.root)) {
    if (!seen.insert(node->local_id).second) {
      out.push_back({"duplicate-local-id", state.state_id, node->local_id});
    }
    if (is_leaf_kind(node->kind) && !node->children.empty()) {
      out.push_back({"leaf-with-children", state.state_id, node->local_id});
    }
  }
  if (state.state_id.empty()) out.push_back({"empty-state-id", state.state_id, ""});
  return out;
}

std::vector<Violation> validate(const StgGraph& graph) {
  std::vector<Violation> out;
  std::map<std::string_view, const StateNode*> states;
  for (const auto& state : graph.states) {
    if (!states.emplace(state.state_id, &state).second) {
      out.push_back({"duplicate-state-id", state.state_id, ""});
    }
    auto tree = validate_state(state);
    out.insert(out.end(), tree.begin(), tree.end());
  }
  if (!states.contains(graph.start_state)) {
    out.push_back({"missing-start-state", graph.start_state, ""});
  }

  std::set<std::string_view> action_ids;
  for (std::size_t i = 0; i < graph.actions.size(); ++i) {
    const auto& edge = graph.actions[i];
    if (!action_ids.insert(edge.action_id).second) {
      out.push_back({"duplicate-action-id", edge.action_id, ""});
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (same_transition(graph.actions[j], edge)) {
        out.push_back({"duplicate-edge", edge.action_id, graph.actions[j].action_id});
        break;
      }
    }
    const auto source = states.find(edge.source);
    if (source == states.end()) {
      out.push_back({"dangling-source", edge.source, edge.action_id});
    }
    if (!states.contains(edge.target)) {
      out.push_back({"dangling-target", edge.target, edge.action_id});
    }
    if (source != states.end()) {
      const bool touch_back = edge.trigger == Trigger::back && edge.component_ref == kTouchBack;
      if (!touch_back && find_component(source->second->root, edge.component_ref) == nullptr) {
        out.push_back({"unresolved-component", edge.action_id, edge.component_ref});
      }
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.invariant, a.id) < std::tie(b.invariant, b.id);
  });
  return out;
}

GraphIndex::GraphIndex(const StgGraph& graph) : graph_(&graph) {
  for (const auto& state : graph.states) states_.emplace(state.state_id, &state);
  for (const auto& action : graph.actions) {
    actions_.emplace(action.action_id, &action);
    outgoing_[action.source].push_back(&action);
  }
  for (auto& [_, edges] : outgoing_) {
    std::sort(edges.begin(), edges.end(),
              [](const ActionEdge* a, const ActionEdge* b) { return a->action_id < b->action_id; });
  }
}

const StateNode* GraphIndex::state(std::string_view state_id) const {
  auto it = states_.find(state_id);
  return it == states_.end() ? nullptr : it->second;
}

const ActionEdge* GraphIndex::action(std::string_view action_id) const {
  auto it = actions_.find(action_id);
  return it == actions_.end() ? nullptr : it->second;
}

std::span<const ActionEdge* const> GraphIndex::outgoing(std::string_view state_id) const {
  auto it = outgoing_.find(state_id);
  if (it == outgoing_.end()) return {};
  return it->second;
}

}  // namespace stgnav
