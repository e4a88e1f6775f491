#pragma once

// State transition graph model: UI states (component trees), trigger actions
// between them, and the canonical signature used to detect duplicate states.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stgnav {

enum class ComponentKind {
  button,
  nav_item,
  fragment_tab,
  back_control,
  app_widget,
  text_view,
  image_view,
  container,
};

enum class Trigger { click, back, long_press };

enum class Provenance { static_pass, dynamic_pass, manual };

std::string_view to_string(ComponentKind kind);
std::string_view to_string(Trigger trigger);
std::string_view to_string(Provenance provenance);

std::optional<ComponentKind> parse_component_kind(std::string_view text);
std::optional<Trigger> parse_trigger(std::string_view text);
std::optional<Provenance> parse_provenance(std::string_view text);

/// Component ref of a `back` action that has no on-screen control.
inline constexpr std::string_view kTouchBack = "touch_back";

struct ComponentNode {
  std::string local_id;
  ComponentKind kind = ComponentKind::container;
  std::optional<std::string> resource_id;
  std::optional<std::string> content;
  std::vector<ComponentNode> children;

  bool operator==(const ComponentNode&) const = default;
};

struct StateNode {
  std::string state_id;
  std::string activity;
  ComponentNode root;
  std::uint64_t visit_count = 0;

  bool operator==(const StateNode&) const = default;
};

struct ActionEdge {
  std::string action_id;
  std::string source;
  std::string target;
  Trigger trigger = Trigger::click;
  std::string component_ref;
  Provenance provenance = Provenance::dynamic_pass;

  bool operator==(const ActionEdge&) const = default;
};

/// Two edges are the same transition iff this 4-tuple matches.
bool same_transition(const ActionEdge& a, const ActionEdge& b);

struct StgGraph {
  std::vector<StateNode> states;
  std::vector<ActionEdge> actions;
  std::string start_state;

  bool operator==(const StgGraph&) const = default;
};

/// Adds `edge` unless an edge with the same transition identity exists.
/// Returns the action_id of the edge now representing that transition.
std::string insert_action(StgGraph& graph, ActionEdge edge);

/// Sorts states by state_id and actions by action_id.
StgGraph normalized(StgGraph graph);

const StateNode* find_state(const StgGraph& graph, std::string_view state_id);
const ActionEdge* find_action(const StgGraph& graph, std::string_view action_id);

/// Pre-order search of a component tree.
const ComponentNode* find_component(const ComponentNode& root, std::string_view local_id);

/// Pre-order flattening of a component tree.
std::vector<const ComponentNode*> flatten(const ComponentNode& root);

bool is_leaf_kind(ComponentKind kind);

/// Canonical depth-first serialization of a state's component tree. Each node
/// contributes its kind, resource id and child count (and content unless
/// `strip_content`). Strings are length-prefixed so distinct trees never
/// collide.
std::string hierarchy_signature(const StateNode& state, bool strip_content);

struct Violation {
  std::string invariant;
  std::string id;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

/// All invariant violations of `graph`, ordered by (invariant, id). Empty iff
/// the graph is well formed.
std::vector<Violation> validate(const StgGraph& graph);

/// Violations of a single state's component tree.
std::vector<Violation> validate_state(const StateNode& state);

/// Read-only lookup tables over a graph. Holds pointers into `graph`, which
/// must outlive the index and stay unmodified.
class GraphIndex {
 public:
  explicit GraphIndex(const StgGraph& graph);

  const StgGraph& graph() const { return *graph_; }
  const StateNode* state(std::string_view state_id) const;
  const ActionEdge* action(std::string_view action_id) const;

  /// Outgoing edges of `state_id`, ordered by action_id.
  std::span<const ActionEdge* const> outgoing(std::string_view state_id) const;

 private:
  const StgGraph* graph_;
  std::unordered_map<std::string_view, const StateNode*> states_;
  std::unordered_map<std::string_view, const ActionEdge*> actions_;
  std::unordered_map<std::string_view, std::vector<const ActionEdge*>> outgoing_;
};

}  // namespace stgnav
