#include "stgnav/app_model.hpp"

#include "stgnav/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

namespace stgnav {
namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool chance(Rng& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

std::string state_name(int activity, int index) {
  return "A" + std::to_string(activity) + "_S" + std::to_string(index);
}

std::string activity_name(int activity) { return "Activity" + std::to_string(activity); }

struct PlannedEdge {
  int source;
  int target;
  Trigger trigger;
  bool on_screen_back = false;
};

ComponentNode leaf(std::string local_id, ComponentKind kind, std::string resource_id,
                   std::optional<std::string> content = std::nullopt) {
  ComponentNode node;
  node.local_id = std::move(local_id);
  node.kind = kind;
  node.resource_id = std::move(resource_id);
  node.content = std::move(content);
  return node;
}

void apply_content(ComponentNode& node, const ContentAssignment& assignment) {
  if (auto it = assignment.find(node.local_id); it != assignment.end()) node.content = it->second;
  for (auto& child : node.children) apply_content(child, assignment);
}

void require_param(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::parameter, message);
}

}  // namespace

std::string base_state_id(std::string_view recorded_id) {
  const auto pos = recorded_id.rfind(kVariantMarker);
  return std::string(pos == std::string_view::npos ? recorded_id : recorded_id.substr(0, pos));
}

AppModel generate_random_app(const AppParams& params) {
  require_param(params.n_activities >= 1, "n_activities must be >= 1");
  require_param(params.states_per_activity >= 1, "states_per_activity must be >= 1");
  require_param(params.branching >= 1, "branching must be >= 1 (0 makes reachability impossible)");
  require_param(params.duplicate_rate >= 0.0 && params.duplicate_rate <= 1.0,
                "duplicate_rate must lie in [0, 1]");

  Rng rng(params.seed);
  const int n_act = params.n_activities;
  const int per = params.states_per_activity;
  const int total = n_act * per;
  auto global = [per](int activity, int index) { return activity * per + index; };

  std::vector<PlannedEdge> planned;
  std::vector<std::set<int>> declared(static_cast<std::size_t>(n_act));

  for (int a = 0; a < n_act; ++a) {
    for (int k = 1; k < per; ++k) {
      const int parent = static_cast<int>(pick(rng, static_cast<std::size_t>(k)));
      planned.push_back({global(a, parent), global(a, k), Trigger::click});
      planned.push_back({global(a, k), global(a, parent), Trigger::back, chance(rng, 0.5)});
    }
  }
  for (int a = 1; a < n_act; ++a) {
    const int parent = static_cast<int>(pick(rng, static_cast<std::size_t>(a)));
    declared[static_cast<std::size_t>(parent)].insert(a);
    planned.push_back({global(parent, 0), global(a, 0), Trigger::click});
    planned.push_back({global(a, 0), global(parent, 0), Trigger::back, chance(rng, 0.5)});
  }
  for (int a = 0; a < n_act && n_act > 1; ++a) {
    if (!chance(rng, 0.3)) continue;
    const int other = static_cast<int>(pick(rng, static_cast<std::size_t>(n_act)));
    if (other == a || declared[static_cast<std::size_t>(a)].contains(other)) continue;
    declared[static_cast<std::size_t>(a)].insert(other);
    planned.push_back({global(a, 0), global(other, 0), Trigger::click});
  }
  if (per > 1) {
    for (int a = 0; a < n_act; ++a) {
      for (int k = 0; k < per; ++k) {
        for (int extra = 1; extra < params.branching; ++extra) {
          int target = static_cast<int>(pick(rng, static_cast<std::size_t>(per - 1)));
          if (target >= k) ++target;
          planned.push_back({global(a, k), global(a, target), Trigger::click});
        }
      }
      if (chance(rng, 0.5)) {
        const int source = static_cast<int>(pick(rng, static_cast<std::size_t>(per)));
        int target = static_cast<int>(pick(rng, static_cast<std::size_t>(per - 1)));
        if (target >= source) ++target;
        planned.push_back({global(a, source), global(a, target), Trigger::long_press});
      }
    }
  }

  AppModel app;
  app.launch_activity = activity_name(0);
  for (int a = 0; a < n_act; ++a) {
    ActivityDecl decl;
    decl.name = activity_name(a);
    for (int target : declared[static_cast<std::size_t>(a)]) decl.declared_targets.push_back(activity_name(target));
    for (int k = 0; k < per; ++k) decl.states.push_back(state_name(a, k));
    app.activities.push_back(std::move(decl));
  }

  // Component trees: shared activity chrome plus one control per outgoing edge.
  std::vector<StateNode> states(static_cast<std::size_t>(total));
  std::vector<int> button_count(static_cast<std::size_t>(total), 0);
  std::vector<std::string> edge_refs(planned.size());
  for (int a = 0; a < n_act; ++a) {
    for (int k = 0; k < per; ++k) {
      auto& state = states[static_cast<std::size_t>(global(a, k))];
      const std::string id = state_name(a, k);
      const std::string chrome = "act" + std::to_string(a) + "/";
      state.state_id = id;
      state.activity = activity_name(a);
      state.root.local_id = "root";
      state.root.kind = ComponentKind::container;
      state.root.resource_id = chrome + "root";
      state.root.children.push_back(leaf("title", ComponentKind::text_view, chrome + "title", "Title " + id));
      state.root.children.push_back(
          leaf("banner", ComponentKind::image_view, chrome + "banner", "img:" + std::to_string(rng() % 100000)));
      ComponentNode body;
      body.local_id = "body";
      body.kind = ComponentKind::container;
      body.resource_id = id + "/body";
      body.children.push_back(leaf("label", ComponentKind::text_view, id + "/label", "Label " + id));
      state.root.children.push_back(std::move(body));
    }
  }
  constexpr std::array<ComponentKind, 3> kClickKinds{ComponentKind::button, ComponentKind::nav_item,
                                                     ComponentKind::fragment_tab};
  for (std::size_t i = 0; i < planned.size(); ++i) {
    const auto& edge = planned[i];
    auto& state = states[static_cast<std::size_t>(edge.source)];
    auto& body = state.root.children[2];
    switch (edge.trigger) {
      case Trigger::click: {
        const int n = button_count[static_cast<std::size_t>(edge.source)]++;
        const std::string local = "btn" + std::to_string(n);
        body.children.push_back(leaf(local, kClickKinds[pick(rng, kClickKinds.size())],
                                     state.state_id + "/" + local, "Go " + std::to_string(n)));
        edge_refs[i] = local;
        break;
      }
      case Trigger::back:
        if (edge.on_screen_back) {
          state.root.children.push_back(leaf("back", ComponentKind::back_control,
                                             "act" + std::to_string(edge.source / per) + "/back", "Back"));
          edge_refs[i] = "back";
        } else {
          edge_refs[i] = std::string(kTouchBack);
        }
        break;
      case Trigger::long_press:
        body.children.push_back(leaf("widget", ComponentKind::app_widget, state.state_id + "/widget"));
        edge_refs[i] = "widget";
        break;
    }
  }

  auto& graph = app.true_graph;
  graph.start_state = state_name(0, 0);
  graph.states = std::move(states);
  const int width = std::max<int>(4, static_cast<int>(std::to_string(planned.size()).size()));
  for (std::size_t i = 0; i < planned.size(); ++i) {
    const auto& edge = planned[i];
    std::string number = std::to_string(i);
    ActionEdge action;
    action.action_id = "e" + std::string(static_cast<std::size_t>(width) - number.size(), '0') + number;
    action.source = graph.states[static_cast<std::size_t>(edge.source)].state_id;
    action.target = graph.states[static_cast<std::size_t>(edge.target)].state_id;
    action.trigger = edge.trigger;
    action.component_ref = edge_refs[i];
    action.provenance = Provenance::manual;
    insert_action(graph, std::move(action));
  }

  // Content-only near duplicates for an exact fraction of the states.
  const auto n_dup = static_cast<std::size_t>(std::llround(params.duplicate_rate * total));
  std::vector<std::size_t> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < n_dup; ++i) {
    const auto& state = graph.states[order[i]];
    const std::size_t n_variants = 1 + pick(rng, 2);
    auto& variants = app.content_variants[state.state_id];
    for (std::size_t v = 1; v <= n_variants; ++v) {
      variants.push_back({{"title", "Title " + state.state_id + " (variant " + std::to_string(v) + ")"},
                          {"label", "Label " + std::to_string(rng() % 1000)},
                          {"banner", "img:" + std::to_string(rng() % 100000)}});
    }
  }
  return app;
}

const ActivityDecl* find_activity(const AppModel& app, std::string_view name) {
  for (const auto& activity : app.activities) {
    if (activity.name == name) return &activity;
  }
  return nullptr;
}

std::string entry_state(const ActivityDecl& activity) {
  return activity.states.empty() ? std::string() : activity.states.front();
}

std::vector<Violation> validate_app(const AppModel& app) {
  auto out = validate(app.true_graph);
  const GraphIndex index(app.true_graph);
  std::set<std::string> owned;
  for (const auto& activity : app.activities) {
    for (const auto& target : activity.declared_targets) {
      if (find_activity(app, target) == nullptr) out.push_back({"undeclared-target", activity.name, target});
    }
    for (const auto& state_id : activity.states) {
      const auto* state = index.state(state_id);
      if (state == nullptr || state->activity != activity.name) {
        out.push_back({"activity-state-mismatch", activity.name, state_id});
      }
      owned.insert(state_id);
    }
  }
  const auto* launch = find_activity(app, app.launch_activity);
  if (launch == nullptr ||
      std::find(launch->states.begin(), launch->states.end(), app.true_graph.start_state) == launch->states.end()) {
    out.push_back({"launch-activity", app.launch_activity, app.true_graph.start_state});
  }
  std::set<std::string_view> seen;
  std::deque<std::string_view> queue;
  if (index.state(app.true_graph.start_state) != nullptr) {
    seen.insert(app.true_graph.start_state);
    queue.push_back(app.true_graph.start_state);
  }
  while (!queue.empty()) {
    const auto current = queue.front();
    queue.pop_front();
    for (const auto* edge : index.outgoing(current)) {
      if (seen.insert(edge->target).second) queue.push_back(edge->target);
    }
  }
  for (const auto& state : app.true_graph.states) {
    if (!seen.contains(state.state_id)) out.push_back({"unreachable-state", state.state_id, ""});
    if (!owned.contains(state.state_id)) out.push_back({"unowned-state", state.state_id, ""});
  }
  std::for_each(app.content_variants.begin(), app.content_variants.end(), [&](const auto& entry) {
    if (index.state(entry.first) == nullptr) out.push_back({"variant-of-missing-state", entry.first, ""});
  });
  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.invariant, a.id) < std::tie(b.invariant, b.id);
  });
  return out;
}

StgGraph static_extract(const AppModel& app) {
  const GraphIndex index(app.true_graph);
  StgGraph out;
  std::set<std::string> added;
  auto add_state = [&](const std::string& id) {
    if (id.empty() || !added.insert(id).second) return;
    const auto* state = index.state(id);
    if (state == nullptr) return;
    StateNode copy = *state;
    copy.visit_count = 0;
    out.states.push_back(std::move(copy));
  };
  for (const auto& activity : app.activities) add_state(entry_state(activity));
  if (const auto* launch = find_activity(app, app.launch_activity)) out.start_state = entry_state(*launch);

  for (const auto& activity : app.activities) {
    const auto from = entry_state(activity);
    for (const auto& target_name : activity.declared_targets) {
      const auto* target = find_activity(app, target_name);
      if (target == nullptr) continue;
      const auto to = entry_state(*target);
      // The launching control is resolved from the entry state's layout: the
      // first control whose transition lands on the declared activity.
      for (const auto* edge : index.outgoing(from)) {
        if (edge->target != to) continue;
        ActionEdge copy = *edge;
        copy.provenance = Provenance::static_pass;
        insert_action(out, std::move(copy));
        break;
      }
    }
  }
  return normalized(std::move(out));
}

ExplorationResult dynamic_explore(const AppModel& app, std::uint64_t budget, std::uint64_t seed) {
  if (budget < 1) throw Error(ErrorCode::parameter, "exploration budget must be >= 1");
  const GraphIndex index(app.true_graph);
  const auto& launch = app.true_graph.start_state;
  if (index.state(launch) == nullptr) throw Error(ErrorCode::parameter, "app has no launch state", launch);

  Rng rng(seed);
  ExplorationResult result;
  result.trace.seed = seed;
  result.trace.budget = budget;
  auto& graph = result.graph;

  // Records one visit of `true_id`, sampling which content variant is shown.
  auto record_visit = [&](const std::string& true_id) {
    std::string recorded = true_id;
    ContentAssignment const* assignment = nullptr;
    if (auto it = app.content_variants.find(true_id); it != app.content_variants.end() && !it->second.empty()) {
      const std::size_t variant = pick(rng, it->second.size() + 1);
      if (variant > 0) {
        recorded += std::string(kVariantMarker) + std::to_string(variant);
        assignment = &it->second[variant - 1];
      }
    }
    for (auto& state : graph.states) {
      if (state.state_id == recorded) {
        ++state.visit_count;
        return recorded;
      }
    }
    StateNode node = *index.state(true_id);
    node.state_id = recorded;
    node.visit_count = 1;
    if (assignment != nullptr) apply_content(node.root, *assignment);
    graph.states.push_back(std::move(node));
    return recorded;
  };

  std::string true_current = launch;
  std::string recorded_current = record_visit(launch);
  graph.start_state = recorded_current;
  for (std::uint64_t step = 0; step < budget; ++step) {
    const auto outgoing = index.outgoing(true_current);
    if (outgoing.empty()) {
      true_current = launch;
      const auto next = record_visit(launch);
      result.trace.steps.push_back({recorded_current, "", next});
      recorded_current = next;
      continue;
    }
    const ActionEdge* edge = outgoing[pick(rng, outgoing.size())];
    const auto next = record_visit(edge->target);
    ActionEdge observed = *edge;
    observed.source = recorded_current;
    observed.target = next;
    observed.provenance = Provenance::dynamic_pass;
    if (recorded_current != edge->source || next != edge->target) {
      observed.action_id = edge->action_id + "@" + recorded_current + ">" + next;
    }
    const auto action_id = insert_action(graph, std::move(observed));
    result.trace.steps.push_back({recorded_current, action_id, next});
    true_current = edge->target;
    recorded_current = next;
  }
  graph = normalized(std::move(graph));
  return result;
}

StgGraph combine(const StgGraph& static_graph, const StgGraph& dynamic_graph) {
  StgGraph out;
  std::map<std::string, StateNode> states;
  std::vector<std::string> conflicts;
  for (const auto* g : {&static_graph, &dynamic_graph}) {
    for (const auto& state : g->states) {
      auto [it, inserted] = states.emplace(state.state_id, state);
      if (inserted) continue;
      if (it->second.activity != state.activity || it->second.root != state.root) {
        conflicts.push_back(state.state_id);
      } else {
        it->second.visit_count = std::max(it->second.visit_count, state.visit_count);
      }
    }
  }
  if (!conflicts.empty()) {
    std::sort(conflicts.begin(), conflicts.end());
    conflicts.erase(std::unique(conflicts.begin(), conflicts.end()), conflicts.end());
    std::string list;
    for (const auto& id : conflicts) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::conflict, "conflicting state payloads: " + list, list);
  }
  for (auto& [_, state] : states) out.states.push_back(std::move(state));

  std::vector<ActionEdge> edges;
  edges.insert(edges.end(), static_graph.actions.begin(), static_graph.actions.end());
  edges.insert(edges.end(), dynamic_graph.actions.begin(), dynamic_graph.actions.end());
  std::sort(edges.begin(), edges.end(), [](const ActionEdge& a, const ActionEdge& b) {
    return std::tie(a.action_id, a.provenance) < std::tie(b.action_id, b.provenance);
  });
  std::map<std::string, const ActionEdge*> by_id;
  for (const auto& edge : edges) {
    auto [it, inserted] = by_id.emplace(edge.action_id, &edge);
    if (!inserted && !same_transition(*it->second, edge)) {
      throw Error(ErrorCode::conflict, "action id " + edge.action_id + " names two different transitions",
                  edge.action_id);
    }
    insert_action(out, edge);
  }
  out.start_state = dynamic_graph.start_state.empty() ? static_graph.start_state : dynamic_graph.start_state;
  return normalized(std::move(out));
}

Json app_document(const AppModel& app) {
  Json activities = Json::array();
  for (const auto& activity : app.activities) {
    activities.push_back({{"name", activity.name},
                          {"declared_targets", activity.declared_targets},
                          {"states", activity.states}});
  }
  Json variants = Json::object();
  for (const auto& [state_id, list] : app.content_variants) {
    Json entries = Json::array();
    for (const auto& assignment : list) entries.push_back(Json(assignment));
    variants[state_id] = std::move(entries);
  }
  return {{"version", kDocumentVersion},
          {"activities", std::move(activities)},
          {"launch_activity", app.launch_activity},
          {"true_graph", graph_body(app.true_graph)},
          {"content_variants", std::move(variants)}};
}

namespace {

std::vector<std::string> string_list(const Json& json, const std::string& path) {
  if (!json.is_array()) throw_field_error(path, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < json.size(); ++i) {
    if (!json[i].is_string()) throw_field_error(path + "/" + std::to_string(i), "expected a string");
    out.push_back(json[i].get<std::string>());
  }
  return out;
}

}  // namespace

AppModel app_from_document(const Json& doc) {
  check_envelope(doc, {"activities", "launch_activity", "true_graph", "content_variants"});
  FieldReader reader(doc, "", {"version", "activities", "launch_activity", "true_graph", "content_variants"});
  AppModel app;
  const auto& activities = reader.required("activities");
  if (!activities.is_array()) throw_field_error("/activities", "expected an array");
  for (std::size_t i = 0; i < activities.size(); ++i) {
    const std::string path = "/activities/" + std::to_string(i);
    FieldReader item(activities[i], path, {"name", "declared_targets", "states"});
    ActivityDecl decl;
    decl.name = item.string("name");
    decl.declared_targets = string_list(item.required("declared_targets"), item.path_of("declared_targets"));
    decl.states = string_list(item.required("states"), item.path_of("states"));
    app.activities.push_back(std::move(decl));
  }
  app.launch_activity = reader.string("launch_activity");
  app.true_graph = graph_from_body(reader.required("true_graph"), "/true_graph");
  if (const auto* variants = reader.optional("content_variants")) {
    if (!variants->is_object()) throw_field_error("/content_variants", "expected an object");
    for (const auto& [state_id, list] : variants->items()) {
      const std::string path = "/content_variants/" + state_id;
      if (!list.is_array()) throw_field_error(path, "expected an array");
      auto& out = app.content_variants[state_id];
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& assignment = list[i];
        const std::string item_path = path + "/" + std::to_string(i);
        if (!assignment.is_object()) throw_field_error(item_path, "expected an object");
        ContentAssignment parsed;
        for (const auto& [local_id, content] : assignment.items()) {
          if (!content.is_string()) throw_field_error(item_path + "/" + local_id, "expected a string");
          parsed.emplace(local_id, content.get<std::string>());
        }
        out.push_back(std::move(parsed));
      }
    }
  }
  return app;
}

std::string save_app(const AppModel& app) { return app_document(app).dump(2) + "\n"; }

AppModel load_app(std::string_view bytes) { return app_from_document(parse_json(bytes)); }

Json trace_to_json(const ExplorationTrace& trace) {
  Json steps = Json::array();
  for (const auto& step : trace.steps) {
    steps.push_back({{"state_id", step.state_id}, {"action_id", step.action_id}, {"result", step.result_state_id}});
  }
  return {{"version", kDocumentVersion}, {"seed", trace.seed}, {"budget", trace.budget}, {"steps", std::move(steps)}};
}

}  // namespace stgnav
