#include "support.hpp"

#include "stgnav/capture.hpp"
#include "stgnav/error.hpp"

#include <doctest.h>

using namespace stgnav;
using namespace stgnav::testing;

namespace {

StateNode dialog(const std::string& id, const std::string& text) {
  auto state = make_state(id, "Dialog");
  state.root.children.push_back(make_button("b1", text));
  return state;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::internal;
}

// Random component tree with random content strings.
ComponentNode random_tree(std::mt19937_64& rng, int depth, int& counter) {
  ComponentNode node;
  node.local_id = "c" + std::to_string(counter++);
  std::uniform_int_distribution<int> kinds(0, 7);
  node.kind = depth > 0 && kinds(rng) < 3 ? ComponentKind::container : static_cast<ComponentKind>(kinds(rng) % 7);
  if (kinds(rng) % 2 == 0) node.resource_id = "rid/" + std::to_string(kinds(rng));
  if (kinds(rng) % 2 == 0) node.content = "text" + std::to_string(rng() % 1000);
  if (node.kind == ComponentKind::container) {
    const int children = static_cast<int>(rng() % 4);
    for (int i = 0; i < children; ++i) node.children.push_back(random_tree(rng, depth - 1, counter));
  }
  return node;
}

void strip(ComponentNode& node, std::mt19937_64& rng) {
  if (node.content) node.content = "other" + std::to_string(rng() % 1000);
  for (auto& child : node.children) strip(child, rng);
}

}  // namespace

TEST_CASE("signature ignores content only when stripping") {
  const auto ok = dialog("S1", "OK");
  const auto cancel = dialog("S2", "Cancel");
  CHECK(hierarchy_signature(ok, true) == hierarchy_signature(cancel, true));
  CHECK(hierarchy_signature(ok, false) != hierarchy_signature(cancel, false));
  CHECK(hierarchy_signature(ok, false) == hierarchy_signature(ok, false));
}

TEST_CASE("signature sees child count") {
  auto two = make_state("S1");
  two.root.children = {make_button("b1"), make_button("b2")};
  auto one = make_state("S2");
  one.root.children = {make_button("b1")};
  CHECK(hierarchy_signature(two, true) != hierarchy_signature(one, true));
}

TEST_CASE("signature has no length-ambiguity collisions") {
  auto a = make_state("S1");
  a.root.resource_id = "ab";
  a.root.content = "c";
  auto b = make_state("S2");
  b.root.resource_id = "a";
  b.root.content = "bc";
  CHECK(hierarchy_signature(a, false) != hierarchy_signature(b, false));
}

TEST_CASE("signature soundness over random trees") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    int counter = 0;
    StateNode a{"S", "Main", random_tree(rng, 3, counter), 0};
    a.root.kind = ComponentKind::container;
    auto b = a;
    strip(b.root, rng);
    CHECK(hierarchy_signature(a, true) == hierarchy_signature(b, true));
  }
}

TEST_CASE("validate reports a dangling target by the missing id") {
  auto graph = line_graph();
  graph.actions[1].target = "S9";
  const auto violations = validate(graph);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].invariant == "dangling-target");
  CHECK(violations[0].id == "S9");
}

TEST_CASE("validate an empty graph with a start state") {
  StgGraph graph;
  graph.start_state = "S0";
  const auto violations = validate(graph);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].invariant == "missing-start-state");
}

TEST_CASE("validate accepts a well-formed cycle") { CHECK(validate(cycle_graph()).empty()); }

TEST_CASE("validate is ordered and covers structural invariants") {
  auto graph = cycle_graph();
  graph.states[0].root.children.push_back(make_button("b_a000"));  // duplicate local id
  auto leaf = make_button("leaf");
  leaf.children.push_back(make_button("inner"));
  graph.states[1].root.children.push_back(leaf);
  auto duplicate = graph.actions[0];
  duplicate.action_id = "z999";
  graph.actions.push_back(duplicate);
  graph.actions.push_back({"z998", "A", "B", Trigger::click, "missing", Provenance::manual});
  const auto violations = validate(graph);
  std::vector<std::string> names;
  for (const auto& v : violations) names.push_back(v.invariant);
  CHECK(std::is_sorted(names.begin(), names.end()));
  CHECK(std::count(names.begin(), names.end(), "duplicate-local-id") == 1);
  CHECK(std::count(names.begin(), names.end(), "leaf-with-children") == 1);
  CHECK(std::count(names.begin(), names.end(), "duplicate-edge") == 1);
  CHECK(std::count(names.begin(), names.end(), "unresolved-component") == 1);
}

TEST_CASE("touch_back resolves only for back actions") {
  auto graph = star_graph();
  CHECK(validate(graph).empty());
  graph.actions.push_back({"z000", "H", "L1", Trigger::click, std::string(kTouchBack), Provenance::manual});
  CHECK(validate(graph).size() == 1);
}

TEST_CASE("insert_action collapses identical transitions") {
  auto graph = line_graph();
  auto copy = graph.actions[0];
  copy.action_id = "zzz";
  copy.provenance = Provenance::static_pass;
  CHECK(insert_action(graph, copy) == graph.actions[0].action_id);
  CHECK(graph.actions.size() == 2);
}

TEST_CASE("save then load is identity") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    auto graph = random_strong_graph(6, 0.3, rng, 2);
    graph.states[0].visit_count = 3;
    graph.states[1].root.children.push_back(make_button("x", "Hello \"quoted\""));
    CHECK(load_graph(save_graph(graph)) == graph);
  }
  const auto app = generate_random_app({3, 4, 2, 0.5, 9});
  CHECK(load_graph(save_graph(app.true_graph)) == app.true_graph);
  CHECK(save_graph(load_graph(save_graph(app.true_graph))) == save_graph(app.true_graph));
}

TEST_CASE("document errors name the field") {
  auto doc = graph_document(line_graph());
  doc.erase("states");
  try {
    graph_from_document(doc);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    CHECK(std::string(e.what()).find("states") != std::string::npos);
  }

  auto versioned = graph_document(line_graph());
  versioned["version"] = "99";
  CHECK(code_of([&] { graph_from_document(versioned); }) == ErrorCode::version);

  auto bad_trigger = graph_document(line_graph());
  bad_trigger["actions"][0]["trigger"] = "swipe";
  try {
    graph_from_document(bad_trigger);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.path() == "/actions/0/trigger");
  }

  auto extra = graph_document(line_graph());
  extra["states"][0]["colour"] = "red";
  CHECK(code_of([&] { graph_from_document(extra); }) == ErrorCode::parse);

  CHECK(code_of([] { load_graph("{\n\"version\": \"1\",\n  oops"); }) == ErrorCode::parse);
}

TEST_CASE("graph index orders outgoing edges") {
  const auto graph = star_graph();
  GraphIndex index(graph);
  const auto out = index.outgoing("H");
  REQUIRE(out.size() == 3);
  CHECK(out[0]->action_id < out[1]->action_id);
  CHECK(index.outgoing("missing").empty());
  CHECK(index.state("L2") != nullptr);
  CHECK(index.action("nope") == nullptr);
}
