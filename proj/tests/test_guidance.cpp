#include "support.hpp"

#include "stgnav/error.hpp"
#include "stgnav/guidance.hpp"
#include "stgnav/layout.hpp"

#include <doctest.h>

using namespace stgnav;
using namespace stgnav::testing;

namespace {

using Ids = std::vector<std::string>;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::internal;
}

// A→B→C with C→B, so a jump to C can still reach B.
StgGraph line_with_return() {
  return GraphBuilder().state("A").state("B").state("C").click("A", "B").click("B", "C").click("C", "B").build();
}

}  // namespace

TEST_CASE("layout is deterministic and nested") {
  auto state = make_state("S");
  ComponentNode body;
  body.local_id = "body";
  body.kind = ComponentKind::container;
  body.children = {make_button("b1"), make_button("b2")};
  state.root.children = {make_button("top"), body};
  const auto layout = layout_state(state);
  CHECK(layout.components.size() == 5);
  CHECK(layout.viewport == Rect{0, 0, kScreenWidth, kMinScreenHeight});
  CHECK(layout.back_key.y + layout.back_key.height == layout.viewport.height);
  const auto* b1 = layout.find("b1");
  REQUIRE(b1 != nullptr);
  CHECK(b1->bounds == Rect{24, kTopMargin + 3 * kRowHeight, kScreenWidth - 48, kRowHeight - kRowGap});
  CHECK(layout.find("body")->bounds.contains(b1->bounds));
  CHECK(layout.find("root")->bounds.contains(layout.find("body")->bounds));
  CHECK(to_json(layout) == to_json(layout_state(state)));
}

TEST_CASE("session on the line graph") {
  auto session = Session::start("s", line_graph(), "A");
  CHECK(session.plan().node_order == Ids{"A", "B", "C"});
  auto hint = session.current_hint();
  REQUIRE(hint);
  CHECK(hint->action_id == "a000");
  CHECK(hint->target == "B");
  CHECK(hint->overlay.label == "click");

  session.report_transition({"a000", std::nullopt, 100});
  CHECK(session.cursor() == 1);
  CHECK(session.metrics().replans == 0);
  session.report_transition({std::nullopt, "C", 200});
  CHECK_FALSE(session.current_hint());
  const auto metrics = session.metrics();
  CHECK(metrics.steps == 2);
  CHECK(metrics.state_coverage == 1.0);
  CHECK(metrics.deviations == 0);
}

TEST_CASE("single-state session has no hint") {
  StgGraph graph;
  graph.states.push_back(make_state("only"));
  graph.start_state = "only";
  auto session = Session::start("s", graph, "only");
  CHECK(session.plan().total_cost == 0);
  CHECK_FALSE(session.serve_hint(0));
  CHECK(session.event_log().back().kind == EventKind::hint_served);
}

TEST_CASE("session plan equals replan output") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    const auto graph = random_strong_graph(9, 0.2, rng, 3);
    const auto session = Session::start("s", graph, graph.start_state);
    CHECK(session.plan() == replan(graph, graph.start_state, {graph.start_state}));
  }
}

TEST_CASE("hints over back and click actions") {
  const auto graph = star_graph();
  auto session = Session::start("s", graph, "H");
  const auto first = session.current_hint();
  REQUIRE(first);
  const auto& hub = *find_state(graph, "H");
  const auto layout = layout_state(hub);
  CHECK(first->overlay.bounds == layout.find(first->component_ref)->bounds);

  session.report_transition({first->action_id, std::nullopt, 10});
  const auto back = session.current_hint();
  REQUIRE(back);
  CHECK(back->trigger == Trigger::back);
  CHECK(back->component_ref == kTouchBack);
  CHECK(back->overlay.label == "back");
  CHECK(back->overlay.bounds == layout_state(*find_state(graph, session.current())).back_key);

  ActionEdge press{"p", "H", "L1", Trigger::long_press, first->component_ref, Provenance::manual};
  CHECK(make_hint(press, hub).overlay.label == "long press");
}

TEST_CASE("deviation replans from the observed state") {
  auto session = Session::start("s", line_with_return(), "A");
  REQUIRE(session.current_hint()->target == "B");
  session.report_transition({std::nullopt, "C", 50});
  CHECK(session.current() == "C");
  CHECK(session.metrics().deviations == 1);
  CHECK(session.event_log().back().kind == EventKind::deviation);
  CHECK(session.plan() == replan(session.graph(), "C", {"A", "C"}));
  CHECK(session.plan().targets == Ids{"B"});
  CHECK(session.cursor() == 0);

  session.report_transition({"a002", std::nullopt, 60});
  session.report_transition({"a001", std::nullopt, 70});
  CHECK(session.visit_counts().at("C") == 2);
  CHECK(session.metrics().repeated_visits == 1);
}

TEST_CASE("transition validation") {
  auto session = Session::start("s", line_graph(), "A");
  CHECK(code_of([&] { session.report_transition({"a001", std::nullopt, 1}); }) == ErrorCode::validation);
  CHECK(code_of([&] { session.report_transition({"a000", "C", 1}); }) == ErrorCode::validation);
  CHECK(code_of([&] { session.report_transition({std::nullopt, "Q", 1}); }) == ErrorCode::unknown_state);
  CHECK(code_of([&] { session.report_transition({std::nullopt, std::nullopt, 1}); }) == ErrorCode::validation);
  session.report_transition({"a000", std::nullopt, 100});
  CHECK(code_of([&] { session.report_transition({"a001", std::nullopt, 99}); }) == ErrorCode::validation);
  CHECK(code_of([] { Session::start("s", line_graph(), "Z"); }) == ErrorCode::not_found);
}

TEST_CASE("idle ticks") {
  auto session = Session::start("s", line_with_return(), "A");
  const auto fresh = session.plan();
  CHECK_FALSE(session.on_idle(4000));
  CHECK(session.plan() == fresh);
  CHECK(session.on_idle(6000));
  CHECK(plan_document(session.plan()).dump() == plan_document(fresh).dump());
  CHECK(session.event_log().back().kind == EventKind::idle_tick);

  session.report_transition({std::nullopt, "C", 7000});
  const auto after = session.plan();
  CHECK_FALSE(session.on_idle(11000));
  CHECK(session.on_idle(13001));
  CHECK(session.plan().node_order.front() == "C");
  CHECK(session.plan() == after);
}

TEST_CASE("unknown state registration") {
  auto session = Session::start("s", line_with_return(), "A");
  auto fresh = make_state("N");
  fresh.root.children.push_back(make_button("home"));
  session.register_unknown_state(fresh, {"n0", "A", "N", Trigger::click, "b_a000", Provenance::dynamic_pass}, 10);
  CHECK(session.current() == "N");
  CHECK(find_action(session.graph(), "n0")->provenance == Provenance::manual);
  // No way out of N yet: everything else is uncovered.
  CHECK(session.plan().uncovered == std::set<std::string>{"B", "C"});
  CHECK(session.plan().total_cost == 0);

  auto session2 = Session::start("s", line_with_return(), "A");
  session2.register_unknown_state(fresh, {"n0", "A", "N", Trigger::click, "b_a000", Provenance::dynamic_pass}, 10);
  auto onward = make_state("M");
  onward.root.children.push_back(make_button("go"));
  session2.register_unknown_state(onward, {"n1", "N", "M", Trigger::click, "home", Provenance::dynamic_pass}, 20);
  CHECK(session2.metrics().states_total == 5);

  auto reachable = Session::start("s", line_with_return(), "A");
  auto link_back = make_state("R");
  link_back.root.children.push_back(make_button("toB"));
  reachable.register_unknown_state(link_back, {"r0", "A", "R", Trigger::click, "b_a000", Provenance::dynamic_pass}, 5);
  CHECK(code_of([&] {
          reachable.register_unknown_state(make_state("A"), {"x", "R", "A", Trigger::back, "touch_back", {}}, 6);
        }) == ErrorCode::precondition);
  auto malformed = make_state("");
  CHECK(code_of([&] {
          reachable.register_unknown_state(malformed, {"x", "R", "", Trigger::back, "touch_back", {}}, 6);
        }) == ErrorCode::validation);
  auto dangling = make_state("Y");
  CHECK(code_of([&] {
          reachable.register_unknown_state(dangling, {"x", "Q", "Y", Trigger::back, "touch_back", {}}, 6);
        }) == ErrorCode::validation);

  SessionConfig closed;
  closed.allow_unknown_states = false;
  auto strict = Session::start("s", line_graph(), "A", closed);
  CHECK(code_of([&] {
          strict.register_unknown_state(make_state("Y"), {"x", "A", "Y", Trigger::back, "touch_back", {}}, 6);
        }) == ErrorCode::unknown_state);
}

TEST_CASE("registered state that links back is covered by later plans") {
  auto session = Session::start("s", line_with_return(), "A");
  auto detour = make_state("N");
  detour.root.children.push_back(make_button("toB"));
  session.register_unknown_state(detour, {"n0", "A", "N", Trigger::click, "b_a000", Provenance::dynamic_pass}, 10);
  CHECK(session.plan().uncovered == std::set<std::string>{"B", "C"});
  session.register_unknown_transition({"n1", "N", "B", Trigger::click, "toB", Provenance::dynamic_pass}, 20);
  CHECK(session.current() == "B");
  CHECK(session.plan().uncovered.empty());
  CHECK(session.plan().targets == Ids{"C"});
  CHECK(session.unvisited_reachable() == std::set<std::string>{"C"});

  CHECK(code_of([&] {
          session.register_unknown_transition({"n2", "A", "C", Trigger::back, "touch_back", {}}, 30);
        }) == ErrorCode::validation);
  CHECK(code_of([&] {
          session.register_unknown_transition({"n2", "B", "Q", Trigger::back, "touch_back", {}}, 30);
        }) == ErrorCode::unknown_state);
  CHECK(code_of([&] {
          session.register_unknown_transition({"n2", "B", "C", Trigger::click, "b_a001", {}}, 30);
        }) == ErrorCode::precondition);

  const auto copy = replay("s", session.initial_graph(), "A", session.config(), session.event_log());
  CHECK(copy.snapshot() == session.snapshot());
}

TEST_CASE("replaying the event log reproduces the session") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const auto graph = random_strong_graph(8, 0.25, rng, 2);
    auto session = Session::start("s", graph, graph.start_state);
    Millis now = 0;
    for (int step = 0; step < 12; ++step) {
      now += 1000 + static_cast<Millis>(rng() % 7000);
      if (rng() % 4 == 0) {
        session.on_idle(now);
        continue;
      }
      session.serve_hint(now);
      GraphIndex index(session.graph());
      const auto out = index.outgoing(session.current());
      session.report_transition({out[rng() % out.size()]->action_id, std::nullopt, now});
    }
    const auto copy = replay("s", session.initial_graph(), session.start_state(), session.config(), session.event_log());
    CHECK(copy.snapshot().dump() == session.snapshot().dump());
    CHECK(to_json(copy.metrics()).dump() == to_json(session.metrics()).dump());
  }
}

TEST_CASE("events round-trip through JSON") {
  auto session = Session::start("s", line_with_return(), "A");
  session.serve_hint(1);
  session.report_transition({std::nullopt, "C", 2});
  auto fresh = make_state("N");
  session.register_unknown_state(fresh, {"n0", "C", "N", Trigger::back, "touch_back", Provenance::manual}, 3);
  session.on_idle(9000);
  for (const auto& event : session.event_log()) CHECK(event_from_json(to_json(event)) == event);
}
