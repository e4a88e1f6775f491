// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "../support.hpp"

#include "stgnav/guidance.hpp"
#include "stgnav/merging.hpp"
#include "stgnav/simulator.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace stgnav;
using namespace stgnav::testing;

namespace {

// Pinned tolerances.
constexpr std::size_t kOptimalityGraphs = 200;
constexpr std::size_t kOptimalityMaxStates = 9;
constexpr double kOptimalitySeconds = 10.0;
constexpr std::size_t kClosureGraphs = 50;
constexpr std::size_t kClosureMaxStates = 12;
constexpr std::uint64_t kSavingsApps = 20;
constexpr std::size_t kSavingsSeeds = 50;
constexpr std::uint64_t kSavingsBudget = 10000;
constexpr double kRequiredSavings = 0.20;
constexpr std::uint64_t kMergeApps = 20;
constexpr double kMergeDuplicateRate = 0.5;
constexpr double kMergeTau = 0.9;
constexpr std::uint64_t kReplanSessions = 100;
constexpr double kReplanCompliance = 0.5;
constexpr std::uint64_t kReplanBudgetFactor = 10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& criterion) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = criterion();
  } catch (const std::exception& e) {
    outcome = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!outcome.pass) ++failures;
  std::printf("%s  %-22s %s (%.2fs)\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str(), seconds);
  std::fflush(stdout);
}

Outcome planner_optimality() {
  std::mt19937_64 rng(2024);
  std::size_t mismatches = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < kOptimalityGraphs; ++i) {
    const auto n = 2 + rng() % (kOptimalityMaxStates - 1);
    const auto graph = random_strong_graph(n, 0.1 + (rng() % 30) / 100.0, rng, 1 + rng() % 3);
    const auto from = node_name(rng() % n);
    const auto plan = plan_coverage_path(graph, from, all_states(graph));
    if (plan.total_cost != brute_force_optimal_path(graph, from)) ++mismatches;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream detail;
  detail << kOptimalityGraphs << " graphs <= " << kOptimalityMaxStates << " states, " << mismatches
         << " cost mismatches vs brute force, " << seconds << "s (limit " << kOptimalitySeconds << "s)";
  return {mismatches == 0 && seconds < kOptimalitySeconds, detail.str()};
}

Outcome floyd_correctness() {
  std::mt19937_64 rng(99);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < kClosureGraphs; ++i) {
    const auto graph = random_graph(2 + rng() % (kClosureMaxStates - 1), 0.05 + (rng() % 35) / 100.0, rng);
    const auto closure = metric_closure(graph);
    const auto expected = bfs_distances(graph);
    for (std::size_t a = 0; a < expected.size(); ++a) {
      for (std::size_t b = 0; b < expected.size(); ++b) mismatches += closure.dist.at(a, b) != expected[a][b];
    }
  }
  return {mismatches == 0,
          std::to_string(kClosureGraphs) + " graphs, " + std::to_string(mismatches) + " entries differ from BFS"};
}

// Evaluated per fixture: every app must clear the bar on its own.
Outcome step_savings() {
  const TesterModel guided{TesterKind::guided, 1.0, 0};
  const TesterModel random{TesterKind::random, 1.0, 0};
  double worst = 1.0;
  double total = 0.0;
  std::size_t below = 0;
  for (std::uint64_t seed = 1; seed <= kSavingsApps; ++seed) {
    const auto app = generate_random_app({3, 10, 2, 0.0, seed});
    const auto comparison = compare_strategies(app, {guided, random}, kSavingsBudget, kSavingsSeeds);
    const double savings = comparison.testers[1].guided_savings;
    worst = std::min(worst, savings);
    total += savings;
    below += savings < kRequiredSavings;
  }
  std::ostringstream detail;
  detail.precision(3);
  detail << kSavingsApps << " apps x " << kSavingsSeeds << " seeds, guided(1.0) vs random median savings: min "
         << worst * 100 << "%, mean " << total / kSavingsApps * 100 << "%, " << below << " apps below "
         << kRequiredSavings * 100 << "%";
  return {below == 0, detail.str()};
}

// state id -> final representative after a sequence of merge reports.
std::map<std::string, std::string> representatives(const StgGraph& graph, const std::vector<MergeReport>& reports) {
  std::map<std::string, std::string> rep;
  for (const auto& state : graph.states) rep[state.state_id] = state.state_id;
  for (const auto& merge : reports) {
    std::map<std::string, std::string> step;
    for (const auto& cluster : merge.clusters) {
      for (const auto& member : cluster.merged) step[member] = cluster.representative;
    }
    for (auto& [_, r] : rep) {
      if (auto it = step.find(r); it != step.end()) r = it->second;
    }
  }
  return rep;
}

Outcome merging_ground_truth() {
  std::size_t variant_pairs = 0;
  std::size_t recalled = 0;
  std::size_t cross_activity = 0;
  std::size_t not_idempotent = 0;
  for (std::uint64_t seed = 1; seed <= kMergeApps; ++seed) {
    const auto app = generate_random_app({3, 10, 2, kMergeDuplicateRate, seed});
    const auto explored = dynamic_explore(app, 20 * app.true_graph.actions.size(), seed);
    const auto raw = combine(static_extract(app), explored.graph);
    const auto signature = signature_merge(raw);
    const auto rep = representatives(raw, {signature.report});
    std::map<std::string, std::string> activity;
    for (const auto& state : raw.states) activity[state.state_id] = state.activity;
    for (const auto& a : raw.states) {
      for (const auto& b : raw.states) {
        if (a.state_id >= b.state_id) continue;
        const bool same_cluster = rep.at(a.state_id) == rep.at(b.state_id);
        if (base_state_id(a.state_id) == base_state_id(b.state_id)) {
          ++variant_pairs;
          recalled += same_cluster;
        }
        cross_activity += same_cluster && a.activity != b.activity;
      }
    }
    const auto once = context_merge(signature.graph, kMergeTau);
    const auto twice = context_merge(once.graph, kMergeTau);
    not_idempotent += !(twice.graph == once.graph && twice.report.clusters.empty());
  }
  std::ostringstream detail;
  detail << kMergeApps << " apps at duplicate_rate " << kMergeDuplicateRate << ": recall " << recalled << "/"
         << variant_pairs << " variant pairs, " << cross_activity << " cross-activity merges, context tau="
         << kMergeTau << " non-idempotent on " << not_idempotent << " apps";
  return {variant_pairs > 0 && recalled == variant_pairs && cross_activity == 0 && not_idempotent == 0, detail.str()};
}

struct ReplanRun {
  std::size_t deviations_checked = 0;
  std::size_t target_mismatches = 0;
  bool covered = false;
  std::optional<Session> final_session;
};

ReplanRun replan_session(std::uint64_t seed) {
  const auto app = generate_random_app({3, 8, 2, 0.0, seed});
  const auto& graph = app.true_graph;
  const auto initial = replan(graph, graph.start_state, {graph.start_state});
  const auto budget = kReplanBudgetFactor * static_cast<std::uint64_t>(std::max<Cost>(1, initial.total_cost));
  ReplanRun run;
  SimulationOptions options;
  options.observer = [&](const Session& session) {
    run.final_session = session;
    const auto& log = session.event_log();
    if (log.empty() || log.back().kind != EventKind::deviation) return;
    ++run.deviations_checked;
    std::set<std::string> expected;
    for (const auto& id : reachable_from(session.graph(), session.current())) {
      if (!session.visit_counts().contains(id)) expected.insert(id);
    }
    const auto& plan = session.plan();
    const std::set<std::string> planned(plan.targets.begin(), plan.targets.end());
    run.target_mismatches += planned != expected;
  };
  const auto metrics =
      run_simulation(app, {TesterKind::guided, kReplanCompliance, 0}, budget, seed, options);
  run.covered = metrics.reached_full_coverage;
  return run;
}

std::vector<Session> replan_sessions;

Outcome replan_correctness() {
  std::size_t deviations = 0;
  std::size_t mismatches = 0;
  std::size_t uncovered = 0;
  for (std::uint64_t seed = 1; seed <= kReplanSessions; ++seed) {
    auto run = replan_session(seed);
    deviations += run.deviations_checked;
    mismatches += run.target_mismatches;
    uncovered += !run.covered;
    if (run.final_session) replan_sessions.push_back(std::move(*run.final_session));
  }
  std::ostringstream detail;
  detail << kReplanSessions << " guided(" << kReplanCompliance << ") sessions, " << deviations
         << " deviations checked, " << mismatches << " plan/target mismatches, " << uncovered
         << " sessions short of full coverage within " << kReplanBudgetFactor << "x plan cost";
  return {deviations > 0 && mismatches == 0 && uncovered == 0, detail.str()};
}

// Sessions with every input kind: hint reads, idle ticks, deviations and
// registrations of states and transitions the graph did not know.
Session mixed_session(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto app = generate_random_app({3, 5, 2, 0.3, seed});
  auto session = Session::start("mixed-" + std::to_string(seed), app.true_graph, app.true_graph.start_state);
  Millis now = 0;
  int fresh = 0;
  for (int step = 0; step < 60; ++step) {
    now += 200 + static_cast<Millis>(rng() % 8000);
    const auto roll = rng() % 10;
    if (roll == 0) {
      session.on_idle(now);
      continue;
    }
    if (roll == 1) {
      auto state = make_state("new" + std::to_string(fresh), "Extra");
      state.root.children.push_back(make_button("out"));
      ActionEdge via{"x" + std::to_string(fresh), session.current(), state.state_id, Trigger::back,
                     std::string(kTouchBack), Provenance::dynamic_pass};
      session.register_unknown_state(state, via, now);
      ++fresh;
      // Link the new state back to a known one.
      const auto& states = session.graph().states;
      ActionEdge out{"y" + std::to_string(fresh), session.current(), states[rng() % states.size()].state_id,
                     Trigger::click, "out", Provenance::dynamic_pass};
      if (out.target != session.current()) session.register_unknown_transition(out, now);
      continue;
    }
    session.serve_hint(now);
    GraphIndex index(session.graph());
    const auto outgoing = index.outgoing(session.current());
    if (outgoing.empty()) break;
    const auto hint = session.current_hint();
    const bool comply = hint && rng() % 2 == 0;
    const auto action = comply ? hint->action_id : outgoing[rng() % outgoing.size()]->action_id;
    if (rng() % 3 == 0) {
      session.report_transition({std::nullopt, find_action(session.graph(), action)->target, now});
    } else {
      session.report_transition({action, std::nullopt, now});
    }
  }
  return session;
}

Outcome log_replay() {
  std::vector<Session> sessions = replan_sessions;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) sessions.push_back(mixed_session(seed));
  std::size_t metric_diffs = 0;
  std::size_t snapshot_diffs = 0;
  std::size_t events = 0;
  std::map<std::string, std::size_t> kinds;
  for (const auto& session : sessions) {
    events += session.event_log().size();
    for (const auto& event : session.event_log()) ++kinds[std::string(to_string(event.kind))];
    const auto copy =
        replay(session.id(), session.initial_graph(), session.start_state(), session.config(), session.event_log());
    metric_diffs += to_json(copy.metrics()).dump() != to_json(session.metrics()).dump();
    snapshot_diffs += copy.snapshot().dump() != session.snapshot().dump();
  }
  std::ostringstream detail;
  detail << sessions.size() << " sessions (" << events << " events:";
  for (const auto& [kind, count] : kinds) detail << " " << kind << "=" << count;
  detail << "): " << metric_diffs << " metric diffs, "
         << snapshot_diffs << " snapshot diffs after replay";
  return {!sessions.empty() && metric_diffs == 0 && snapshot_diffs == 0, detail.str()};
}

}  // namespace

int main() {
  report("planner-optimality", planner_optimality);
  report("floyd-correctness", floyd_correctness);
  report("step-savings", step_savings);
  report("merging-ground-truth", merging_ground_truth);
  report("replan-correctness", replan_correctness);
  report("log-replay", log_replay);
  std::printf("%d criteria failed\n", failures);
  return failures;
}
