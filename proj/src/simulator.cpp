#include "stgnav/simulator.hpp"

#include "stgnav/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace stgnav {
namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

// Coverage bookkeeping shared by every tester model.
class Tracker {
 public:
  Tracker(const StgGraph& graph, const std::string& start) {
    metrics_.states_total = graph.states.size();
    for (const auto& state : graph.states) {
      activity_of_.emplace(state.state_id, state.activity);
      activities_.insert(state.activity);
    }
    metrics_.activities_total = activities_.size();
    visit(start);
    metrics_.coverage_curve.push_back({0, metrics_.state_coverage()});
  }

  void step(const std::string& state) {
    ++metrics_.steps_taken;
    const auto before = metrics_.states_visited;
    visit(state);
    if (metrics_.states_visited != before) {
      metrics_.coverage_curve.push_back({metrics_.steps_taken, metrics_.state_coverage()});
    }
  }

  bool visited(const std::string& state) const { return counts_.contains(state); }
  bool complete() const { return metrics_.states_visited == metrics_.states_total; }

  SimMetrics finish() {
    metrics_.reached_full_coverage = complete();
    return metrics_;
  }

 private:
  void visit(const std::string& state) {
    if (++counts_[state] == 1) {
      ++metrics_.states_visited;
      if (auto it = activity_of_.find(state); it != activity_of_.end() && seen_activities_.insert(it->second).second) {
        ++metrics_.activities_visited;
      }
    } else {
      ++metrics_.repeated_visits;
    }
  }

  SimMetrics metrics_;
  std::map<std::string, std::uint64_t> counts_;
  std::map<std::string, std::string> activity_of_;
  std::set<std::string> activities_;
  std::set<std::string> seen_activities_;
};

// First hop towards the nearest unvisited state (ties to the smallest node
// index); nullopt when none is reachable.
std::optional<std::size_t> hop_to_nearest_unvisited(const MetricClosure& closure, std::size_t from,
                                                    const Tracker& tracker) {
  const auto& nodes = closure.dist.nodes;
  std::optional<std::size_t> best;
  Cost best_d = kUnreachable;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (j == from || tracker.visited(nodes.id(j))) continue;
    const Cost d = closure.dist.at(from, j);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (!best) return std::nullopt;
  return closure.pred.at(from, *best);
}

const ActionEdge* edge_between(const GraphIndex& index, const std::string& from, const std::string& to) {
  for (const auto* edge : index.outgoing(from)) {
    if (edge->target == to) return edge;
  }
  return nullptr;
}

SimMetrics run_guided(const StgGraph& graph, const TesterModel& tester, std::uint64_t budget, Rng& rng,
                      const SimulationOptions& options) {
  SessionConfig config;
  config.planner = options.planner;
  auto session = Session::start("simulation", graph, graph.start_state, config);
  Tracker tracker(graph, graph.start_state);
  const GraphIndex index(graph);
  std::bernoulli_distribution follow(std::clamp(tester.compliance, 0.0, 1.0));
  for (std::uint64_t step = 0; step < budget && !tracker.complete(); ++step) {
    const auto outgoing = index.outgoing(session.current());
    if (outgoing.empty()) break;
    const auto hint = session.current_hint();
    const bool comply = follow(rng);
    std::string action = hint && comply ? hint->action_id : outgoing[pick(rng, outgoing.size())]->action_id;
    session.report_transition({action, std::nullopt, static_cast<Millis>(step + 1) * 1000});
    tracker.step(session.current());
    if (options.observer) options.observer(session);
  }
  return tracker.finish();
}

SimMetrics run_random(const StgGraph& graph, std::uint64_t budget, Rng& rng) {
  Tracker tracker(graph, graph.start_state);
  const GraphIndex index(graph);
  std::string current = graph.start_state;
  for (std::uint64_t step = 0; step < budget && !tracker.complete(); ++step) {
    const auto outgoing = index.outgoing(current);
    if (outgoing.empty()) break;
    current = outgoing[pick(rng, outgoing.size())]->target;
    tracker.step(current);
  }
  return tracker.finish();
}

SimMetrics run_greedy(const StgGraph& graph, std::uint64_t budget) {
  Tracker tracker(graph, graph.start_state);
  const auto closure = metric_closure(graph);
  const auto& nodes = closure.dist.nodes;
  std::size_t current = nodes.at(graph.start_state);
  for (std::uint64_t step = 0; step < budget && !tracker.complete(); ++step) {
    const auto hop = hop_to_nearest_unvisited(closure, current, tracker);
    if (!hop) break;
    current = *hop;
    tracker.step(nodes.id(current));
  }
  return tracker.finish();
}

SimMetrics run_dfs(const StgGraph& graph, std::uint64_t budget, Rng& rng) {
  Tracker tracker(graph, graph.start_state);
  const GraphIndex index(graph);
  const auto closure = metric_closure(graph);
  const auto& nodes = closure.dist.nodes;
  std::string current = graph.start_state;
  std::vector<std::string> stack;
  for (std::uint64_t step = 0; step < budget && !tracker.complete(); ++step) {
    std::vector<const ActionEdge*> fresh;
    for (const auto* edge : index.outgoing(current)) {
      if (!tracker.visited(edge->target)) fresh.push_back(edge);
    }
    std::string next;
    if (!fresh.empty()) {
      stack.push_back(current);
      next = fresh[pick(rng, fresh.size())]->target;
    } else {
      while (!stack.empty() && stack.back() == current) stack.pop_back();
      const auto from = nodes.at(current);
      if (!stack.empty() && closure.dist.reachable(from, nodes.at(stack.back()))) {
        // Backtrack, preferring a back action straight to the parent.
        const auto& parent = stack.back();
        const auto* direct = edge_between(index, current, parent);
        next = direct != nullptr ? parent : nodes.id(closure.pred.at(from, nodes.at(parent)));
      } else {
        stack.clear();
        const auto hop = hop_to_nearest_unvisited(closure, from, tracker);
        if (!hop) break;
        next = nodes.id(*hop);
      }
    }
    current = next;
    if (!stack.empty() && stack.back() == current) stack.pop_back();
    tracker.step(current);
  }
  return tracker.finish();
}

}  // namespace

TesterModel parse_tester(std::string_view text) {
  TesterModel tester;
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  if (name == "guided") {
    tester.kind = TesterKind::guided;
    if (colon != std::string_view::npos) {
      const std::string value(text.substr(colon + 1));
      char* end = nullptr;
      tester.compliance = std::strtod(value.c_str(), &end);
      if (value.empty() || end != value.c_str() + value.size() || !(tester.compliance >= 0.0 && tester.compliance <= 1.0)) {
        throw Error(ErrorCode::parameter, "guided compliance must be a number in [0, 1]", std::string(text));
      }
    }
    return tester;
  }
  if (colon != std::string_view::npos) {
    throw Error(ErrorCode::parameter, "only guided testers take a parameter", std::string(text));
  }
  if (name == "random") {
    tester.kind = TesterKind::random;
  } else if (name == "greedy" || name == "greedy_nearest") {
    tester.kind = TesterKind::greedy_nearest;
  } else if (name == "dfs") {
    tester.kind = TesterKind::dfs;
  } else {
    throw Error(ErrorCode::parameter, "unknown tester \"" + std::string(text) + "\"", std::string(text));
  }
  return tester;
}

std::string tester_label(const TesterModel& tester) {
  switch (tester.kind) {
    case TesterKind::guided: {
      char buffer[32];
      std::snprintf(buffer, sizeof buffer, "guided:%g", tester.compliance);
      return buffer;
    }
    case TesterKind::random: return "random";
    case TesterKind::greedy_nearest: return "greedy_nearest";
    case TesterKind::dfs: return "dfs";
  }
  return "?";
}

Json to_json(const SimMetrics& m) {
  Json curve = Json::array();
  for (const auto& point : m.coverage_curve) curve.push_back({point.step, point.coverage});
  return {{"steps_taken", m.steps_taken},
          {"states_visited", m.states_visited},
          {"states_total", m.states_total},
          {"activities_visited", m.activities_visited},
          {"activities_total", m.activities_total},
          {"repeated_visits", m.repeated_visits},
          {"reached_full_coverage", m.reached_full_coverage},
          {"coverage_curve", std::move(curve)}};
}

SimMetrics run_simulation(const AppModel& app, const TesterModel& tester, std::uint64_t budget, std::uint64_t seed,
                          const SimulationOptions& options) {
  return run_simulation(app.true_graph, tester, budget, seed, options);
}

SimMetrics run_simulation(const StgGraph& graph, const TesterModel& tester, std::uint64_t budget, std::uint64_t seed,
                          const SimulationOptions& options) {
  if (budget < 1) throw Error(ErrorCode::parameter, "simulation budget must be >= 1");
  if (find_state(graph, graph.start_state) == nullptr) {
    throw Error(ErrorCode::not_found, "graph has no start state", graph.start_state);
  }
  std::seed_seq seq{seed, tester.seed};
  Rng rng(seq);
  switch (tester.kind) {
    case TesterKind::guided: return run_guided(graph, tester, budget, rng, options);
    case TesterKind::random: return run_random(graph, budget, rng);
    case TesterKind::greedy_nearest: return run_greedy(graph, budget);
    case TesterKind::dfs: return run_dfs(graph, budget, rng);
  }
  return {};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double position = q * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const auto upper = std::min(lower + 1, values.size() - 1);
  const double fraction = position - static_cast<double>(lower);
  return values[lower] + fraction * (values[upper] - values[lower]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

ComparisonReport compare_strategies(const AppModel& app, const std::vector<TesterModel>& testers, std::uint64_t budget,
                                    std::size_t n_seeds) {
  if (n_seeds < 1) throw Error(ErrorCode::parameter, "n_seeds must be >= 1");
  auto summarize = [&](const TesterModel& model) {
    TesterSummary summary;
    summary.tester = model;
    summary.label = tester_label(model);
    std::vector<double> steps;
    std::vector<double> coverage;
    std::size_t full = 0;
    for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
      TesterModel seeded = model;
      seeded.seed = seed;
      auto metrics = run_simulation(app, seeded, budget, seed);
      steps.push_back(static_cast<double>(metrics.reached_full_coverage ? metrics.steps_taken : budget));
      coverage.push_back(metrics.state_coverage());
      full += metrics.reached_full_coverage ? 1 : 0;
      summary.runs.push_back(std::move(metrics));
    }
    summary.median_steps = median(steps);
    summary.q1_steps = quantile(steps, 0.25);
    summary.q3_steps = quantile(steps, 0.75);
    summary.median_coverage = median(coverage);
    summary.full_coverage_rate = static_cast<double>(full) / static_cast<double>(n_seeds);
    return summary;
  };

  ComparisonReport report;
  report.budget = budget;
  report.n_seeds = n_seeds;
  std::optional<double> guided;
  for (const auto& tester : testers) {
    report.testers.push_back(summarize(tester));
    if (tester.kind == TesterKind::guided && tester.compliance == 1.0) guided = report.testers.back().median_steps;
  }
  if (!guided) guided = summarize(TesterModel{TesterKind::guided, 1.0, 0}).median_steps;
  report.guided_median_steps = *guided;
  for (auto& summary : report.testers) {
    summary.guided_savings = summary.median_steps > 0.0 ? 1.0 - *guided / summary.median_steps : 0.0;
  }
  return report;
}

Json comparison_document(const ComparisonReport& report, bool include_curves) {
  Json testers = Json::array();
  for (const auto& summary : report.testers) {
    Json item = {{"tester", summary.label},
                 {"median_steps", summary.median_steps},
                 {"q1_steps", summary.q1_steps},
                 {"q3_steps", summary.q3_steps},
                 {"median_coverage", summary.median_coverage},
                 {"full_coverage_rate", summary.full_coverage_rate},
                 {"guided_savings", summary.guided_savings}};
    if (include_curves) {
      Json curves = Json::array();
      for (const auto& run : summary.runs) curves.push_back(to_json(run)["coverage_curve"]);
      item["coverage_curves"] = std::move(curves);
    }
    testers.push_back(std::move(item));
  }
  return {{"version", kDocumentVersion},
          {"budget", report.budget},
          {"n_seeds", report.n_seeds},
          {"guided_median_steps", report.guided_median_steps},
          {"testers", std::move(testers)}};
}

Cost brute_force_optimal_path(const StgGraph& graph, const std::string& start) {
  if (graph.states.size() > 9) {
    throw Error(ErrorCode::capacity, "brute-force oracle handles at most 9 states");
  }
  // Distances by breadth-first search, independent of the planner's closure.
  const NodeIndex nodes(graph);
  const std::size_t n = nodes.size();
  const auto from = nodes.at(start);
  std::vector<std::vector<std::size_t>> adjacency(n);
  for (const auto& edge : graph.actions) {
    const auto s = nodes.find(edge.source);
    const auto t = nodes.find(edge.target);
    if (s && t) adjacency[*s].push_back(*t);
  }
  std::vector<std::vector<Cost>> dist(n, std::vector<Cost>(n, kUnreachable));
  for (std::size_t source = 0; source < n; ++source) {
    std::vector<std::size_t> queue{source};
    dist[source][source] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto u = queue[head];
      for (auto v : adjacency[u]) {
        if (dist[source][v] != kUnreachable) continue;
        dist[source][v] = dist[source][u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == from) continue;
    if (dist[from][j] == kUnreachable) return kUnreachable;
    others.push_back(j);
  }
  Cost best = kUnreachable;
  do {
    Cost total = 0;
    std::size_t at = from;
    for (auto next : others) {
      total = add_cost(total, dist[at][next]);
      at = next;
    }
    best = std::min(best, total);
  } while (std::next_permutation(others.begin(), others.end()));
  return best;
}

}  // namespace stgnav
