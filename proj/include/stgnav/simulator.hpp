#pragma once

// Closed-loop evaluation: simulated testers explore a synthetic app, either
// driven by a guidance session or by a baseline strategy, and the harness
// records coverage and step counts.

#include "stgnav/app_model.hpp"
#include "stgnav/capture.hpp"
#include "stgnav/guidance.hpp"
#include "stgnav/planner.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stgnav {

enum class TesterKind { guided, random, greedy_nearest, dfs };

struct TesterModel {
  TesterKind kind = TesterKind::guided;
  /// Probability of following the hint; guided testers only.
  double compliance = 1.0;
  std::uint64_t seed = 0;

  bool operator==(const TesterModel&) const = default;
};

/// "guided:0.5", "random", "greedy", "greedy_nearest", "dfs".
TesterModel parse_tester(std::string_view text);
std::string tester_label(const TesterModel& tester);

struct CoveragePoint {
  std::uint64_t step = 0;
  double coverage = 0.0;

  bool operator==(const CoveragePoint&) const = default;
};

struct SimMetrics {
  std::uint64_t steps_taken = 0;
  std::size_t states_visited = 0;
  std::size_t states_total = 0;
  std::size_t activities_visited = 0;
  std::size_t activities_total = 0;
  std::uint64_t repeated_visits = 0;
  /// One point per step at which coverage increased (plus step 0).
  std::vector<CoveragePoint> coverage_curve;
  bool reached_full_coverage = false;

  double state_coverage() const {
    return states_total == 0 ? 0.0 : static_cast<double>(states_visited) / static_cast<double>(states_total);
  }
  bool operator==(const SimMetrics&) const = default;
};

Json to_json(const SimMetrics& metrics);

/// Called after every step of a guided run with the session as it stands.
using SessionObserver = std::function<void(const Session&)>;

struct SimulationOptions {
  PlannerOptions planner;
  SessionObserver observer;
};

/// Explores `app.true_graph` from its start state until every state is
/// visited or `budget` steps are spent. `seed` drives the tester's random
/// choices (the tester's own seed is mixed in).
SimMetrics run_simulation(const AppModel& app, const TesterModel& tester, std::uint64_t budget, std::uint64_t seed,
                          const SimulationOptions& options = {});

/// Same harness over an arbitrary graph.
SimMetrics run_simulation(const StgGraph& graph, const TesterModel& tester, std::uint64_t budget, std::uint64_t seed,
                          const SimulationOptions& options = {});

struct TesterSummary {
  TesterModel tester;
  std::string label;
  /// Steps until full coverage; runs that never get there count as budget.
  double median_steps = 0.0;
  double q1_steps = 0.0;
  double q3_steps = 0.0;
  double median_coverage = 0.0;
  double full_coverage_rate = 0.0;
  /// 1 - guided(1.0) median / this median.
  double guided_savings = 0.0;
  std::vector<SimMetrics> runs;
};

struct ComparisonReport {
  std::uint64_t budget = 0;
  std::size_t n_seeds = 0;
  double guided_median_steps = 0.0;
  std::vector<TesterSummary> testers;
};

/// Runs every tester with seeds 1..n_seeds. Throws ErrorCode::parameter when
/// n_seeds is 0.
ComparisonReport compare_strategies(const AppModel& app, const std::vector<TesterModel>& testers, std::uint64_t budget,
                                    std::size_t n_seeds);

Json comparison_document(const ComparisonReport& report, bool include_curves);

/// Exhaustive minimum over all visiting orders of the non-start states of
/// the summed closure distances; kUnreachable if some state is unreachable.
/// Throws ErrorCode::capacity above 9 states.
Cost brute_force_optimal_path(const StgGraph& graph, const std::string& start);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

}  // namespace stgnav
