#include "stgnav/cli.hpp"

#include "stgnav/app_model.hpp"
#include "stgnav/error.hpp"
#include "stgnav/merging.hpp"
#include "stgnav/planner.hpp"
#include "stgnav/service.hpp"
#include "stgnav/simulator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace stgnav {
namespace {

std::string read_input(const std::string& path, std::istream& in) {
  std::stringstream buffer;
  if (path == "-") {
    buffer << in.rdbuf();
  } else {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorCode::not_found, "cannot open " + path, path);
    buffer << file.rdbuf();
  }
  return buffer.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::not_found, "cannot write " + path, path);
  file << text;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

// Loads a graph document and rejects it with the full violation list when
// any invariant fails.
StgGraph load_valid_graph(const std::string& path, std::istream& in, std::ostream& err) {
  auto graph = load_graph(read_input(path, in));
  if (auto violations = validate(graph); !violations.empty()) {
    err << dump({{"version", kDocumentVersion}, {"violations", violations_to_json(violations)}});
    throw Error(ErrorCode::validation, std::to_string(violations.size()) + " graph invariant violation(s)");
  }
  return graph;
}

std::vector<TesterModel> parse_testers(const std::string& list) {
  std::vector<TesterModel> out;
  std::stringstream stream(list);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) out.push_back(parse_tester(item));
  }
  if (out.empty()) throw Error(ErrorCode::parameter, "no testers given", "--testers");
  return out;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coverage-path guidance for GUI state transition graphs", "stgnav"};
  app.require_subcommand(1);

  AppParams params;
  std::string output = "-";
  auto* generate = app.add_subcommand("generate", "Write a synthetic app fixture");
  generate->add_option("--seed", params.seed, "Random seed")->capture_default_str();
  generate->add_option("--activities", params.n_activities, "Number of activities")->capture_default_str();
  generate->add_option("--states-per-activity", params.states_per_activity, "States per activity")
      ->capture_default_str();
  generate->add_option("--branching", params.branching, "Click actions per state")->capture_default_str();
  generate->add_option("--duplicate-rate", params.duplicate_rate, "Fraction of states with content variants")
      ->capture_default_str();
  generate->add_option("-o,--output", output, "Output file");

  std::string app_path = "-";
  std::uint64_t budget = 0;
  std::uint64_t seed = 1;
  std::string display_path;
  std::string trace_path;
  auto* extract = app.add_subcommand("extract", "Static + dynamic extraction of an app fixture into an STG");
  extract->add_option("--app", app_path, "App fixture file (- for stdin)")->capture_default_str();
  extract->add_option("--budget", budget, "Random-walk steps (default 10 x true action count)");
  extract->add_option("--seed", seed, "Exploration seed")->capture_default_str();
  extract->add_option("-o,--output", output, "STG output file");
  extract->add_option("--display", display_path, "Also write the graph display document here");
  extract->add_option("--trace", trace_path, "Also write the exploration trace here");

  std::string graph_path = "-";
  double tau = kDefaultSimilarityThreshold;
  std::string report_path;
  auto* merge = app.add_subcommand("merge", "Signature and context-aware state merging");
  merge->add_option("--graph", graph_path, "STG file (- for stdin)")->capture_default_str();
  merge->add_option("--tau", tau, "Similarity threshold in (0, 1]")->capture_default_str();
  merge->add_option("-o,--output", output, "Merged STG output file");
  merge->add_option("--report", report_path, "Also write the merge reports here");

  std::string start;
  std::size_t n_exact = kDefaultExactCapacity;
  std::optional<double> plan_tau;
  auto* plan = app.add_subcommand("plan", "Plan a minimal-step coverage path");
  plan->add_option("--graph", graph_path, "STG file (- for stdin)")->capture_default_str();
  plan->add_option("--start", start, "Start state (default: the graph's start state)");
  plan->add_option("--tau", plan_tau, "Merge at this threshold before planning");
  plan->add_option("--n-exact", n_exact, "Largest target set planned exactly")->capture_default_str();
  plan->add_option("-o,--output", output, "Plan output file");

  std::string testers = "guided:1.0,random,greedy,dfs";
  std::size_t seeds = 50;
  std::uint64_t sim_budget = 10000;
  std::string curves_path;
  auto* simulate = app.add_subcommand("simulate", "Compare tester models on an app fixture");
  simulate->add_option("--app", app_path, "App fixture file (- for stdin)")->capture_default_str();
  simulate->add_option("--testers", testers, "Comma-separated tester models")->capture_default_str();
  simulate->add_option("--budget", sim_budget, "Step budget per run")->capture_default_str();
  simulate->add_option("--seeds", seeds, "Seeds per tester")->capture_default_str();
  simulate->add_option("-o,--output", output, "Report output file");
  simulate->add_option("--emit-curves", curves_path, "Write the report with per-run coverage curves here");

  ServiceConfig service;
  auto* serve = app.add_subcommand("serve", "Run the guidance HTTP service");
  serve->add_option("--host", service.host, "Listen address (env STGNAV_LISTEN=host:port overrides)")
      ->capture_default_str();
  serve->add_option("--port", service.port, "Listen port")->capture_default_str();
  serve->add_option("--idle-ms", service.idle_threshold_ms, "Idle replan threshold in ms")->capture_default_str();
  serve->add_option("--tau", service.tau, "Merge threshold for uploaded graphs")->capture_default_str();
  serve->add_option("--n-exact", service.n_exact, "Largest target set planned exactly")->capture_default_str();
  serve->add_option("--fixtures", service.fixture_dir, "Directory of fixtures to preload");
  serve->add_option("--log-dir", service.log_dir, "Directory for session event logs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (generate->parsed()) {
      write_output(output, save_app(generate_random_app(params)), out);
    } else if (extract->parsed()) {
      const auto model = load_app(read_input(app_path, in));
      if (auto violations = validate_app(model); !violations.empty()) {
        err << dump({{"version", kDocumentVersion}, {"violations", violations_to_json(violations)}});
        throw Error(ErrorCode::validation, "invalid app fixture");
      }
      const auto steps = budget > 0 ? budget : std::max<std::uint64_t>(1, 10 * model.true_graph.actions.size());
      const auto explored = dynamic_explore(model, steps, seed);
      const auto combined = combine(static_extract(model), explored.graph);
      write_output(output, save_graph(combined), out);
      if (!display_path.empty()) write_output(display_path, dump(display_document(combined)), out);
      if (!trace_path.empty()) write_output(trace_path, dump(trace_to_json(explored.trace)), out);
    } else if (merge->parsed()) {
      const auto graph = load_valid_graph(graph_path, in, err);
      auto signature = signature_merge(graph);
      auto context = context_merge(signature.graph, tau);
      write_output(output, save_graph(context.graph), out);
      if (!report_path.empty()) {
        write_output(report_path,
                     dump({{"version", kDocumentVersion},
                           {"reports", {merge_report_document(signature.report), merge_report_document(context.report)}}}),
                     out);
      }
    } else if (plan->parsed()) {
      auto graph = load_valid_graph(graph_path, in, err);
      if (plan_tau) graph = context_merge(signature_merge(graph).graph, *plan_tau).graph;
      const auto from = start.empty() ? graph.start_state : start;
      PlannerOptions options;
      options.exact_capacity = n_exact;
      write_output(output, dump(plan_document(replan(graph, from, {}, options))), out);
    } else if (simulate->parsed()) {
      const auto model = load_app(read_input(app_path, in));
      const auto report = compare_strategies(model, parse_testers(testers), sim_budget, seeds);
      write_output(output, dump(comparison_document(report, false)), out);
      if (!curves_path.empty()) write_output(curves_path, dump(comparison_document(report, true)), out);
    } else if (serve->parsed()) {
      if (const char* listen = std::getenv("STGNAV_LISTEN"); listen != nullptr && *listen != '\0') {
        const std::string value(listen);
        const auto colon = value.rfind(':');
        service.host = value.substr(0, colon);
        if (colon != std::string::npos) service.port = std::stoi(value.substr(colon + 1));
      }
      GuidanceService server(service);
      const auto restored = server.restore_sessions();
      err << "stgnav: serving on " << service.host << ":" << service.port << " (" << restored
          << " session(s) restored)\n";
      if (!server.listen()) throw Error(ErrorCode::parameter, "cannot listen on " + service.host);
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::parameter ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace stgnav
