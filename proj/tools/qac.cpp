#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "qac/experiments.hpp"
#include "qac/graph.hpp"
#include "qac/metrics.hpp"
#include "qac/protocol.hpp"
#include "qac/simulation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitError = 2;

int cmd_run(const std::string& config_path,
            const std::optional<std::uint64_t>& seed,
            const std::optional<int>& trials,
            const std::optional<std::string>& out_csv,
            const std::optional<std::string>& out_trace, int workers,
            bool allow_nonconverged) {
  qac::ExperimentConfig cfg = qac::load_experiment_config(config_path);
  if (seed) cfg.seed = *seed;
  if (trials) {
    if (*trials < 1) throw std::invalid_argument("--trials must be >= 1");
    cfg.trials = *trials;
  }
  if (out_csv) cfg.output_csv = *out_csv;
  if (out_trace) cfg.output_trace = *out_trace;
  if (cfg.choices_file && cfg.trials != 1)
    throw std::invalid_argument("scripted choices require trials = 1");

  const qac::ExperimentResult result = qac::run_experiment(cfg, workers);
  qac::write_experiment_outputs(cfg, result);

  if (!cfg.name.empty()) std::cout << "experiment: " << cfg.name << "\n";
  std::cout << qac::to_string(result.summary);
  if (cfg.output_csv) std::cout << "csv: " << *cfg.output_csv << "\n";
  if (cfg.output_trace) std::cout << "trace: " << *cfg.output_trace << "\n";

  int printed = 0;
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& rec = result.records[i];
    if (rec.failure && printed < 10) {
      std::cerr << "trial " << i << " failed: " << *rec.failure << "\n";
      ++printed;
    }
  }

  const bool all_converged =
      result.summary.converged == result.summary.trials &&
      result.summary.failed == 0;
  if (all_converged || allow_nonconverged) return kExitOk;
  std::cerr << (result.summary.trials - result.summary.converged)
            << " of " << result.summary.trials << " trials did not converge\n";
  return kExitNotConverged;
}

int cmd_bound(int n, int dmax, std::int64_t y_init_value, double p0,
              std::int64_t window_l, const std::optional<double>& p_theta_min) {
  nlohmann::json out;
  out["n"] = n;
  out["d_plus_max"] = dmax;
  out["y_init"] = y_init_value;
  out["p0"] = p0;
  const long double value = qac::k0_bound_value(n, dmax, y_init_value, p0);
  const std::uint64_t k0 = qac::k0_bound(n, dmax, y_init_value, p0);
  out["k0"] = k0;
  out["saturated"] = k0 == std::numeric_limits<std::uint64_t>::max();
  if (value <= 1e308L) out["k0_value"] = static_cast<double>(value);
  out["k0_log10"] = static_cast<double>(log10l(value < 1.0L ? 1.0L : value));
  out["window_l"] = window_l;
  out["dynamic_walk_bound"] = qac::dynamic_walk_bound(n, dmax, window_l);
  if (p_theta_min)
    out["iid_walk_bound"] = qac::iid_walk_bound(n, dmax, *p_theta_min);
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

/**
 * Built-in four-node worked example: digraph, initial states, and the round-0
 * transmission targets that produce the reference round-1 table. Rounds past 0
 * fall back to seeded draws.
 */
int cmd_replay() {
  const qac::Digraph g(4, {{1, 0}, {2, 0}, {3, 1}, {0, 2}, {1, 2}, {2, 3}});
  const std::vector<std::int64_t> y0 = {5, 3, 7, 2};
  const std::vector<qac::ScriptedChoice> choices = {
      {0, 0, 0, 1}, {0, 1, 0, 1}, {0, 2, 0, 0}, {0, 3, 0, 2}};

  qac::TrialOptions options;
  options.max_rounds = 2;
  options.run_to_max_rounds = true;
  options.collect_trace = true;
  const qac::TrialRecord rec = qac::run_trial(
      qac::TopologySchedule::static_graph(g), y0, qac::Variant::NoOscillation,
      qac::RandomSource::scripted(choices, 1), options);

  struct Row {
    std::int64_t y, z, y_s, z_s, q_s;
  };
  const std::vector<std::vector<Row>> expected = {
      {{10, 2, 10, 2, 5}, {6, 2, 6, 2, 3}, {14, 2, 14, 2, 7}, {4, 2, 4, 2, 2}},
      {{12, 2, 12, 2, 6}, {11, 3, 11, 3, 3}, {9, 2, 9, 2, 4}, {2, 1, 2, 1, 2}},
  };

  bool ok = true;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const qac::RoundSnapshot& row = rec.trace.at(k);
    std::cout << "k=" << k << "  (y, z, y_s, z_s, q_s) per node\n";
    for (int j = 0; j < 4; ++j) {
      const Row& e = expected[k][j];
      const bool match = row.y[j] == e.y && row.z[j] == e.z &&
                         row.y_s[j] == e.y_s && row.z_s[j] == e.z_s &&
                         row.q_s[j] == e.q_s;
      std::cout << "  v" << j + 1 << ": (" << row.y[j] << ", " << row.z[j]
                << ", " << row.y_s[j] << ", " << row.z_s[j] << ", "
                << row.q_s[j] << ")"
                << (match ? "" : "   MISMATCH, expected (" +
                                     std::to_string(e.y) + ", " +
                                     std::to_string(e.z) + ", " +
                                     std::to_string(e.y_s) + ", " +
                                     std::to_string(e.z_s) + ", " +
                                     std::to_string(e.q_s) + ")")
                << "\n";
      ok = ok && match;
    }
  }
  std::cout << (ok ? "replay: PASS" : "replay: FAIL") << "\n";
  return ok ? kExitOk : kExitNotConverged;
}

int cmd_gen_graph(int n, double density, std::uint64_t seed,
                  const std::optional<std::string>& out_path) {
  const qac::Digraph g = qac::random_strongly_connected(n, density, seed);
  const std::string text = qac::digraph_to_json(g);
  if (out_path) {
    std::ofstream out(*out_path, std::ios::binary);
    if (!out)
      throw std::runtime_error("cannot write file \"" + *out_path + "\"");
    out << text << "\n";
  } else {
    std::cout << text << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Finite-time quantized average consensus: simulation and bounds"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out_csv, out_trace;
  int workers = 0;
  bool allow_nonconverged = false;
  run->add_option("config", config_path, "experiment config JSON file")
      ->required();
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--trials", trials, "override the trial count");
  run->add_option("--out", out_csv, "write per-trial CSV to this path");
  run->add_option("--trace", out_trace, "write per-round JSONL to this path");
  run->add_option("--workers", workers, "worker threads (0 = hardware)");
  run->add_flag("--allow-nonconverged", allow_nonconverged,
                "exit 0 even if trials did not converge");

  // bound
  auto* bound = app.add_subcommand("bound", "convergence-time bound k0");
  int bn = 0, bdmax = 0;
  std::int64_t by_init = 0, bwindow = 1;
  double bp0 = 0.9;
  std::optional<double> bp_theta;
  bound->add_option("--n", bn, "node count")->required();
  bound->add_option("--dmax", bdmax, "maximum out-degree")->required();
  bound->add_option("--y-init", by_init, "total initial state error")
      ->required();
  bound->add_option("--p0", bp0, "confidence level (default 0.9)");
  bound->add_option("--window-l", bwindow, "window length for the walk bound");
  bound->add_option("--p-theta-min", bp_theta,
                    "smallest collection probability (iid bound)");

  // replay
  app.add_subcommand("replay",
                     "check the built-in worked example against its tables");

  // gen-graph
  auto* gen = app.add_subcommand("gen-graph",
                                 "emit a random strongly connected digraph");
  int gn = 0;
  double gdensity = 0.0;
  std::uint64_t gseed = 0;
  std::optional<std::string> gout;
  gen->add_option("--n", gn, "node count")->required();
  gen->add_option("--density", gdensity, "edge probability in [0, 1]")
      ->required();
  gen->add_option("--seed", gseed, "generator seed (default 0)");
  gen->add_option("--out", gout, "write to this path instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("run"))
      return cmd_run(config_path, seed, trials, out_csv, out_trace, workers,
                     allow_nonconverged);
    if (app.got_subcommand("bound"))
      return cmd_bound(bn, bdmax, by_init, bp0, bwindow, bp_theta);
    if (app.got_subcommand("replay")) return cmd_replay();
    if (app.got_subcommand("gen-graph"))
      return cmd_gen_graph(gn, gdensity, gseed, gout);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
