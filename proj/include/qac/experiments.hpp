#ifndef QAC_EXPERIMENTS_HPP
#define QAC_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qac/graph.hpp"
#include "qac/rng.hpp"
#include "qac/simulation.hpp"

namespace qac {

/** Fresh random strongly connected digraph(s) instead of a fixed one. */
struct GraphGeneratorSpec {
  int n = 0;
  double density = 0.0;
  bool per_trial = false;  // true: an independent digraph per trial
};

/**
 * One experiment, fully determining all outputs given the pinned PRNG.
 *
 * Parsed from a single JSON document; see the README for the schema. Exactly
 * one of `graph`, `graph_file`, `generator` supplies the digraph (none of
 * them in iid_collection mode, where the members define it), and exactly one
 * of `initial_values`, `initial_uniform` supplies the initial states.
 *
 * Seed streams, all derived from `seed`:
 *   - initial-state sampling:    derive_seed(seed, 1, 0)
 *   - digraph of trial t:        derive_seed(seed, 2, per_trial ? t : 0)
 *   - topology schedule, trial t: derive_seed(seed, 3, t)
 *   - protocol draws, trial t:   seed XOR t
 */
struct ExperimentConfig {
  std::string name;
  Variant variant = Variant::NoOscillation;
  int trials = 1;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> max_rounds;  // absent: 10 * k0_bound(p0 = 0.9)
  std::int64_t stability_window = 0;       // 0: engine default of 2n
  bool run_to_max_rounds = false;

  std::optional<Digraph> graph;
  std::optional<std::string> graph_file;
  std::optional<GraphGeneratorSpec> generator;

  TopologyMode mode = TopologyMode::Static;
  int window_l = 1;
  double duplication_prob = 0.0;
  std::vector<Digraph> members;          // iid_collection
  std::vector<double> probabilities;     // iid_collection

  std::optional<std::vector<std::int64_t>> initial_values;
  std::optional<std::pair<std::int64_t, std::int64_t>> initial_uniform;

  std::optional<std::string> choices_file;  // scripted draws; requires trials = 1
  std::optional<std::string> output_csv;
  std::optional<std::string> output_trace;  // JSON Lines, one object per round
};

/**
 * Parses a config document. Throws std::invalid_argument with a diagnostic
 * naming the offending field (unknown keys are rejected).
 */
ExperimentConfig parse_experiment_config(const std::string& json_text);

/**
 * Reads and parses a config file; relative graph_file/choices_file paths are
 * resolved against the config file's directory.
 */
ExperimentConfig load_experiment_config(const std::string& path);

/** Parses a scripted-choices document: [{"k", "node", "piece", "target"}, ...]. */
std::vector<ScriptedChoice> parse_scripted_choices(const std::string& json_text);

struct ExperimentSummary {
  int trials = 0;
  int converged = 0;
  int failed = 0;
  std::optional<double> convergence_mean;
  std::optional<double> convergence_median;
  std::optional<std::int64_t> convergence_max;
  std::optional<double> stabilization_mean;
  std::optional<double> stabilization_median;
  std::optional<std::int64_t> stabilization_max;
};

std::string to_string(const ExperimentSummary& s);

struct ExperimentResult {
  std::vector<TrialRecord> records;  // input order
  ExperimentSummary summary;
};

/**
 * Runs every trial of the experiment (worker pool as in run_batch) and
 * aggregates the summary. Per-trial aborts land in the record's `failure`.
 * Round traces are collected only when `output_trace` is set.
 */
ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 0);

/**
 * CSV with header trial_id,n,variant,mode,seed,converged,convergence_round,
 * stabilization_round. Rows are in trial order; reruns of the same config are
 * byte-identical. Rounds of unconverged trials are empty fields.
 */
std::string records_to_csv(const std::vector<TrialRecord>& records);

/** One JSON object per executed round (all trials, trial-major order). */
std::string records_to_trace_jsonl(const std::vector<TrialRecord>& records);

/** Writes output_csv / output_trace if configured. */
void write_experiment_outputs(const ExperimentConfig& cfg,
                              const ExperimentResult& result);

}  // namespace qac

#endif  // QAC_EXPERIMENTS_HPP
