#ifndef QAC_SIMULATION_HPP
#define QAC_SIMULATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qac/graph.hpp"
#include "qac/metrics.hpp"
#include "qac/protocol.hpp"
#include "qac/rng.hpp"

namespace qac {

/** One transmission: accumulator (c_y, c_z) sent along edge src -> dst. */
struct Message {
  int src = 0;
  int dst = 0;
  std::int64_t c_y = 0;
  std::int64_t c_z = 0;
  std::int64_t round = 0;
};

/**
 * Audit row for one round k: masses at the start of the round, state
 * variables after the round's refresh, conservation sums measured mid-round
 * (held at self accumulators plus in-flight messages), and both Lyapunov
 * series — grouped per held mass entry and decomposed into unit tokens.
 */
struct RoundSnapshot {
  std::int64_t k = 0;
  std::vector<std::int64_t> y, z, y_s, z_s, q_s;
  std::int64_t held_y = 0, held_z = 0;        // self accumulators, mid-round
  std::int64_t inflight_y = 0, inflight_z = 0;  // messages, mid-round
  LyapunovSnapshot grouped;  // one entry per node mass (z >= 1)
  LyapunovSnapshot token;    // unit-token decomposition
  bool all_in_target = false;
};

/** Terminal + audit summary of one trial. */
struct TrialRecord {
  int n = 0;
  Variant variant = Variant::NoOscillation;
  TopologyMode mode = TopologyMode::Static;
  std::uint64_t seed = 0;

  bool converged = false;
  std::optional<std::int64_t> convergence_round;    // first round with token-Y = 0
                                                    // and all q_s on target
  std::optional<std::int64_t> stabilization_round;  // round from which the q_s
                                                    // vector stays constant
  std::int64_t rounds_executed = 0;

  ConsensusTarget target;
  std::int64_t y_init_value = 0;
  std::int64_t grouped_Y0 = 0;  // grouped Lyapunov value at k = 0
  std::int64_t token_Y0 = 0;    // unit-token Lyapunov value at k = 0
  std::int64_t grouped_Y_increases = 0;  // rounds where grouped Y grew
  std::int64_t token_Y_increases = 0;    // rounds where token Y grew (expect 0)
  std::optional<std::int64_t> first_in_target_round;  // all q_s on target, first
  std::int64_t changes_after_first_target = 0;  // q_s changes past that round
  std::int64_t last_change_round = 0;  // final round where the q_s vector moved
  std::int64_t floor_token_count = 0;  // unit tokens at floor(q), final round
  std::vector<std::int64_t> final_q_s;

  std::vector<RoundSnapshot> trace;     // filled only when requested
  std::optional<std::string> failure;   // per-trial abort (overflow, replay...)
};

struct TrialOptions {
  std::int64_t max_rounds = 100000;
  std::int64_t stability_window = 0;    // 0: use the default of 2n rounds
  std::uint64_t topology_seed = 0;      // stream for dynamic schedules
  bool collect_trace = false;
  bool run_to_max_rounds = false;       // disable early stop (horizon studies)
};

/**
 * Runs one trial: per round, sample the round digraph, run every node's split
 * phase in ascending node order, deliver all messages, merge, and snapshot.
 *
 * Stops once the trial has converged (token-level Y = 0 with every q_s at
 * floor(q) or ceil(q)) and the q_s vector has been constant for
 * stability_window consecutive rounds — or at max_rounds. Conservation of
 * both mass sums is checked every round, mid-round and after merge, as a hard
 * error.
 */
TrialRecord run_trial(const TopologySchedule& schedule,
                      const std::vector<std::int64_t>& y0, Variant v,
                      RandomSource src, const TrialOptions& options);

/** Everything run_trial needs, bundled for batch dispatch. */
struct TrialConfig {
  TopologySchedule schedule;
  std::vector<std::int64_t> y0;
  Variant variant = Variant::NoOscillation;
  std::uint64_t seed = 0;
  TrialOptions options;
};

/**
 * Runs trials on a worker pool (`workers` <= 0 picks the hardware count).
 * Results are in input order and identical to sequential execution; a trial
 * that throws yields a record with `failure` set instead of killing the
 * batch.
 */
std::vector<TrialRecord> run_batch(const std::vector<TrialConfig>& configs,
                                   int workers = 0);

}  // namespace qac

#endif  // QAC_SIMULATION_HPP
