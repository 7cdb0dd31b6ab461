/**
 * Acceptance harness: one pass/fail line per criterion, nonzero exit when any
 * criterion fails. Every threshold is a named constant below; all equality
 * checks on integer quantities are exact.
 */
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qac/graph.hpp"
#include "qac/metrics.hpp"
#include "qac/protocol.hpp"
#include "qac/rng.hpp"
#include "qac/simulation.hpp"

namespace {

using qac::consensus_target;
using qac::derive_seed;
using qac::Digraph;
using qac::k0_bound;
using qac::random_strongly_connected;
using qac::RandomSource;
using qac::run_batch;
using qac::run_trial;
using qac::ScriptedChoice;
using qac::TopologySchedule;
using qac::TrialConfig;
using qac::TrialOptions;
using qac::TrialRecord;
using qac::Variant;
using qac::Xoshiro256StarStar;

// ---- pinned thresholds -----------------------------------------------------
constexpr std::int64_t kConservationMinRounds = 10000;  // criterion 2
constexpr int kBatchTrials = 1000;                      // criteria 3/4/5/8
constexpr int kBatchN = 20;
constexpr double kBatchDensity = 0.2;
constexpr std::uint64_t kBatchSeed = 2024;
constexpr int kContrastSeeds = 100;                     // criterion 6
constexpr std::int64_t kContrastHorizon = 300;
constexpr std::int64_t kContrastQuietTail = 100;  // change-free closing rounds
constexpr double kOscillationMinFraction = 0.50;
constexpr int kPairedSeeds = 100;                       // criterion 7
constexpr double kBoundConfidence = 0.9;                // criterion 8

int failures = 0;

void report(int index, const std::string& name, bool ok,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", index,
              name.c_str(), detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

struct Outcome {
  bool ok = false;
  std::string detail;
};

void run_criterion(int index, const std::string& name,
                   const std::function<Outcome()>& fn) {
  try {
    const Outcome o = fn();
    report(index, name, o.ok, o.detail);
  } catch (const std::exception& err) {
    report(index, name, false, std::string("exception: ") + err.what());
  }
}

Digraph four_node_example() {
  return Digraph(4, {{1, 0}, {2, 0}, {3, 1}, {0, 2}, {1, 2}, {2, 3}});
}

std::vector<std::int64_t> sample_states(std::uint64_t seed, int n,
                                        std::int64_t lo, std::int64_t hi) {
  Xoshiro256StarStar rng(seed);
  std::vector<std::int64_t> y0(n);
  for (auto& v : y0)
    v = lo + static_cast<std::int64_t>(
                 rng.uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
  return y0;
}

double median(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return static_cast<double>(v[m]);
  return (static_cast<double>(v[m - 1]) + static_cast<double>(v[m])) / 2.0;
}

std::string count_detail(const std::string& what, std::int64_t good,
                         std::int64_t total) {
  return std::to_string(good) + "/" + std::to_string(total) + " " + what;
}

}  // namespace

int main() {
  // ---- criterion 1: worked four-node example, scripted first round --------
  run_criterion(1, "scripted worked example matches the reference table", [] {
    const std::vector<std::int64_t> y0{5, 3, 7, 2};
    const std::vector<ScriptedChoice> choices{
        {0, 0, 0, 1}, {0, 1, 0, 1}, {0, 2, 0, 0}, {0, 3, 0, 2}};
    TrialOptions options;
    options.max_rounds = 2;
    options.run_to_max_rounds = true;
    options.collect_trace = true;
    const TrialRecord rec =
        run_trial(TopologySchedule::static_graph(four_node_example()), y0,
                  Variant::NoOscillation,
                  RandomSource::scripted(choices, 1), options);
    if (rec.failure) return Outcome{false, *rec.failure};
    if (rec.trace.size() != 2) return Outcome{false, "expected two rounds"};

    using V = std::vector<std::int64_t>;
    const auto& k0 = rec.trace[0];
    const auto& k1 = rec.trace[1];
    const bool row0 = k0.y == V{10, 6, 14, 4} && k0.z == V{2, 2, 2, 2} &&
                      k0.y_s == V{10, 6, 14, 4} && k0.z_s == V{2, 2, 2, 2} &&
                      k0.q_s == V{5, 3, 7, 2};
    const bool row1 = k1.y == V{12, 11, 9, 2} && k1.z == V{2, 3, 2, 1} &&
                      k1.y_s == V{12, 11, 9, 2} && k1.z_s == V{2, 3, 2, 1} &&
                      k1.q_s == V{6, 3, 4, 2};
    if (!row0) return Outcome{false, "round 0 row differs"};
    if (!row1) return Outcome{false, "round 1 row differs"};
    return Outcome{true, "rounds 0 and 1 bit-exact"};
  });

  // ---- criterion 2: exact conservation of both mass sums ------------------
  run_criterion(2, "mass sums conserved in every audited round", [] {
    std::vector<TrialConfig> configs;
    std::vector<std::int64_t> sums;
    for (int n = 2; n <= 30; ++n) {
      TrialConfig tc;
      tc.schedule = TopologySchedule::static_graph(
          random_strongly_connected(n, 0.4, derive_seed(42, 2, n)));
      tc.y0 = sample_states(derive_seed(42, 1, n), n, -50, 50);
      tc.variant = Variant::NoOscillation;
      tc.seed = 42 ^ static_cast<std::uint64_t>(n);
      tc.options.max_rounds = 400;
      tc.options.run_to_max_rounds = true;
      tc.options.collect_trace = true;
      std::int64_t sum = 0;
      for (std::int64_t v : tc.y0) sum += v;
      sums.push_back(sum);
      configs.push_back(std::move(tc));
    }
    const std::vector<TrialRecord> records = run_batch(configs);

    std::int64_t rounds = 0, violations = 0;
    for (std::size_t t = 0; t < records.size(); ++t) {
      const TrialRecord& rec = records[t];
      if (rec.failure) return Outcome{false, "trial failed: " + *rec.failure};
      for (const auto& row : rec.trace) {
        ++rounds;
        if (row.held_y + row.inflight_y != 2 * sums[t]) ++violations;
        if (row.held_z + row.inflight_z != 2 * rec.n) ++violations;
      }
    }
    if (rounds < kConservationMinRounds)
      return Outcome{false, "only " + std::to_string(rounds) + " rounds"};
    return Outcome{violations == 0,
                   std::to_string(rounds) + " rounds audited, " +
                       std::to_string(violations) + " violations"};
  });

  // ---- shared batch for criteria 3/4/5/8 ----------------------------------
  const std::vector<std::int64_t> batch_y0 =
      sample_states(derive_seed(kBatchSeed, 1, 0), kBatchN, 1, 50);
  std::vector<Digraph> batch_graphs;
  std::vector<TrialConfig> batch_configs;
  for (int t = 0; t < kBatchTrials; ++t) {
    TrialConfig tc;
    batch_graphs.push_back(random_strongly_connected(
        kBatchN, kBatchDensity,
        derive_seed(kBatchSeed, 2, static_cast<std::uint64_t>(t))));
    tc.schedule = TopologySchedule::static_graph(batch_graphs.back());
    tc.y0 = batch_y0;
    tc.variant = Variant::NoOscillation;
    tc.seed = kBatchSeed ^ static_cast<std::uint64_t>(t);
    tc.options.max_rounds = 100000;
    tc.options.stability_window = 40;
    batch_configs.push_back(std::move(tc));
  }
  const std::vector<TrialRecord> batch = run_batch(batch_configs);
  const qac::ConsensusTarget batch_target = consensus_target(batch_y0);
  const std::int64_t batch_y_init = qac::y_init(batch_y0);

  // ---- criterion 3: every randomized trial converges and stabilizes -------
  run_criterion(3, "all randomized static trials reach a fixed target", [&] {
    std::int64_t good = 0;
    for (const TrialRecord& rec : batch) {
      if (rec.failure || !rec.converged || !rec.convergence_round ||
          !rec.stabilization_round)
        continue;
      bool on_target = true;
      for (std::int64_t q : rec.final_q_s)
        on_target = on_target && batch_target.in_target(q);
      if (on_target && *rec.convergence_round <= *rec.stabilization_round)
        ++good;
    }
    return Outcome{good == kBatchTrials,
                   count_detail("trials converged and stabilized", good,
                                kBatchTrials)};
  });

  // ---- criterion 4: token-level Lyapunov never increases -------------------
  run_criterion(4, "Lyapunov: token series never increases; grouped series "
                   "starts at y_init", [&] {
    std::int64_t clean = 0;
    for (const TrialRecord& rec : batch)
      if (!rec.failure && rec.token_Y_increases == 0 &&
          rec.grouped_Y0 == batch_y_init && rec.token_Y0 == 2 * batch_y_init)
        ++clean;
    if (clean != kBatchTrials)
      return Outcome{false, count_detail("clean trials", clean, kBatchTrials)};

    // Independent re-check on collected traces: the recorded token-Y series
    // must itself be non-increasing, not merely flagged as such.
    TrialConfig tc = batch_configs[0];
    tc.options.collect_trace = true;
    const TrialRecord traced = run_trial(tc.schedule, tc.y0, tc.variant,
                                         RandomSource::seeded(tc.seed),
                                         tc.options);
    for (std::size_t i = 1; i < traced.trace.size(); ++i)
      if (traced.trace[i].token.Y > traced.trace[i - 1].token.Y)
        return Outcome{false, "trace series increased"};
    return Outcome{true, count_detail("trials with zero increases", clean,
                                      kBatchTrials)};
  });

  // ---- criterion 5: terminal unit-token split matches the remainder -------
  run_criterion(5, "final floor-token count equals 2n - 2R", [&] {
    const std::int64_t expected =
        batch_target.R == 0 ? 2 * kBatchN : 2 * kBatchN - 2 * batch_target.R;
    std::int64_t good = 0;
    for (const TrialRecord& rec : batch)
      if (!rec.failure && rec.converged && rec.floor_token_count == expected)
        ++good;
    return Outcome{good == kBatchTrials,
                   count_detail("trials at the exact split (" +
                                    std::to_string(expected) + " floor tokens)",
                                good, kBatchTrials)};
  });

  // ---- criterion 6: oscillation contrast ----------------------------------
  std::vector<TrialRecord> contrast_noosc, contrast_osc;
  run_criterion(6, "baseline oscillates after reaching the target band; "
                   "the two-mass split does not", [&] {
    std::vector<TrialConfig> configs;
    for (int variant = 0; variant < 2; ++variant)
      for (int s = 0; s < kContrastSeeds; ++s) {
        TrialConfig tc;
        tc.schedule = TopologySchedule::static_graph(four_node_example());
        tc.y0 = {5, 3, 7, 2};
        tc.variant = variant == 0 ? Variant::NoOscillation
                                  : Variant::OscillatingBaseline;
        tc.seed = derive_seed(99, 4, static_cast<std::uint64_t>(s));
        tc.options.max_rounds = kContrastHorizon;
        tc.options.run_to_max_rounds = true;
        configs.push_back(std::move(tc));
      }
    std::vector<TrialRecord> records = run_batch(configs);
    contrast_noosc.assign(records.begin(), records.begin() + kContrastSeeds);
    contrast_osc.assign(records.begin() + kContrastSeeds, records.end());

    // The settling variant may still swap floor/ceiling values briefly after
    // the error hits zero, but every run must go permanently quiet long
    // before the horizon; the baseline keeps disturbing states it has
    // already placed on target.
    std::int64_t fixed = 0;
    for (const TrialRecord& rec : contrast_noosc)
      if (!rec.failure && rec.converged &&
          rec.last_change_round + kContrastQuietTail <= kContrastHorizon)
        ++fixed;
    std::int64_t oscillated = 0;
    for (const TrialRecord& rec : contrast_osc)
      if (!rec.failure && rec.first_in_target_round &&
          rec.changes_after_first_target >= 1)
        ++oscillated;

    const bool ok =
        fixed == kContrastSeeds &&
        oscillated >= static_cast<std::int64_t>(
                          kOscillationMinFraction * kContrastSeeds);
    return Outcome{ok, count_detail("split runs fixed", fixed, kContrastSeeds) +
                           "; " +
                           count_detail("baseline runs oscillated", oscillated,
                                        kContrastSeeds)};
  });

  // ---- criterion 7: dynamic topology converges, no faster than static -----
  std::vector<TrialRecord> paired_static, paired_dynamic;
  std::vector<Digraph> paired_graphs;
  run_criterion(7, "window-partitioned topology still fixes the target", [&] {
    std::vector<TrialConfig> configs;
    for (int p = 0; p < kPairedSeeds; ++p) {
      const Digraph g = random_strongly_connected(
          10, 0.35, derive_seed(77, 2, static_cast<std::uint64_t>(p)));
      paired_graphs.push_back(g);
      const std::vector<std::int64_t> y0 =
          sample_states(derive_seed(77, 1, static_cast<std::uint64_t>(p)), 10,
                        1, 50);
      TrialConfig st;
      st.schedule = TopologySchedule::static_graph(g);
      st.y0 = y0;
      st.seed = 77 ^ static_cast<std::uint64_t>(p);
      st.options.max_rounds = 100000;
      TrialConfig dy = st;
      dy.schedule = TopologySchedule::window_union(g, 5);
      dy.options.topology_seed = derive_seed(77, 3, static_cast<std::uint64_t>(p));
      configs.push_back(std::move(st));
      configs.push_back(std::move(dy));
    }
    std::vector<TrialRecord> records = run_batch(configs);
    std::vector<std::int64_t> stab_static, stab_dynamic;
    std::int64_t fixed = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const TrialRecord& rec = records[i];
      if (!rec.failure && rec.converged && rec.stabilization_round) ++fixed;
      else continue;
      if (i % 2 == 0) {
        paired_static.push_back(rec);
        stab_static.push_back(*rec.stabilization_round);
      } else {
        paired_dynamic.push_back(rec);
        stab_dynamic.push_back(*rec.stabilization_round);
      }
    }
    if (fixed != 2 * kPairedSeeds)
      return Outcome{false,
                     count_detail("runs fixed", fixed, 2 * kPairedSeeds)};
    const double med_static = median(stab_static);
    const double med_dynamic = median(stab_dynamic);
    return Outcome{med_dynamic >= med_static,
                   "median stabilization: static " +
                       std::to_string(med_static) + ", window " +
                       std::to_string(med_dynamic)};
  });

  // ---- criterion 8: closed-form bound dominates observed stabilization ----
  run_criterion(8, "stabilization never exceeds the closed-form bound", [&] {
    std::int64_t checked = 0, within = 0;
    const auto audit = [&](const TrialRecord& rec, const Digraph& g,
                           std::int64_t y_init_value) {
      if (rec.failure || !rec.stabilization_round) return;
      ++checked;
      const std::uint64_t k0 =
          k0_bound(g.n, std::max(g.max_out_degree(), 1), y_init_value,
                   kBoundConfidence);
      if (static_cast<std::uint64_t>(*rec.stabilization_round) <= k0) ++within;
    };
    for (std::size_t t = 0; t < batch.size(); ++t)
      audit(batch[t], batch_graphs[t], batch_y_init);
    const Digraph fig = four_node_example();
    const std::int64_t fig_y_init = qac::y_init({5, 3, 7, 2});
    for (const TrialRecord& rec : contrast_noosc)
      audit(rec, fig, fig_y_init);
    for (std::size_t p = 0; p < paired_static.size(); ++p) {
      const std::int64_t yi = qac::y_init(
          sample_states(derive_seed(77, 1, p), 10, 1, 50));
      audit(paired_static[p], paired_graphs[p], yi);
      if (p < paired_dynamic.size())
        audit(paired_dynamic[p], paired_graphs[p], yi);
    }
    if (checked < kBatchTrials)
      return Outcome{false, "too few trials carried over"};
    return Outcome{within == checked,
                   count_detail("trials within bound", within, checked)};
  });

  if (failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return 1;
}
