#include "qac/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "qac/int_math.hpp"

namespace qac {
namespace {

/** Conserved (y-sum, z-sum) for the variant; NoOscillation doubles both. */
std::pair<std::int64_t, std::int64_t> conserved_totals(
    const std::vector<std::int64_t>& y0, Variant v) {
  std::int64_t sum = 0;
  for (std::int64_t value : y0) sum = checked_add(sum, value);
  const std::int64_t factor = v == Variant::NoOscillation ? 2 : 1;
  return {checked_mul(factor, sum),
          checked_mul(factor, static_cast<std::int64_t>(y0.size()))};
}

[[noreturn]] void conservation_failure(const char* where, std::int64_t k,
                                       std::int64_t got_y, std::int64_t got_z,
                                       std::int64_t want_y, std::int64_t want_z) {
  std::ostringstream msg;
  msg << "conservation violated " << where << " in round " << k << ": y-sum "
      << got_y << " (want " << want_y << "), z-sum " << got_z << " (want "
      << want_z << ")";
  throw std::logic_error(msg.str());
}

}  // namespace

TrialRecord run_trial(const TopologySchedule& schedule,
                      const std::vector<std::int64_t>& y0, Variant v,
                      RandomSource src, const TrialOptions& options) {
  schedule.validate();
  const int n = schedule.nominal.n;
  if (static_cast<int>(y0.size()) != n) {
    std::ostringstream msg;
    msg << "run_trial: y0 has " << y0.size() << " entries but the digraph has "
        << n << " nodes";
    throw std::invalid_argument(msg.str());
  }
  if (options.max_rounds < 1)
    throw std::invalid_argument("run_trial: max_rounds must be >= 1");

  TrialRecord rec;
  rec.n = n;
  rec.variant = v;
  rec.mode = schedule.mode;
  rec.target = consensus_target(y0);
  rec.y_init_value = y_init(y0);

  const auto [want_y, want_z] = conserved_totals(y0, v);
  const std::int64_t window =
      options.stability_window > 0 ? options.stability_window : 2 * n;

  std::vector<NodeState> states;
  states.reserve(y0.size());
  for (std::int64_t value : y0) states.push_back(initialize(value, v));

  const bool static_mode = schedule.mode == TopologyMode::Static;
  const std::vector<std::vector<int>> static_out =
      static_mode ? schedule.nominal.out_neighbors()
                  : std::vector<std::vector<int>>{};

  std::int64_t prev_grouped_Y = 0;
  std::int64_t prev_token_Y = 0;
  std::vector<std::int64_t> prev_qs;
  bool stabilized = false;

  std::vector<OutboundBatch> batches(n);
  std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> inbox(n);
  std::vector<std::pair<std::int64_t, std::int64_t>> grouped_entries;
  std::vector<std::pair<std::int64_t, std::int64_t>> token_entries;

  for (std::int64_t k = 0; k < options.max_rounds; ++k) {
    Digraph round_graph;
    std::vector<std::vector<int>> round_out;
    if (!static_mode) {
      round_graph = schedule_round(schedule, k, options.topology_seed);
      round_out = round_graph.out_neighbors();
    }
    const Digraph& active = static_mode ? schedule.nominal : round_graph;
    const std::vector<std::vector<int>>& out =
        static_mode ? static_out : round_out;

    // Split phase, ascending node order. Stored masses stay at their
    // start-of-round values until the merge; state variables refresh here.
    for (int j = 0; j < n; ++j)
      batches[j] = split_and_stage(states[j], out[j], src, v, k, j);

    RoundSnapshot row;
    row.k = k;
    row.y.reserve(states.size());
    row.z.reserve(states.size());
    row.y_s.reserve(states.size());
    row.z_s.reserve(states.size());
    row.q_s.reserve(states.size());
    grouped_entries.clear();
    token_entries.clear();
    bool all_in_target = true;
    for (const NodeState& s : states) {
      row.y.push_back(s.y);
      row.z.push_back(s.z);
      row.y_s.push_back(s.y_s);
      row.z_s.push_back(s.z_s);
      row.q_s.push_back(s.q_s);
      if (!rec.target.in_target(s.q_s)) all_in_target = false;
      if (s.z >= 1) {
        grouped_entries.emplace_back(s.y, s.z);
        append_unit_tokens(s.y, s.z, token_entries);
      }
    }
    row.grouped = lyapunov(grouped_entries, rec.target);
    row.token = lyapunov(token_entries, rec.target);
    row.all_in_target = all_in_target;

    if (k == 0) {
      rec.grouped_Y0 = row.grouped.Y;
      rec.token_Y0 = row.token.Y;
    } else {
      if (row.grouped.Y > prev_grouped_Y) ++rec.grouped_Y_increases;
      if (row.token.Y > prev_token_Y) ++rec.token_Y_increases;
      if (row.q_s != prev_qs) {
        rec.last_change_round = k;
        if (rec.first_in_target_round && k > *rec.first_in_target_round)
          ++rec.changes_after_first_target;
      }
    }
    if (!rec.first_in_target_round && all_in_target)
      rec.first_in_target_round = k;
    if (!rec.convergence_round && row.token.Y == 0 && all_in_target)
      rec.convergence_round = k;

    // Transfer phase: the self accumulator stays put, everything else must
    // ride an edge active in this round. Conservation holds mid-round too.
    std::vector<Message> messages;
    std::int64_t held_y = 0, held_z = 0, inflight_y = 0, inflight_z = 0;
    for (int j = 0; j < n; ++j) {
      for (const auto& [dst, acc] : batches[j].per_target) {
        if (dst == j) {
          held_y = checked_add(held_y, acc.first);
          held_z = checked_add(held_z, acc.second);
          continue;
        }
        if (!active.has_edge(dst, j)) {
          std::ostringstream msg;
          msg << "round " << k << ": staged transmission " << j << " -> " << dst
              << " has no active edge";
          throw std::logic_error(msg.str());
        }
        messages.push_back(Message{j, dst, acc.first, acc.second, k});
        inflight_y = checked_add(inflight_y, acc.first);
        inflight_z = checked_add(inflight_z, acc.second);
      }
    }
    if (checked_add(held_y, inflight_y) != want_y ||
        checked_add(held_z, inflight_z) != want_z)
      conservation_failure("mid-round", k, checked_add(held_y, inflight_y),
                           checked_add(held_z, inflight_z), want_y, want_z);
    row.held_y = held_y;
    row.held_z = held_z;
    row.inflight_y = inflight_y;
    row.inflight_z = inflight_z;
    if (options.collect_trace) rec.trace.push_back(row);

    // Merge phase.
    for (auto& slot : inbox) slot.clear();
    for (const Message& m : messages) inbox[m.dst].emplace_back(m.c_y, m.c_z);
    for (int j = 0; j < n; ++j)
      receive_and_merge(states[j], batches[j].self_portion(j), inbox[j]);

    std::int64_t post_y = 0, post_z = 0;
    for (const NodeState& s : states) {
      post_y = checked_add(post_y, s.y);
      post_z = checked_add(post_z, s.z);
    }
    if (post_y != want_y || post_z != want_z)
      conservation_failure("post-merge", k, post_y, post_z, want_y, want_z);

    rec.rounds_executed = k + 1;
    prev_grouped_Y = row.grouped.Y;
    prev_token_Y = row.token.Y;
    prev_qs = std::move(row.q_s);

    if (!stabilized && rec.convergence_round &&
        k - rec.last_change_round + 1 >= window) {
      stabilized = true;
      rec.converged = true;
      rec.stabilization_round =
          std::max(rec.last_change_round, *rec.convergence_round);
      if (!options.run_to_max_rounds) break;
    }
  }

  token_entries.clear();
  for (const NodeState& s : states)
    if (s.z >= 1) append_unit_tokens(s.y, s.z, token_entries);
  rec.floor_token_count = static_cast<std::int64_t>(
      std::count_if(token_entries.begin(), token_entries.end(),
                    [&](const auto& t) { return t.first == rec.target.floor_q; }));
  rec.final_q_s.reserve(states.size());
  for (const NodeState& s : states) rec.final_q_s.push_back(s.q_s);
  return rec;
}

std::vector<TrialRecord> run_batch(const std::vector<TrialConfig>& configs,
                                   int workers) {
  std::vector<TrialRecord> results(configs.size());
  if (configs.empty()) return results;

  const unsigned hardware = std::thread::hardware_concurrency();
  std::size_t pool = workers > 0 ? static_cast<std::size_t>(workers)
                                 : (hardware > 0 ? hardware : 1);
  pool = std::min(pool, configs.size());

  std::atomic<std::size_t> next{0};
  auto work = [&configs, &results, &next] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      const TrialConfig& cfg = configs[i];
      TrialRecord rec;
      try {
        rec = run_trial(cfg.schedule, cfg.y0, cfg.variant,
                        RandomSource::seeded(cfg.seed), cfg.options);
      } catch (const std::exception& err) {
        rec = TrialRecord{};
        rec.n = cfg.schedule.nominal.n;
        rec.variant = cfg.variant;
        rec.mode = cfg.schedule.mode;
        rec.failure = err.what();
      }
      rec.seed = cfg.seed;
      results[i] = std::move(rec);
    }
  };

  if (pool == 1) {
    work();
    return results;
  }
  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(work);
  for (std::thread& th : threads) th.join();
  return results;
}

}  // namespace qac
