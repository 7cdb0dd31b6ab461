#ifndef QAC_PROTOCOL_HPP
#define QAC_PROTOCOL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qac/rng.hpp"

namespace qac {

/**
 * Protocol flavor.
 *
 * NoOscillation: initialization doubles the masses (y := 2*y0, z := 2); a node
 * splits only while it holds more than one token and always retains one
 * minimum piece, so quantized states settle. OscillatingBaseline: masses start
 * at (y0, 1) and a node stages away every token it holds; states keep flipping
 * between the two target values.
 */
enum class Variant { NoOscillation, OscillatingBaseline };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

/**
 * One agent's variables: mass (y, z) being averaged through the network, and
 * the state snapshot (y_s, z_s, q_s) with q_s = floor(y_s / z_s) the agent's
 * current quantized estimate.
 */
struct NodeState {
  std::int64_t y = 0;
  std::int64_t z = 0;
  std::int64_t y_s = 0;
  std::int64_t z_s = 1;
  std::int64_t q_s = 0;
};

/**
 * Per-round outgoing accumulators of one node: for each target (out-neighbors
 * and self) the summed piece values c_y and piece count c_z. Targets with
 * c_z = 0 are absent.
 */
struct OutboundBatch {
  std::map<int, std::pair<std::int64_t, std::int64_t>> per_target;

  void add(int target, std::int64_t value) {
    auto& [cy, cz] = per_target[target];
    cy += value;
    cz += 1;
  }
  /** (c_y, c_z) kept at the node itself; (0, 0) if nothing stayed. */
  std::pair<std::int64_t, std::int64_t> self_portion(int node) const {
    auto it = per_target.find(node);
    return it == per_target.end() ? std::make_pair<std::int64_t, std::int64_t>(0, 0)
                                  : it->second;
  }
  std::int64_t total_y() const;
  std::int64_t total_z() const;
};

/** Initial node state from the initial value y0 (may be negative). */
NodeState initialize(std::int64_t y0, Variant v);

/**
 * One node's split phase for one round. If the node holds tokens (z >= 1), it
 * refreshes its state variables (y_s = y, z_s = z, q_s = floor(y/z)) and
 * splits y into z near-equal integer pieces: with delta = floor(y/z) and
 * remainder r = y - delta*z, the first r staged pieces carry delta+1 and the
 * rest delta. NoOscillation stages z-1 pieces to independent uniform targets
 * over out_neighbors + self and retains one minimum piece (value delta) at
 * the self accumulator; OscillatingBaseline stages all z pieces. A node with
 * z = 0 (possible only in the oscillating variant) does nothing.
 *
 * Every staged piece consumes exactly one draw from `src`, keyed by
 * (round, node, piece index).
 *
 * Note on z = 1 (NoOscillation): staging is empty and the whole mass stays
 * put, but the state variables still refresh — that matches the worked
 * per-round tables of the algorithm's source description, and it provably
 * cannot change q_s, because a lone token is the node's own previous kept
 * piece whose value equals the previous q_s.
 */
OutboundBatch split_and_stage(NodeState& s, const std::vector<int>& out_neighbors,
                              RandomSource& src, Variant v, std::int64_t round,
                              int node);

/**
 * Merge phase: the node's next mass is the self-kept portion plus everything
 * received this round. Sums are overflow-checked.
 */
void receive_and_merge(NodeState& s,
                       std::pair<std::int64_t, std::int64_t> self_portion,
                       const std::vector<std::pair<std::int64_t, std::int64_t>>&
                           incoming);

/** The node's quantized estimate q_s. */
std::int64_t quantized_state(const NodeState& s);

}  // namespace qac

#endif  // QAC_PROTOCOL_HPP
