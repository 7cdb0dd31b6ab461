#include "qac/protocol.hpp"

#include <algorithm>
#include <stdexcept>

#include "qac/int_math.hpp"

namespace qac {

std::string to_string(Variant v) {
  return v == Variant::NoOscillation ? "no_oscillation" : "oscillating_baseline";
}

Variant variant_from_string(const std::string& name) {
  if (name == "no_oscillation") return Variant::NoOscillation;
  if (name == "oscillating_baseline") return Variant::OscillatingBaseline;
  throw std::invalid_argument(
      "variant: expected no_oscillation or oscillating_baseline, got \"" + name +
      "\"");
}

std::int64_t OutboundBatch::total_y() const {
  std::int64_t sum = 0;
  for (const auto& [target, acc] : per_target) sum = checked_add(sum, acc.first);
  return sum;
}

std::int64_t OutboundBatch::total_z() const {
  std::int64_t sum = 0;
  for (const auto& [target, acc] : per_target) sum = checked_add(sum, acc.second);
  return sum;
}

NodeState initialize(std::int64_t y0, Variant v) {
  NodeState s;
  if (v == Variant::NoOscillation) {
    s.y = checked_mul(2, y0);
    s.z = 2;
  } else {
    s.y = y0;
    s.z = 1;
  }
  s.y_s = s.y;
  s.z_s = s.z;
  s.q_s = floor_div(s.y, s.z);
  return s;
}

OutboundBatch split_and_stage(NodeState& s, const std::vector<int>& out_neighbors,
                              RandomSource& src, Variant v, std::int64_t round,
                              int node) {
  OutboundBatch batch;
  if (s.z < 1) {
    if (v == Variant::NoOscillation)
      throw std::logic_error("split_and_stage: z < 1 under NoOscillation");
    return batch;  // token-less node: nothing to stage, state untouched
  }

  s.y_s = s.y;
  s.z_s = s.z;
  s.q_s = floor_div(s.y_s, s.z_s);

  const std::int64_t delta = s.q_s;
  const std::int64_t remainder = checked_sub(s.y, checked_mul(delta, s.z));
  // 0 <= remainder < z by the definition of mathematical floor.

  std::vector<int> candidates = out_neighbors;
  if (!std::binary_search(candidates.begin(), candidates.end(), node)) {
    candidates.push_back(node);
    std::sort(candidates.begin(), candidates.end());
  }

  const std::int64_t staged_count = v == Variant::NoOscillation ? s.z - 1 : s.z;
  for (std::int64_t piece = 0; piece < staged_count; ++piece) {
    const int target =
        src.draw_target(round, node, static_cast<int>(piece), candidates);
    batch.add(target, piece < remainder ? delta + 1 : delta);
  }
  if (v == Variant::NoOscillation) batch.add(node, delta);  // kept minimum piece
  return batch;
}

void receive_and_merge(
    NodeState& s, std::pair<std::int64_t, std::int64_t> self_portion,
    const std::vector<std::pair<std::int64_t, std::int64_t>>& incoming) {
  std::int64_t y = self_portion.first;
  std::int64_t z = self_portion.second;
  for (const auto& [cy, cz] : incoming) {
    y = checked_add(y, cy);
    z = checked_add(z, cz);
  }
  s.y = y;
  s.z = z;
}

std::int64_t quantized_state(const NodeState& s) { return s.q_s; }

}  // namespace qac
