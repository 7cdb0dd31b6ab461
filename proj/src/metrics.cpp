#include "qac/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qac/int_math.hpp"

namespace qac {

ConsensusTarget consensus_target(const std::vector<std::int64_t>& y0) {
  if (y0.empty()) throw std::invalid_argument("consensus_target: empty state list");
  ConsensusTarget t;
  t.n = static_cast<std::int64_t>(y0.size());
  for (std::int64_t v : y0) t.sum = checked_add(t.sum, v);
  t.L = floor_div(t.sum, t.n);
  t.R = t.sum - checked_mul(t.n, t.L);
  t.floor_q = t.L;
  t.ceil_q = t.L + (t.R > 0 ? 1 : 0);
  return t;
}

std::int64_t y_init(const std::vector<std::int64_t>& y0) {
  const ConsensusTarget t = consensus_target(y0);
  std::int64_t total = 0;
  for (std::int64_t v : y0) {
    if (v > t.ceil_q) total = checked_add(total, v - t.ceil_q);
    if (v < t.floor_q) total = checked_add(total, t.floor_q - v);
  }
  return total;
}

LyapunovSnapshot lyapunov(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& entries,
    const ConsensusTarget& target) {
  LyapunovSnapshot snap;
  for (const auto& [y, z] : entries) {
    if (z < 1) throw std::invalid_argument("lyapunov: entry with z < 1");
    const std::int64_t hi = ceil_div(y, z);
    const std::int64_t lo = floor_div(y, z);
    if (hi > target.ceil_q) snap.Y1 = checked_add(snap.Y1, hi - target.ceil_q);
    if (lo < target.floor_q) snap.Y2 = checked_add(snap.Y2, target.floor_q - lo);
  }
  snap.Y = checked_add(snap.Y1, snap.Y2);
  return snap;
}

void append_unit_tokens(std::int64_t y, std::int64_t z,
                        std::vector<std::pair<std::int64_t, std::int64_t>>& out) {
  if (z == 0) return;
  if (z < 0) throw std::invalid_argument("append_unit_tokens: negative z");
  const std::int64_t delta = floor_div(y, z);
  const std::int64_t r = y - checked_mul(delta, z);
  for (std::int64_t i = 0; i < z; ++i)
    out.emplace_back(i < r ? delta + 1 : delta, 1);
}

namespace {

void check_bound_args(std::int64_t n, std::int64_t d_plus_max,
                      std::int64_t y_init_value, double p0) {
  if (p0 <= 0.0 || p0 >= 1.0)
    throw std::invalid_argument("k0_bound: p0 must lie strictly in (0, 1)");
  if (n < 2) throw std::invalid_argument("k0_bound: n must be >= 2");
  if (d_plus_max < 1) throw std::invalid_argument("k0_bound: d_plus_max must be >= 1");
  if (y_init_value < 0) throw std::invalid_argument("k0_bound: y_init must be >= 0");
}

}  // namespace

long double k0_bound_value(std::int64_t n, std::int64_t d_plus_max,
                           std::int64_t y_init, double p0) {
  check_bound_args(n, d_plus_max, y_init, p0);
  const long double a = static_cast<long double>(y_init) + static_cast<long double>(n);
  // eps = 1 - p0^(1/a), computed without cancellation for large a.
  const long double eps = -std::expm1(std::log(static_cast<long double>(p0)) / a);
  const long double num = std::log2l(eps);
  // escape = (1 + d)^-(n-1); log2(1 - escape) via log1p for small escape.
  const long double escape =
      std::exp(-static_cast<long double>(n - 1) *
                std::log1p(static_cast<long double>(d_plus_max)));
  const long double den = std::log1p(-escape) / std::log(2.0L);
  if (den == 0.0L) return std::numeric_limits<long double>::infinity();
  return a * (num / den) * static_cast<long double>(n - 1);
}

std::uint64_t k0_bound(std::int64_t n, std::int64_t d_plus_max,
                       std::int64_t y_init, double p0) {
  const long double value = std::ceil(k0_bound_value(n, d_plus_max, y_init, p0));
  if (!(value < 18446744073709551615.0L))  // also catches +inf
    return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(value);
}

double dynamic_walk_bound(std::int64_t n, std::int64_t d_plus_max, std::int64_t l) {
  if (l < 1) throw std::invalid_argument("dynamic_walk_bound: l must be >= 1");
  if (n < 2) throw std::invalid_argument("dynamic_walk_bound: n must be >= 2");
  if (d_plus_max < 1)
    throw std::invalid_argument("dynamic_walk_bound: d_plus_max must be >= 1");
  const long double exponent = static_cast<long double>(l) * (n - 1);
  return static_cast<double>(
      std::exp(-exponent * std::log1p(static_cast<long double>(d_plus_max))));
}

double iid_walk_bound(std::int64_t n, std::int64_t d_plus_max, double p_theta_min) {
  if (n < 2) throw std::invalid_argument("iid_walk_bound: n must be >= 2");
  if (d_plus_max < 1)
    throw std::invalid_argument("iid_walk_bound: d_plus_max must be >= 1");
  if (p_theta_min <= 0.0 || p_theta_min > 1.0)
    throw std::invalid_argument("iid_walk_bound: p_theta_min must be in (0, 1]");
  const long double per_step =
      std::log(static_cast<long double>(p_theta_min)) -
      std::log1p(static_cast<long double>(d_plus_max));
  return static_cast<double>(std::exp(static_cast<long double>(n - 1) * per_step));
}

}  // namespace qac
