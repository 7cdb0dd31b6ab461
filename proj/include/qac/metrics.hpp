#ifndef QAC_METRICS_HPP
#define QAC_METRICS_HPP

#include <cstdint>
#include <utility>
#include <vector>

namespace qac {

/**
 * Exact consensus target of an initial-state vector: the rational average
 * q = S/n, its floor and ceiling, and the unique decomposition S = n*L + R
 * with 0 <= R < n. All arithmetic is exact; floors are mathematical.
 */
struct ConsensusTarget {
  std::int64_t sum = 0;     // S: numerator of the exact average S/n
  std::int64_t n = 1;       // denominator
  std::int64_t L = 0;       // S = n*L + R
  std::int64_t R = 0;
  std::int64_t floor_q = 0;  // = L
  std::int64_t ceil_q = 0;   // = L + (R > 0)

  bool in_target(std::int64_t q) const { return q == floor_q || q == ceil_q; }
};

ConsensusTarget consensus_target(const std::vector<std::int64_t>& y0);

/**
 * Total initial state error: summed excess of initial states above ceil(q)
 * plus summed deficit below floor(q).
 */
std::int64_t y_init(const std::vector<std::int64_t>& y0);

/**
 * Lyapunov split Y = Y1 + Y2 over a list of (y, z) entries with z >= 1:
 * Y1 sums ceil(y/z) - ceil(q) over entries whose ceiling exceeds ceil(q),
 * Y2 sums floor(q) - floor(y/z) over entries whose floor is below floor(q).
 */
struct LyapunovSnapshot {
  std::int64_t Y1 = 0;
  std::int64_t Y2 = 0;
  std::int64_t Y = 0;
};

LyapunovSnapshot lyapunov(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& entries,
    const ConsensusTarget& target);

/**
 * Appends the unit-token decomposition of a mass pair (y, z): with
 * delta = floor(y/z) and r = y - delta*z, that is r tokens of value delta+1
 * and z - r tokens of value delta, each as a (value, 1) entry. z = 0 appends
 * nothing.
 */
void append_unit_tokens(std::int64_t y, std::int64_t z,
                        std::vector<std::pair<std::int64_t, std::int64_t>>& out);

/**
 * Closed-form convergence-time bound: the number of time steps after which
 * every node has settled on floor(q) or ceil(q) with probability at least p0,
 *
 *   k0 = ceil( (y_init + n)
 *              * log2(1 - 2^(log2(p0) / (y_init + n)))
 *                / log2(1 - (1 + d_plus_max)^-(n-1))
 *              * (n - 1) ).
 *
 * k0_bound_value returns the un-rounded long double (finite, possibly huge);
 * k0_bound rounds up and saturates at UINT64_MAX when the value exceeds the
 * representable range. Rejects p0 outside (0, 1), n < 2, d_plus_max < 1,
 * y_init < 0.
 */
long double k0_bound_value(std::int64_t n, std::int64_t d_plus_max,
                           std::int64_t y_init, double p0);
std::uint64_t k0_bound(std::int64_t n, std::int64_t d_plus_max,
                       std::int64_t y_init, double p0);

/**
 * Window-model token-arrival bound: a token reaches any fixed node within
 * l*(n-1) rounds with probability at least (1 + d_plus_max)^-(l*(n-1)).
 * l = 1 is the static single-token bound.
 */
double dynamic_walk_bound(std::int64_t n, std::int64_t d_plus_max, std::int64_t l);

/**
 * I.i.d.-collection variant of the arrival bound:
 * (p_theta_min / (1 + d_plus_max))^(n-1), where p_theta_min is the smallest
 * selection probability in the collection.
 */
double iid_walk_bound(std::int64_t n, std::int64_t d_plus_max, double p_theta_min);

}  // namespace qac

#endif  // QAC_METRICS_HPP
