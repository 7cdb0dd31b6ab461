#ifndef QAC_RNG_HPP
#define QAC_RNG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace qac {

/**
 * SplitMix64: used to expand a 64-bit seed into generator state and to derive
 * independent sub-seeds. Output sequence matches the published reference
 * (e.g. splitmix64(0) starts 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, ...).
 */
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

/** Mixes a base seed with stream labels into an independent derived seed. */
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0) {
  SplitMix64 sm(base ^ (0x9E3779B97F4A7C15ULL * (a + 1)));
  std::uint64_t s = sm.next();
  SplitMix64 sm2(s ^ (0xBF58476D1CE4E5B9ULL * (b + 1)));
  return sm2.next();
}

/**
 * xoshiro256** 1.0, seeded through SplitMix64. This is the single pinned
 * generator for the whole engine; test vectors are frozen in the test suite.
 */
class Xoshiro256StarStar {
public:
  explicit Xoshiro256StarStar(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /** Exactly uniform draw in [0, bound) by rejection; bound must be > 0. */
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound is zero");
    // Reject raw values in the tail that would bias the modulo.
    const std::uint64_t threshold = -bound % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t v = next();
      if (v >= threshold) return v % bound;
    }
  }

  /** Uniform double in [0, 1) with 53 random bits. */
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

/** Thrown when a scripted replay cannot supply or validate a draw. */
class replay_mismatch : public std::runtime_error {
public:
  explicit replay_mismatch(const std::string& what) : std::runtime_error(what) {}
};

/** One scripted transmission choice: piece `piece` of node `node` in round
 *  `round` goes to `target`. */
struct ScriptedChoice {
  std::int64_t round = 0;
  int node = 0;
  int piece = 0;
  int target = 0;
};

/**
 * Source of per-piece target choices. Either purely seeded (uniform over the
 * candidate list), or scripted by (round, node, piece) with an optional seeded
 * fallback for draws past the script. A scripted draw with no entry and no
 * fallback, or a scripted target that is not a candidate, aborts the trial.
 */
class RandomSource {
public:
  static RandomSource seeded(std::uint64_t seed) {
    RandomSource src;
    src.engine_.emplace(seed);
    return src;
  }

  static RandomSource scripted(const std::vector<ScriptedChoice>& choices,
                               std::optional<std::uint64_t> fallback_seed) {
    RandomSource src;
    for (const auto& c : choices) {
      auto key = std::make_tuple(c.round, c.node, c.piece);
      if (!src.script_.emplace(key, c.target).second)
        throw std::invalid_argument(
            "scripted choices: duplicate (round, node, piece) entry");
    }
    src.is_scripted_ = true;
    if (fallback_seed) src.engine_.emplace(*fallback_seed);
    return src;
  }

  /**
   * Picks the target for one staged piece. `candidates` is the node's
   * out-neighbors plus itself, in ascending index order. Seeded sources
   * consume exactly one bounded draw per call.
   */
  int draw_target(std::int64_t round, int node, int piece,
                  const std::vector<int>& candidates) {
    if (candidates.empty())
      throw std::invalid_argument("draw_target: empty candidate list");
    if (is_scripted_) {
      auto it = script_.find(std::make_tuple(round, node, piece));
      if (it != script_.end()) {
        const int target = it->second;
        for (int c : candidates)
          if (c == target) return target;
        throw replay_mismatch(
            "scripted target " + std::to_string(target) + " for (k=" +
            std::to_string(round) + ", node=" + std::to_string(node) +
            ", piece=" + std::to_string(piece) + ") is not an out-neighbor or self");
      }
      if (!engine_)
        throw replay_mismatch(
            "no scripted entry for (k=" + std::to_string(round) + ", node=" +
            std::to_string(node) + ", piece=" + std::to_string(piece) +
            ") and no fallback seed");
    }
    return candidates[engine_->uniform_below(candidates.size())];
  }

private:
  RandomSource() = default;
  bool is_scripted_ = false;
  std::map<std::tuple<std::int64_t, int, int>, int> script_;
  std::optional<Xoshiro256StarStar> engine_;
};

}  // namespace qac

#endif  // QAC_RNG_HPP
