#ifndef QAC_GRAPH_HPP
#define QAC_GRAPH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qac {

/**
 * Directed graph on nodes 0..n-1. An edge (j, i) means node i can transmit to
 * node j (i's out-neighbor is j). Self-edges are excluded; the edge list is
 * kept sorted lexicographically and duplicate-free.
 */
struct Digraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // (j, i): i -> j

  Digraph() = default;
  Digraph(int n_, std::vector<std::pair<int, int>> edges_);

  /** Out-neighbor lists in ascending order, indexed by sender. */
  std::vector<std::vector<int>> out_neighbors() const;
  /** In-neighbor lists in ascending order, indexed by receiver. */
  std::vector<std::vector<int>> in_neighbors() const;
  int out_degree(int j) const;
  int max_out_degree() const;
  bool has_edge(int dst, int src) const;

  bool operator==(const Digraph&) const = default;
};

/** True iff every ordered pair of nodes is joined by a directed path. */
bool is_strongly_connected(const Digraph& g);

/**
 * Random strongly connected digraph: a directed Hamiltonian cycle
 * 0 -> 1 -> ... -> n-1 -> 0 seeded first, then every remaining ordered pair
 * added independently with probability `density`. Deterministic in
 * (n, density, seed).
 */
Digraph random_strongly_connected(int n, double density, std::uint64_t seed);

/** Serializes as {"n": int, "edges": [[j, i], ...]} with sorted edges. */
std::string digraph_to_json(const Digraph& g);
Digraph digraph_from_json(const std::string& text);

enum class TopologyMode { Static, WindowUnion, IidCollection };

std::string to_string(TopologyMode mode);
TopologyMode topology_mode_from_string(const std::string& name);

/**
 * Per-round topology source. Static replays the nominal digraph. WindowUnion
 * partitions the nominal edge set uniformly over each window of `window_l`
 * consecutive rounds (so every window's union is the nominal digraph), with
 * optional extra appearances at probability `duplication_prob`. IidCollection
 * samples one member digraph per round with the given probabilities.
 */
struct TopologySchedule {
  TopologyMode mode = TopologyMode::Static;
  Digraph nominal;
  int window_l = 1;                    // WindowUnion
  double duplication_prob = 0.0;       // WindowUnion
  std::vector<Digraph> collection;     // IidCollection
  std::vector<double> probabilities;   // IidCollection, sum to 1

  static TopologySchedule static_graph(Digraph g);
  static TopologySchedule window_union(Digraph nominal, int window_l,
                                       double duplication_prob = 0.0);
  static TopologySchedule iid_collection(std::vector<Digraph> members,
                                         std::vector<double> probabilities);

  /** Throws std::invalid_argument naming the offending field. */
  void validate() const;
};

/** The digraph active in round k; a pure function of (schedule, k, seed). */
Digraph schedule_round(const TopologySchedule& s, std::int64_t k,
                       std::uint64_t seed);

}  // namespace qac

#endif  // QAC_GRAPH_HPP
