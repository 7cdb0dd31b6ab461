#include "qac/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qac/rng.hpp"

namespace qac {

namespace {

void check_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 2) throw std::invalid_argument("Digraph: n must be >= 2");
  for (const auto& [j, i] : edges) {
    if (j == i) throw std::invalid_argument("Digraph: self-edges are excluded");
    if (j < 0 || j >= n || i < 0 || i >= n)
      throw std::invalid_argument("Digraph: edge endpoint out of range");
  }
}

}  // namespace

Digraph::Digraph(int n_, std::vector<std::pair<int, int>> edges_)
    : n(n_), edges(std::move(edges_)) {
  check_edges(n, edges);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

std::vector<std::vector<int>> Digraph::out_neighbors() const {
  std::vector<std::vector<int>> out(n);
  for (const auto& [j, i] : edges) out[i].push_back(j);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<std::vector<int>> Digraph::in_neighbors() const {
  std::vector<std::vector<int>> in(n);
  for (const auto& [j, i] : edges) in[j].push_back(i);
  for (auto& v : in) std::sort(v.begin(), v.end());
  return in;
}

int Digraph::out_degree(int j) const {
  int d = 0;
  for (const auto& e : edges) d += (e.second == j);
  return d;
}

int Digraph::max_out_degree() const {
  std::vector<int> d(n, 0);
  for (const auto& e : edges) ++d[e.second];
  return *std::max_element(d.begin(), d.end());
}

bool Digraph::has_edge(int dst, int src) const {
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(dst, src));
}

bool is_strongly_connected(const Digraph& g) {
  if (g.n <= 1) return true;
  auto reaches_all = [&](const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(g.n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          q.push(w);
        }
    }
    return count == g.n;
  };
  return reaches_all(g.out_neighbors()) && reaches_all(g.in_neighbors());
}

Digraph random_strongly_connected(int n, double density, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("random_strongly_connected: n must be >= 2");
  if (density < 0.0 || density > 1.0)
    throw std::invalid_argument("random_strongly_connected: density must be in [0, 1]");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back((i + 1) % n, i);
  std::sort(edges.begin(), edges.end());
  // Bernoulli(density) per remaining ordered pair, in lexicographic order.
  Xoshiro256StarStar rng(seed);
  const auto threshold =
      static_cast<std::uint64_t>(std::llround(density * 9007199254740992.0));  // 2^53
  std::vector<std::pair<int, int>> extra;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      std::pair<int, int> e{j, i};
      if (std::binary_search(edges.begin(), edges.end(), e)) continue;
      if (rng.uniform_below(9007199254740992ULL) < threshold) extra.push_back(e);
    }
  edges.insert(edges.end(), extra.begin(), extra.end());
  return Digraph(n, std::move(edges));
}

std::string digraph_to_json(const Digraph& g) {
  nlohmann::json j;
  j["n"] = g.n;
  auto edges = nlohmann::json::array();
  for (const auto& [dst, src] : g.edges) edges.push_back({dst, src});
  j["edges"] = edges;
  return j.dump();
}

Digraph digraph_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.is_object() || !j.contains("n") || !j.contains("edges"))
    throw std::invalid_argument("digraph JSON: expected object with \"n\" and \"edges\"");
  if (!j["n"].is_number_integer())
    throw std::invalid_argument("digraph JSON: \"n\" must be an integer");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument("digraph JSON: each edge must be a [j, i] pair");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return Digraph(j["n"].get<int>(), std::move(edges));
}

std::string to_string(TopologyMode mode) {
  switch (mode) {
    case TopologyMode::Static: return "static";
    case TopologyMode::WindowUnion: return "window_union";
    case TopologyMode::IidCollection: return "iid_collection";
  }
  return "?";
}

TopologyMode topology_mode_from_string(const std::string& name) {
  if (name == "static") return TopologyMode::Static;
  if (name == "window_union") return TopologyMode::WindowUnion;
  if (name == "iid_collection") return TopologyMode::IidCollection;
  throw std::invalid_argument("topology mode: expected static, window_union, or "
                              "iid_collection, got \"" + name + "\"");
}

TopologySchedule TopologySchedule::static_graph(Digraph g) {
  TopologySchedule s;
  s.mode = TopologyMode::Static;
  s.nominal = std::move(g);
  s.validate();
  return s;
}

TopologySchedule TopologySchedule::window_union(Digraph nominal, int window_l,
                                                double duplication_prob) {
  TopologySchedule s;
  s.mode = TopologyMode::WindowUnion;
  s.nominal = std::move(nominal);
  s.window_l = window_l;
  s.duplication_prob = duplication_prob;
  s.validate();
  return s;
}

TopologySchedule TopologySchedule::iid_collection(
    std::vector<Digraph> members, std::vector<double> probabilities) {
  TopologySchedule s;
  s.mode = TopologyMode::IidCollection;
  s.collection = std::move(members);
  s.probabilities = std::move(probabilities);
  // The nominal digraph of an i.i.d. collection is the union graph.
  if (!s.collection.empty()) {
    std::vector<std::pair<int, int>> all;
    for (const auto& g : s.collection)
      all.insert(all.end(), g.edges.begin(), g.edges.end());
    s.nominal = Digraph(s.collection.front().n, std::move(all));
  }
  s.validate();
  return s;
}

void TopologySchedule::validate() const {
  if (mode != TopologyMode::IidCollection && nominal.n < 2)
    throw std::invalid_argument("schedule: nominal digraph is not set");
  if (mode == TopologyMode::WindowUnion) {
    if (window_l < 1)
      throw std::invalid_argument("schedule: window_l must be >= 1");
    if (duplication_prob < 0.0 || duplication_prob > 1.0)
      throw std::invalid_argument("schedule: duplication_prob must be in [0, 1]");
  }
  if (mode == TopologyMode::IidCollection) {
    if (collection.empty())
      throw std::invalid_argument("schedule: collection must be nonempty");
    for (const auto& g : collection)
      if (g.n != collection.front().n)
        throw std::invalid_argument("schedule: collection members disagree on n");
    if (probabilities.size() != collection.size())
      throw std::invalid_argument(
          "schedule: probabilities must match collection size");
    double sum = 0.0;
    for (double p : probabilities) {
      if (p <= 0.0)
        throw std::invalid_argument("schedule: every probability must be > 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("schedule: probabilities must sum to 1");
    if (!is_strongly_connected(nominal))
      throw std::invalid_argument(
          "schedule: union of the collection must be strongly connected");
  }
}

Digraph schedule_round(const TopologySchedule& s, std::int64_t k,
                       std::uint64_t seed) {
  switch (s.mode) {
    case TopologyMode::Static:
      return s.nominal;
    case TopologyMode::WindowUnion: {
      const std::int64_t window = k / s.window_l;
      const int slot = static_cast<int>(k % s.window_l);
      Xoshiro256StarStar rng(derive_seed(seed, static_cast<std::uint64_t>(window)));
      std::vector<std::pair<int, int>> active;
      // One uniform slot per nominal edge: every window's union is nominal.
      std::vector<int> assigned(s.nominal.edges.size());
      for (std::size_t e = 0; e < s.nominal.edges.size(); ++e)
        assigned[e] = static_cast<int>(
            rng.uniform_below(static_cast<std::uint64_t>(s.window_l)));
      for (std::size_t e = 0; e < s.nominal.edges.size(); ++e)
        if (assigned[e] == slot) active.push_back(s.nominal.edges[e]);
      if (s.duplication_prob > 0.0) {
        // Draw order is fixed per window (edge-major, slot-minor), so every
        // slot of the window sees the same duplication decisions.
        for (std::size_t e = 0; e < s.nominal.edges.size(); ++e)
          for (int t = 0; t < s.window_l; ++t) {
            if (t == assigned[e]) continue;
            const bool duplicated = rng.uniform01() < s.duplication_prob;
            if (duplicated && t == slot) active.push_back(s.nominal.edges[e]);
          }
      }
      return Digraph(s.nominal.n, std::move(active));
    }
    case TopologyMode::IidCollection: {
      Xoshiro256StarStar rng(derive_seed(seed, static_cast<std::uint64_t>(k), 1));
      const double u = rng.uniform01();
      double acc = 0.0;
      for (std::size_t i = 0; i < s.collection.size(); ++i) {
        acc += s.probabilities[i];
        if (u < acc) return s.collection[i];
      }
      return s.collection.back();
    }
  }
  throw std::logic_error("schedule_round: unknown mode");
}

}  // namespace qac
