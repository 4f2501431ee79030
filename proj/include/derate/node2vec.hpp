#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "derate/adjacency.hpp"
#include "derate/error.hpp"
#include "derate/graph.hpp"
#include "derate/rng.hpp"

namespace derate {

struct WalkConfig {
  int walks_per_node = 10;
  int walk_length = 40;  // nodes per walk, not steps
  double return_param_p = 1.0;
  double inout_param_q = 1.0;
  uint64_t rng_seed = 1;
};

// Sorted neighbor lists of the symmetrized graph, self-loops dropped.
inline std::vector<std::vector<int>> neighbor_lists(const CircuitGraph& g) {
  std::vector<std::set<int>> nb(g.size());
  for (const auto& e : g.edges) {
    if (e.source == e.target) continue;
    nb[e.source].insert(e.target);
    nb[e.target].insert(e.source);
  }
  std::vector<std::vector<int>> out(g.size());
  for (int i = 0; i < g.size(); ++i) out[i].assign(nb[i].begin(), nb[i].end());
  return out;
}

namespace detail {

inline bool has_neighbor(const std::vector<int>& sorted_nb, int x) {
  return std::binary_search(sorted_nb.begin(), sorted_nb.end(), x);
}

// One biased second-order walk from `start`. Walk (node, walk_index) pairs
// get independent derived seeds, so any execution order reproduces the
// same walk set.
inline std::vector<int> random_walk(const std::vector<std::vector<int>>& nb,
                                    int start, const WalkConfig& cfg, Rng& rng) {
  std::vector<int> walk{start};
  if (nb[start].empty() || cfg.walk_length < 2) return walk;

  walk.push_back(nb[start][rng.index(nb[start].size())]);
  std::vector<double> weights;
  while (static_cast<int>(walk.size()) < cfg.walk_length) {
    int cur = walk[walk.size() - 1];
    int prev = walk[walk.size() - 2];
    const auto& cand = nb[cur];
    weights.resize(cand.size());
    double total = 0.0;
    for (size_t k = 0; k < cand.size(); ++k) {
      double w;
      if (cand[k] == prev)
        w = 1.0 / cfg.return_param_p;
      else if (has_neighbor(nb[prev], cand[k]))
        w = 1.0;
      else
        w = 1.0 / cfg.inout_param_q;
      weights[k] = w;
      total += w;
    }
    double r = rng.uniform() * total;
    size_t pick = cand.size() - 1;
    double acc = 0.0;
    for (size_t k = 0; k < cand.size(); ++k) {
      acc += weights[k];
      if (r < acc) {
        pick = k;
        break;
      }
    }
    walk.push_back(cand[pick]);
  }
  return walk;
}

}  // namespace detail

inline std::vector<std::vector<int>> generate_walks(const CircuitGraph& g,
                                                    const WalkConfig& cfg) {
  if (g.size() == 0) throw ConfigError("generate_walks: empty graph");
  if (cfg.walk_length < 1 || cfg.walks_per_node < 1)
    throw ConfigError("generate_walks: walk_length and walks_per_node must be >= 1");
  if (cfg.return_param_p <= 0.0 || cfg.inout_param_q <= 0.0)
    throw ConfigError("generate_walks: p and q must be positive");

  auto nb = neighbor_lists(g);
  std::vector<std::vector<int>> walks;
  walks.reserve(static_cast<size_t>(g.size()) * cfg.walks_per_node);
  for (int v = 0; v < g.size(); ++v) {
    for (int w = 0; w < cfg.walks_per_node; ++w) {
      Rng rng(seed_combine(cfg.rng_seed, static_cast<uint64_t>(v),
                           static_cast<uint64_t>(w)));
      walks.push_back(detail::random_walk(nb, v, cfg, rng));
    }
  }
  return walks;
}

}  // namespace derate
