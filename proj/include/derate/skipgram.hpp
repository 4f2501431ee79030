#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "derate/error.hpp"
#include "derate/matrix.hpp"
#include "derate/node2vec.hpp"
#include "derate/rng.hpp"

namespace derate {

struct EmbeddingConfig {
  int dimension = 16;
  int window = 5;
  int negatives_per_positive = 5;
  int epochs = 5;
  double learning_rate = 0.025;  // linearly decayed to learning_rate_min
  double learning_rate_min = 1e-4;
  uint64_t rng_seed = 1;
};

using FeatureMatrix = Matrix;

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Cumulative node weights ~ frequency^0.75 for negative sampling.
struct UnigramTable {
  std::vector<int> nodes;
  std::vector<double> cum;
  double total = 0.0;

  UnigramTable(const std::vector<std::vector<int>>& walks, int n) {
    std::vector<long> freq(n, 0);
    for (const auto& w : walks)
      for (int v : w) freq[v]++;
    for (int v = 0; v < n; ++v) {
      if (freq[v] == 0) continue;
      total += std::pow(static_cast<double>(freq[v]), 0.75);
      nodes.push_back(v);
      cum.push_back(total);
    }
  }

  int sample(Rng& rng) const {
    double r = rng.uniform() * total;
    size_t lo = 0, hi = cum.size() - 1;
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (cum[mid] <= r)
        lo = mid + 1;
      else
        hi = mid;
    }
    return nodes[lo];
  }
};

}  // namespace detail

// Skip-gram with negative sampling over the walk corpus. Center vectors are
// the returned features; context vectors start at zero and are discarded.
inline FeatureMatrix train_skipgram(const std::vector<std::vector<int>>& walks,
                                    const EmbeddingConfig& cfg, int n_nodes) {
  if (walks.empty()) throw ConfigError("train_skipgram: no walks");
  if (cfg.dimension < 1 || cfg.window < 1)
    throw ConfigError("train_skipgram: dimension and window must be >= 1");
  for (const auto& w : walks)
    for (int v : w)
      if (v < 0 || v >= n_nodes)
        throw ConfigError("train_skipgram: node index " + std::to_string(v) +
                          " out of range");

  const int d = cfg.dimension;
  Matrix x(n_nodes, d);
  Rng init_rng(seed_combine(cfg.rng_seed, 0xe31));
  for (double& v : x.data()) v = (init_rng.uniform() - 0.5) / d;
  if (cfg.epochs == 0) return x;

  Matrix ctx(n_nodes, d);
  detail::UnigramTable table(walks, n_nodes);
  Rng rng(seed_combine(cfg.rng_seed, 0x7a1));

  long total_positions = 0;
  for (const auto& w : walks) total_positions += static_cast<long>(w.size());
  const long total_steps = total_positions * cfg.epochs;
  long step = 0;

  std::vector<double> err(d);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& walk : walks) {
      const int len = static_cast<int>(walk.size());
      for (int i = 0; i < len; ++i, ++step) {
        double alpha =
            total_steps > 1
                ? cfg.learning_rate - (cfg.learning_rate - cfg.learning_rate_min) *
                                          static_cast<double>(step) /
                                          static_cast<double>(total_steps - 1)
                : cfg.learning_rate;
        const int u = walk[i];
        double* xu = x.row(u);
        for (int j = std::max(0, i - cfg.window);
             j <= std::min(len - 1, i + cfg.window); ++j) {
          if (j == i) continue;
          const int pos = walk[j];
          std::fill(err.begin(), err.end(), 0.0);
          for (int k = 0; k <= cfg.negatives_per_positive; ++k) {
            int target;
            double label;
            if (k == 0) {
              target = pos;
              label = 1.0;
            } else {
              target = table.sample(rng);
              if (target == pos) continue;
              label = 0.0;
            }
            double* cv = ctx.row(target);
            double s = 0.0;
            for (int e = 0; e < d; ++e) s += xu[e] * cv[e];
            const double g = detail::sigmoid(s) - label;
            for (int e = 0; e < d; ++e) {
              err[e] += g * cv[e];
              cv[e] -= alpha * g * xu[e];
            }
          }
          for (int e = 0; e < d; ++e) xu[e] -= alpha * err[e];
        }
      }
    }
  }
  return x;
}

inline FeatureMatrix embed(const CircuitGraph& g, const WalkConfig& wcfg,
                           const EmbeddingConfig& ecfg) {
  return train_skipgram(generate_walks(g, wcfg), ecfg, g.size());
}

// CSV: header node_id,f0,...,f{D-1}; one row per node; 9 significant digits.
inline std::string write_embeddings_csv(const FeatureMatrix& x) {
  std::ostringstream out;
  out << "node_id";
  for (int j = 0; j < x.cols(); ++j) out << ",f" << j;
  out << "\n";
  char buf[40];
  for (int i = 0; i < x.rows(); ++i) {
    out << i;
    for (int j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", x(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
  return out.str();
}

inline FeatureMatrix read_embeddings_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("embeddings CSV: empty file");
  {
    std::istringstream hs(line);
    std::string field;
    if (!std::getline(hs, field, ',') || field != "node_id")
      throw ParseError("embeddings CSV: bad header");
    int j = 0;
    while (std::getline(hs, field, ','))
      if (field != "f" + std::to_string(j++))
        throw ParseError("embeddings CSV: bad header");
    if (j == 0) throw ParseError("embeddings CSV: bad header");
  }
  int cols = 0;
  for (char c : line) cols += c == ',';
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<double> vals;
    bool first = true;
    while (std::getline(ls, field, ',')) {
      try {
        if (first) {
          first = false;
          if (std::stol(field) != static_cast<long>(rows.size()))
            throw ParseError("embeddings CSV: node ids must be 0..N-1 in order",
                             lineno, 1);
          continue;
        }
        vals.push_back(std::stod(field));
      } catch (const std::logic_error&) {
        throw ParseError("embeddings CSV: bad number", lineno, 1);
      }
    }
    if (static_cast<int>(vals.size()) != cols)
      throw ParseError("embeddings CSV: wrong column count", lineno, 1);
    rows.push_back(std::move(vals));
  }
  Matrix x(static_cast<int>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < cols; ++j) x(static_cast<int>(i), j) = rows[i][j];
  return x;
}

}  // namespace derate
