#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "derate/adjacency.hpp"
#include "derate/campaign.hpp"
#include "derate/error.hpp"
#include "derate/matrix.hpp"
#include "derate/rng.hpp"

namespace derate {

// Layer stack is [input D, hidden..., 1]; hidden layers use tanh, the
// output unit a logistic squash so predictions live in (0,1). No biases
// anywhere.
struct GcnConfig {
  std::vector<int> layer_dims = {16, 4, 2, 1};
  double learning_rate = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 2000;
  uint64_t weight_init_seed = 1;

  void validate() const {
    if (layer_dims.size() < 3)
      throw ConfigError("gcn: need at least one hidden layer");
    if (layer_dims.back() != 1) throw ConfigError("gcn: output dimension must be 1");
    for (int d : layer_dims)
      if (d < 1) throw ConfigError("gcn: layer dimensions must be positive");
    if (epochs < 0) throw ConfigError("gcn: epochs must be >= 0");
  }
};

struct GcnModel {
  std::vector<Matrix> weights;  // weights[l]: layer_dims[l] x layer_dims[l+1]

  long parameter_count() const {
    long n = 0;
    for (const auto& w : weights) n += static_cast<long>(w.rows()) * w.cols();
    return n;
  }
};

// Labeled flip-flop nodes for the masked regression loss.
struct TrainingSet {
  std::vector<int> node_indices;
  std::vector<double> labels;
};

inline GcnModel init_weights(const GcnConfig& cfg) {
  cfg.validate();
  GcnModel m;
  Rng rng(cfg.weight_init_seed);
  for (size_t l = 0; l + 1 < cfg.layer_dims.size(); ++l) {
    const int fan_in = cfg.layer_dims[l];
    const int fan_out = cfg.layer_dims[l + 1];
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.data()) v = (rng.uniform() * 2.0 - 1.0) * s;
    m.weights.push_back(std::move(w));
  }
  return m;
}

struct ForwardCache {
  std::vector<Matrix> h;    // h[0] = X, h[l+1] = activation output; h[L] = Z
  std::vector<Matrix> agg;  // agg[l] = S * h[l]
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Z = logistic(S tanh(... S tanh(S X W0) W1 ...) W_last)
inline Matrix forward(const SparseMatrix& s, const Matrix& x, const GcnModel& m,
                      ForwardCache* cache = nullptr) {
  if (m.weights.empty()) throw ConfigError("gcn: empty model");
  if (x.rows() != s.n) throw ConfigError("gcn: X row count != graph size");
  if (x.cols() != m.weights[0].rows())
    throw ConfigError("gcn: X column count != input layer width");

  const size_t layers = m.weights.size();
  Matrix h = x;
  if (cache) {
    cache->h.clear();
    cache->agg.clear();
    cache->h.push_back(h);
  }
  for (size_t l = 0; l < layers; ++l) {
    if (h.cols() != m.weights[l].rows()) throw ConfigError("gcn: weight shape mismatch");
    Matrix aggregated = spmm(s, h);
    Matrix pre = matmul(aggregated, m.weights[l]);
    const bool output_layer = l + 1 == layers;
    for (double& v : pre.data()) v = output_layer ? logistic(v) : std::tanh(v);
    if (cache) {
      cache->agg.push_back(std::move(aggregated));
      cache->h.push_back(pre);
    }
    h = std::move(pre);
  }
  return h;
}

inline double masked_mse_loss(const Matrix& z, const TrainingSet& t) {
  if (t.node_indices.empty()) throw ConfigError("gcn: empty training mask");
  if (t.node_indices.size() != t.labels.size())
    throw ConfigError("gcn: mask/label size mismatch");
  double total = 0.0;
  for (size_t i = 0; i < t.node_indices.size(); ++i) {
    const int idx = t.node_indices[i];
    if (idx < 0 || idx >= z.rows()) throw ConfigError("gcn: mask index out of range");
    const double d = z(idx, 0) - t.labels[i];
    total += d * d;
  }
  return total / static_cast<double>(t.node_indices.size());
}

// Exact gradients of the masked loss. Uses S^T = S.
inline std::vector<Matrix> backward(const ForwardCache& cache, const TrainingSet& t,
                                    const SparseMatrix& s, const GcnModel& m) {
  const size_t layers = m.weights.size();
  if (cache.h.size() != layers + 1 || cache.agg.size() != layers)
    throw ConfigError("gcn: stale forward cache");
  const Matrix& z = cache.h.back();
  if (z.cols() != 1) throw ConfigError("gcn: stale forward cache");

  const double mask_n = static_cast<double>(t.node_indices.size());
  Matrix dh(z.rows(), 1);
  for (size_t i = 0; i < t.node_indices.size(); ++i) {
    const int idx = t.node_indices[i];
    if (idx < 0 || idx >= z.rows()) throw ConfigError("gcn: mask index out of range");
    dh(idx, 0) += 2.0 * (z(idx, 0) - t.labels[i]) / mask_n;
  }

  std::vector<Matrix> grads(layers);
  for (size_t l = layers; l-- > 0;) {
    const Matrix& out = cache.h[l + 1];
    if (!dh.same_shape(out)) throw ConfigError("gcn: stale forward cache");
    Matrix dpre = dh;
    const bool output_layer = l + 1 == layers;
    for (int r = 0; r < out.rows(); ++r)
      for (int c = 0; c < out.cols(); ++c) {
        const double h = out(r, c);
        dpre(r, c) *= output_layer ? h * (1.0 - h) : 1.0 - h * h;
      }
    grads[l] = matmul_at_b(cache.agg[l], dpre);
    if (l > 0) dh = spmm(s, matmul_a_bt(dpre, m.weights[l]));
  }
  return grads;
}

struct AdamState {
  std::vector<Matrix> m1, m2;
  long step = 0;

  static AdamState zeros_like(const GcnModel& model) {
    AdamState st;
    for (const auto& w : model.weights) {
      st.m1.emplace_back(w.rows(), w.cols());
      st.m2.emplace_back(w.rows(), w.cols());
    }
    return st;
  }
};

inline void adam_step(GcnModel& model, const std::vector<Matrix>& grads,
                      AdamState& state, const GcnConfig& cfg) {
  if (grads.size() != model.weights.size() || state.m1.size() != model.weights.size())
    throw ConfigError("adam: gradient/state shape mismatch");
  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (size_t l = 0; l < model.weights.size(); ++l) {
    auto& w = model.weights[l].data();
    auto& m1 = state.m1[l].data();
    auto& m2 = state.m2[l].data();
    const auto& g = grads[l].data();
    if (g.size() != w.size()) throw ConfigError("adam: gradient/state shape mismatch");
    for (size_t i = 0; i < w.size(); ++i) {
      m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
      m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m1[i] / c1;
      const double vhat = m2[i] / c2;
      w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  }
}

struct TrainResult {
  GcnModel model;
  // Loss at the start of each epoch plus the final loss: epochs + 1 entries.
  std::vector<double> loss_history;
};

inline TrainResult train(const SparseMatrix& s, const Matrix& x, const TrainingSet& t,
                         const GcnConfig& cfg) {
  cfg.validate();
  TrainResult res;
  res.model = init_weights(cfg);
  AdamState state = AdamState::zeros_like(res.model);
  ForwardCache cache;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix z = forward(s, x, res.model, &cache);
    res.loss_history.push_back(masked_mse_loss(z, t));
    auto grads = backward(cache, t, s, res.model);
    adam_step(res.model, grads, state, cfg);
  }
  res.loss_history.push_back(masked_mse_loss(forward(s, x, res.model), t));
  return res;
}

struct PredictTarget {
  int node;
  std::string name;
};

inline FdrTable predict(const SparseMatrix& s, const Matrix& x, const GcnModel& m,
                        const std::vector<PredictTarget>& targets) {
  Matrix z = forward(s, x, m);
  FdrTable table;
  table.source = FdrSource::Predicted;
  for (const auto& tgt : targets) {
    if (tgt.node < 0 || tgt.node >= z.rows())
      throw ConfigError("predict: target node out of range");
    table.rows.push_back({tgt.name, 0, 0, z(tgt.node, 0)});
  }
  return table;
}

// Weights file, line-oriented text. %.17g round-trips doubles bit-exactly.
inline std::string write_model(const GcnModel& m, const GcnConfig& cfg) {
  std::ostringstream out;
  out << "gcn-model v1\n";
  out << "dims";
  for (int d : cfg.layer_dims) out << ' ' << d;
  out << "\nseed " << cfg.weight_init_seed << "\n";
  char buf[40];
  for (size_t l = 0; l < m.weights.size(); ++l) {
    const auto& w = m.weights[l];
    out << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << "\n";
    for (int r = 0; r < w.rows(); ++r) {
      for (int c = 0; c < w.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", w(r, c));
        out << (c ? " " : "") << buf;
      }
      out << "\n";
    }
  }
  out << "end\n";
  return out.str();
}

struct LoadedModel {
  GcnModel model;
  std::vector<int> layer_dims;
  uint64_t weight_init_seed = 0;
};

inline LoadedModel read_model(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  LoadedModel lm;
  in >> tok;
  std::string ver;
  in >> ver;
  if (tok != "gcn-model" || ver != "v1") throw ParseError("model file: bad magic");
  in >> tok;
  if (tok != "dims") throw ParseError("model file: expected dims");
  std::string line;
  std::getline(in, line);
  std::istringstream dims_in(line);
  int d;
  while (dims_in >> d) lm.layer_dims.push_back(d);
  if (lm.layer_dims.size() < 2) throw ParseError("model file: bad dims");
  in >> tok >> lm.weight_init_seed;
  if (tok != "seed") throw ParseError("model file: expected seed");
  for (size_t l = 0; l + 1 < lm.layer_dims.size(); ++l) {
    size_t li;
    int rows, cols;
    in >> tok >> li >> rows >> cols;
    if (!in || tok != "layer" || li != l) throw ParseError("model file: expected layer " + std::to_string(l));
    if (rows != lm.layer_dims[l] || cols != lm.layer_dims[l + 1])
      throw ParseError("model file: layer shape does not match dims");
    Matrix w(rows, cols);
    for (double& v : w.data())
      if (!(in >> v)) throw ParseError("model file: truncated weights");
    lm.model.weights.push_back(std::move(w));
  }
  in >> tok;
  if (tok != "end") throw ParseError("model file: missing end marker");
  return lm;
}

}  // namespace derate
