#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "derate/gcn.hpp"
#include "derate/rng.hpp"
#include "test_util.hpp"

using namespace derate;

namespace {

SparseMatrix adjacency_of(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::set<int>> nb(n);
  for (auto [a, b] : edges) {
    nb[a].insert(b);
    nb[b].insert(a);
  }
  SparseMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j : nb[i]) m.rows[i].emplace_back(j, 1.0);
  return m;
}

SparseMatrix norm_of(int n, const std::vector<std::pair<int, int>>& edges) {
  return normalize_adjacency(adjacency_of(n, edges));
}

std::vector<std::pair<int, int>> random_edges(int n, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < 0.4) edges.emplace_back(i, j);
  if (edges.empty()) edges.emplace_back(0, n - 1);
  return edges;
}

Matrix random_features(int n, int d, Rng& rng) {
  Matrix x(n, d);
  for (double& v : x.data()) v = rng.uniform() * 2.0 - 1.0;
  return x;
}

GcnConfig small_config(std::vector<int> dims, uint64_t seed) {
  GcnConfig cfg;
  cfg.layer_dims = std::move(dims);
  cfg.weight_init_seed = seed;
  return cfg;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

}  // namespace

TEST(GcnInit, ShapesBoundsDeterminism) {
  GcnConfig cfg = small_config({5, 4, 2, 1}, 7);
  GcnModel m = init_weights(cfg);
  ASSERT_EQ(m.weights.size(), 3u);
  EXPECT_EQ(m.weights[0].rows(), 5);
  EXPECT_EQ(m.weights[0].cols(), 4);
  EXPECT_EQ(m.weights[1].rows(), 4);
  EXPECT_EQ(m.weights[1].cols(), 2);
  EXPECT_EQ(m.weights[2].rows(), 2);
  EXPECT_EQ(m.weights[2].cols(), 1);
  EXPECT_EQ(m.parameter_count(), 5 * 4 + 4 * 2 + 2 * 1);
  for (size_t l = 0; l < m.weights.size(); ++l) {
    double s = std::sqrt(6.0 / (cfg.layer_dims[l] + cfg.layer_dims[l + 1]));
    for (double v : m.weights[l].data()) EXPECT_LE(std::abs(v), s);
  }
  GcnModel again = init_weights(cfg);
  for (size_t l = 0; l < m.weights.size(); ++l)
    EXPECT_EQ(m.weights[l].data(), again.weights[l].data());
  cfg.weight_init_seed = 8;
  GcnModel other = init_weights(cfg);
  EXPECT_NE(m.weights[0].data(), other.weights[0].data());
}

TEST(GcnInit, ConfigValidation) {
  EXPECT_THROW(init_weights(small_config({4, 1}, 1)), ConfigError);
  EXPECT_THROW(init_weights(small_config({4, 2, 2}, 1)), ConfigError);
  EXPECT_THROW(init_weights(small_config({4, 0, 1}, 1)), ConfigError);
  GcnConfig cfg = small_config({4, 2, 1}, 1);
  cfg.epochs = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(GcnForward, ZeroWeightsGiveOneHalf) {
  SparseMatrix s = norm_of(3, {{0, 1}, {1, 2}});
  Matrix x(3, 4, 0.3);
  GcnModel m;
  m.weights.emplace_back(4, 2);
  m.weights.emplace_back(2, 1);
  Matrix z = forward(s, x, m);
  ASSERT_EQ(z.rows(), 3);
  ASSERT_EQ(z.cols(), 1);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(z(i, 0), 0.5);
}

TEST(GcnForward, SingleNodeClosedForm) {
  SparseMatrix s = normalize_adjacency(SparseMatrix(1));  // S = [1]
  Matrix x(1, 1);
  x(0, 0) = 0.7;
  GcnModel m;
  m.weights.emplace_back(1, 1);
  m.weights.emplace_back(1, 1);
  m.weights[0](0, 0) = 0.9;
  m.weights[1](0, 0) = -1.3;
  double expect = logistic(std::tanh(0.7 * 0.9) * -1.3);
  EXPECT_NEAR(forward(s, x, m)(0, 0), expect, 1e-15);
}

TEST(GcnForward, ShapeValidation) {
  SparseMatrix s = norm_of(3, {{0, 1}});
  Matrix x(3, 4);
  GcnModel empty;
  EXPECT_THROW(forward(s, x, empty), ConfigError);
  GcnModel m = init_weights(small_config({4, 2, 1}, 1));
  EXPECT_THROW(forward(s, Matrix(2, 4), m), ConfigError);
  EXPECT_THROW(forward(s, Matrix(3, 5), m), ConfigError);
}

TEST(GcnForward, MatchesPerNodeEvaluation) {
  Rng rng(301);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 3 + static_cast<int>(rng.index(10));
    SparseMatrix s = norm_of(n, random_edges(n, rng));
    Matrix x = random_features(n, 5, rng);
    GcnModel m = init_weights(small_config({5, 4, 2, 1}, 50 + trial));

    Matrix z = forward(s, x, m);

    // same network evaluated one node and one scalar at a time
    Matrix h = x;
    for (size_t l = 0; l < m.weights.size(); ++l) {
      const Matrix& w = m.weights[l];
      Matrix out(n, w.cols());
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < w.cols(); ++c) {
          double pre = 0.0;
          for (int k = 0; k < w.rows(); ++k) {
            double agg = 0.0;
            for (int j = 0; j < n; ++j) agg += s.at(i, j) * h(j, k);
            pre += agg * w(k, c);
          }
          out(i, c) = (l + 1 == m.weights.size()) ? logistic(pre) : std::tanh(pre);
        }
      h = out;
    }
    for (int i = 0; i < n; ++i)
      EXPECT_NEAR(z(i, 0), h(i, 0), 1e-12) << "trial " << trial << " node " << i;
  }
}

TEST(GcnLoss, MaskedMseCases) {
  Matrix z(4, 1);
  z(0, 0) = 0.5;
  z(1, 0) = 0.5;
  z(2, 0) = 0.9;
  z(3, 0) = 0.1;
  EXPECT_DOUBLE_EQ(masked_mse_loss(z, {{2, 3}, {0.9, 0.1}}), 0.0);
  EXPECT_DOUBLE_EQ(masked_mse_loss(z, {{0}, {1.0}}), 0.25);
  EXPECT_DOUBLE_EQ(masked_mse_loss(z, {{0, 1}, {1.0, 0.0}}), 0.25);
  EXPECT_THROW(masked_mse_loss(z, {{}, {}}), ConfigError);
  EXPECT_THROW(masked_mse_loss(z, {{0, 1}, {1.0}}), ConfigError);
  EXPECT_THROW(masked_mse_loss(z, {{4}, {1.0}}), ConfigError);
}

TEST(GcnBackward, ZeroResidualGivesZeroGradients) {
  Rng rng(77);
  SparseMatrix s = norm_of(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  Matrix x = random_features(5, 3, rng);
  GcnModel m = init_weights(small_config({3, 4, 2, 1}, 5));
  ForwardCache cache;
  Matrix z = forward(s, x, m, &cache);
  TrainingSet t{{1, 3}, {z(1, 0), z(3, 0)}};
  auto grads = backward(cache, t, s, m);
  ASSERT_EQ(grads.size(), m.weights.size());
  for (const auto& g : grads)
    for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(GcnBackward, MatchesFiniteDifferences) {
  struct Instance {
    int n, d;
    uint64_t seed;
  };
  Rng rng(909);
  for (Instance inst : {Instance{6, 4, 11}, Instance{9, 3, 12}}) {
    SparseMatrix s = norm_of(inst.n, random_edges(inst.n, rng));
    Matrix x = random_features(inst.n, inst.d, rng);
    GcnModel m = init_weights(small_config({inst.d, 4, 2, 1}, inst.seed));
    TrainingSet t;
    for (int i = 0; i < inst.n; i += 2) {
      t.node_indices.push_back(i);
      t.labels.push_back(rng.uniform());
    }

    ForwardCache cache;
    forward(s, x, m, &cache);
    auto grads = backward(cache, t, s, m);

    const double h = 1e-5;
    for (size_t l = 0; l < m.weights.size(); ++l)
      for (size_t i = 0; i < m.weights[l].data().size(); ++i) {
        double saved = m.weights[l].data()[i];
        m.weights[l].data()[i] = saved + h;
        double up = masked_mse_loss(forward(s, x, m), t);
        m.weights[l].data()[i] = saved - h;
        double down = masked_mse_loss(forward(s, x, m), t);
        m.weights[l].data()[i] = saved;
        double fd = (up - down) / (2.0 * h);
        EXPECT_LT(rel_err(grads[l].data()[i], fd), 1e-5)
            << "layer " << l << " weight " << i << " analytic " << grads[l].data()[i]
            << " fd " << fd;
      }
  }
}

TEST(GcnBackward, GradientsScaleLinearlyWithResiduals) {
  Rng rng(404);
  SparseMatrix s = norm_of(7, random_edges(7, rng));
  Matrix x = random_features(7, 4, rng);
  GcnModel m = init_weights(small_config({4, 3, 2, 1}, 21));
  ForwardCache cache;
  Matrix z = forward(s, x, m, &cache);

  TrainingSet t1{{0, 2, 5}, {}};
  TrainingSet t2{{0, 2, 5}, {}};
  for (int idx : t1.node_indices) {
    double y = rng.uniform();
    t1.labels.push_back(y);
    t2.labels.push_back(2.0 * y - z(idx, 0));  // doubles every residual
  }
  auto g1 = backward(cache, t1, s, m);
  auto g2 = backward(cache, t2, s, m);
  for (size_t l = 0; l < g1.size(); ++l)
    for (size_t i = 0; i < g1[l].data().size(); ++i)
      EXPECT_LT(rel_err(2.0 * g1[l].data()[i], g2[l].data()[i]), 1e-12);
}

TEST(GcnBackward, RejectsStaleCache) {
  SparseMatrix s = norm_of(3, {{0, 1}, {1, 2}});
  Matrix x(3, 4, 0.1);
  GcnModel m = init_weights(small_config({4, 2, 1}, 1));
  ForwardCache cache;
  EXPECT_THROW(backward(cache, {{0}, {0.5}}, s, m), ConfigError);
}

TEST(Adam, ZeroGradientLeavesWeightsUnchanged) {
  GcnConfig cfg = small_config({3, 2, 1}, 4);
  GcnModel m = init_weights(cfg);
  GcnModel before = m;
  AdamState st = AdamState::zeros_like(m);
  std::vector<Matrix> zero;
  for (const auto& w : m.weights) zero.emplace_back(w.rows(), w.cols());
  adam_step(m, zero, st, cfg);
  for (size_t l = 0; l < m.weights.size(); ++l)
    EXPECT_EQ(m.weights[l].data(), before.weights[l].data());
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  GcnConfig cfg = small_config({1, 1, 1}, 1);
  GcnModel m;
  m.weights.emplace_back(1, 1);
  m.weights.emplace_back(1, 1);
  m.weights[0](0, 0) = 0.3;
  m.weights[1](0, 0) = -0.2;
  AdamState st = AdamState::zeros_like(m);
  std::vector<Matrix> g;
  g.emplace_back(1, 1, 0.5);
  g.emplace_back(1, 1, -0.25);
  adam_step(m, g, st, cfg);
  // bias correction makes the first update lr * sign(grad) up to epsilon
  EXPECT_NEAR(m.weights[0](0, 0), 0.3 - cfg.learning_rate, 1e-6);
  EXPECT_NEAR(m.weights[1](0, 0), -0.2 + cfg.learning_rate, 1e-6);
}

TEST(Adam, ConstantGradientClosedForm) {
  GcnConfig cfg = small_config({1, 1, 1}, 1);
  GcnModel m;
  m.weights.emplace_back(1, 1);
  m.weights.emplace_back(1, 1);
  m.weights[0](0, 0) = 1.0;
  m.weights[1](0, 0) = -2.0;
  AdamState st = AdamState::zeros_like(m);
  const double g0 = 0.7, g1 = -0.03;
  for (int step = 0; step < 3; ++step) {
    std::vector<Matrix> g;
    g.emplace_back(1, 1, g0);
    g.emplace_back(1, 1, g1);
    adam_step(m, g, st, cfg);
  }
  // constant gradient: mhat = g and vhat = g^2 at every step, so each step
  // subtracts lr * g / (|g| + eps)
  double expect0 = 1.0 - 3.0 * cfg.learning_rate * g0 / (std::abs(g0) + cfg.adam_epsilon);
  double expect1 = -2.0 - 3.0 * cfg.learning_rate * g1 / (std::abs(g1) + cfg.adam_epsilon);
  EXPECT_NEAR(m.weights[0](0, 0), expect0, 1e-12);
  EXPECT_NEAR(m.weights[1](0, 0), expect1, 1e-12);
}

TEST(GcnTrain, ZeroEpochsReturnsInitialWeights) {
  Rng rng(88);
  SparseMatrix s = norm_of(6, random_edges(6, rng));
  Matrix x = random_features(6, 3, rng);
  GcnConfig cfg = small_config({3, 4, 2, 1}, 13);
  cfg.epochs = 0;
  TrainResult res = train(s, x, {{0, 3}, {0.2, 0.8}}, cfg);
  GcnModel init = init_weights(cfg);
  for (size_t l = 0; l < init.weights.size(); ++l)
    EXPECT_EQ(res.model.weights[l].data(), init.weights[l].data());
  ASSERT_EQ(res.loss_history.size(), 1u);
}

TEST(GcnTrain, DeterministicAndLossImproves) {
  Rng rng(55);
  SparseMatrix s = norm_of(12, random_edges(12, rng));
  Matrix x = random_features(12, 4, rng);
  TrainingSet t;
  for (int i : {0, 2, 5, 7, 9, 11}) {
    t.node_indices.push_back(i);
    t.labels.push_back(rng.uniform());
  }
  GcnConfig cfg = small_config({4, 4, 2, 1}, 31);
  cfg.epochs = 400;
  TrainResult a = train(s, x, t, cfg);
  TrainResult b = train(s, x, t, cfg);
  EXPECT_EQ(write_model(a.model, cfg), write_model(b.model, cfg));
  EXPECT_EQ(a.loss_history, b.loss_history);
  ASSERT_EQ(a.loss_history.size(), 401u);
  EXPECT_LT(a.loss_history.back(), a.loss_history.front());

  // after burn-in the 50-epoch moving average should not climb
  auto ma = [&](size_t i) {
    double acc = 0.0;
    for (size_t k = i; k < i + 50; ++k) acc += a.loss_history[k];
    return acc / 50.0;
  };
  for (size_t i = 100; i + 51 < a.loss_history.size(); ++i)
    EXPECT_LE(ma(i + 1), ma(i) * 1.02) << "epoch " << i;
}

TEST(GcnPredict, RowsMatchTargetsAndRange) {
  Rng rng(66);
  SparseMatrix s = norm_of(5, random_edges(5, rng));
  Matrix x = random_features(5, 3, rng);
  GcnModel m = init_weights(small_config({3, 2, 1}, 3));
  std::vector<PredictTarget> targets = {{1, "ffa"}, {4, "ffb"}};
  FdrTable table = predict(s, x, m, targets);
  EXPECT_EQ(table.source, FdrSource::Predicted);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].flipflop, "ffa");
  EXPECT_EQ(table.rows[1].flipflop, "ffb");
  for (const auto& r : table.rows) {
    EXPECT_GT(r.fdr, 0.0);
    EXPECT_LT(r.fdr, 1.0);
  }
  EXPECT_THROW(predict(s, x, m, {{5, "oops"}}), ConfigError);
  EXPECT_THROW(predict(s, x, m, {{-1, "oops"}}), ConfigError);
}

TEST(GcnModelFile, RoundTripIsBitExact) {
  GcnConfig cfg = small_config({6, 4, 2, 1}, 9);
  GcnModel m = init_weights(cfg);
  std::string text = write_model(m, cfg);
  LoadedModel lm = read_model(text);
  EXPECT_EQ(lm.layer_dims, cfg.layer_dims);
  EXPECT_EQ(lm.weight_init_seed, cfg.weight_init_seed);
  ASSERT_EQ(lm.model.weights.size(), m.weights.size());
  for (size_t l = 0; l < m.weights.size(); ++l)
    EXPECT_EQ(lm.model.weights[l].data(), m.weights[l].data());
  GcnConfig cfg2 = cfg;
  cfg2.layer_dims = lm.layer_dims;
  cfg2.weight_init_seed = lm.weight_init_seed;
  EXPECT_EQ(write_model(lm.model, cfg2), text);
}

TEST(GcnModelFile, RejectsDamagedInput) {
  GcnConfig cfg = small_config({3, 2, 1}, 2);
  std::string good = write_model(init_weights(cfg), cfg);
  EXPECT_THROW(read_model("nonsense v1\n"), ParseError);
  EXPECT_THROW(read_model("gcn-model v2\ndims 3 2 1\n"), ParseError);
  EXPECT_THROW(read_model(good.substr(0, good.size() / 2)), ParseError);
  std::string no_end = good.substr(0, good.rfind("end"));
  EXPECT_THROW(read_model(no_end), ParseError);
  std::string wrong_shape = good;
  auto pos = wrong_shape.find("dims 3 2 1");
  wrong_shape.replace(pos, 10, "dims 3 9 1");
  EXPECT_THROW(read_model(wrong_shape), ParseError);
}

TEST(GcnForward, PermutationEquivariance) {
  Rng rng(123);
  const int n = 8;
  auto edges = random_edges(n, rng);
  Matrix x = random_features(n, 4, rng);
  GcnModel m = init_weights(small_config({4, 3, 2, 1}, 17));

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = (i * 3 + 5) % n;  // bijection for n=8

  std::vector<std::pair<int, int>> pedges;
  for (auto [a, b] : edges) pedges.emplace_back(perm[a], perm[b]);
  Matrix px(n, 4);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 4; ++c) px(perm[i], c) = x(i, c);

  Matrix z = forward(norm_of(n, edges), x, m);
  Matrix pz = forward(norm_of(n, pedges), px, m);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(pz(perm[i], 0), z(i, 0), 1e-12);
}
