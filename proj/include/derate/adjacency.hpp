#pragma once

#include <cmath>
#include <set>
#include <vector>

#include "derate/error.hpp"
#include "derate/graph.hpp"
#include "derate/matrix.hpp"

namespace derate {

// Square sparse matrix, one sorted (col, value) list per row.
struct SparseMatrix {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;

  explicit SparseMatrix(int size = 0) : n(size), rows(size) {}

  double at(int i, int j) const {
    for (const auto& [c, v] : rows[i])
      if (c == j) return v;
    return 0.0;
  }

  bool is_symmetric(double tol = 0.0) const {
    for (int i = 0; i < n; ++i)
      for (const auto& [j, v] : rows[i])
        if (std::abs(at(j, i) - v) > tol) return false;
    return true;
  }
};

// Symmetrized 0/1 adjacency of the directed graph; zero diagonal.
inline SparseMatrix adjacency_matrix(const CircuitGraph& g) {
  std::vector<std::set<int>> nb(g.size());
  for (const auto& e : g.edges) {
    if (e.source == e.target) continue;
    nb[e.source].insert(e.target);
    nb[e.target].insert(e.source);
  }
  SparseMatrix a(g.size());
  for (int i = 0; i < g.size(); ++i)
    for (int j : nb[i]) a.rows[i].emplace_back(j, 1.0);
  return a;
}

// S = D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
// Off-diagonal entries are 1/sqrt(d_i d_j); the diagonal is 1/d_i.
inline SparseMatrix normalize_adjacency(const SparseMatrix& a) {
  for (int i = 0; i < a.n; ++i)
    for (const auto& [j, v] : a.rows[i]) {
      if (i == j) throw ValidationError("adjacency matrix must have zero diagonal");
      if (v != 1.0) throw ValidationError("adjacency matrix entries must be 0/1");
      if (a.at(j, i) != v) throw ValidationError("adjacency matrix must be symmetric");
    }

  std::vector<double> deg(a.n);
  for (int i = 0; i < a.n; ++i) deg[i] = 1.0 + static_cast<double>(a.rows[i].size());

  SparseMatrix s(a.n);
  for (int i = 0; i < a.n; ++i) {
    bool placed_diag = false;
    auto push_diag = [&] {
      s.rows[i].emplace_back(i, 1.0 / deg[i]);
      placed_diag = true;
    };
    for (const auto& [j, v] : a.rows[i]) {
      if (!placed_diag && j > i) push_diag();
      s.rows[i].emplace_back(j, 1.0 / std::sqrt(deg[i] * deg[j]));
    }
    if (!placed_diag) push_diag();
  }
  return s;
}

// Dense product S * X with fixed summation order.
inline Matrix spmm(const SparseMatrix& s, const Matrix& x) {
  if (s.n != x.rows()) throw ConfigError("spmm: dimension mismatch");
  Matrix out(s.n, x.cols());
  for (int i = 0; i < s.n; ++i) {
    double* orow = out.row(i);
    for (const auto& [j, v] : s.rows[i]) {
      const double* xrow = x.row(j);
      for (int c = 0; c < x.cols(); ++c) orow[c] += v * xrow[c];
    }
  }
  return out;
}

}  // namespace derate
