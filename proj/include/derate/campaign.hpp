#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "derate/error.hpp"
#include "derate/netlist.hpp"
#include "derate/rng.hpp"
#include "derate/simulate.hpp"

namespace derate {

enum class FdrSource { Simulated, Predicted };

struct FdrRow {
  std::string flipflop;
  long injections = 0;
  long failures = 0;
  double fdr = 0.0;
};

struct FdrTable {
  FdrSource source = FdrSource::Simulated;
  std::vector<FdrRow> rows;

  const FdrRow* find(const std::string& ff) const {
    for (const auto& r : rows)
      if (r.flipflop == ff) return &r;
    return nullptr;
  }

  std::vector<double> fdr_values() const {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r.fdr);
    return v;
  }
};

namespace detail {

// Runs row_fn(f) for every flip-flop index, spreading rows across threads.
// Rows are independent (the shared Simulator is only queried const), so the
// merged table matches a serial run.
template <typename RowFn>
inline std::vector<FdrRow> per_flipflop_rows(size_t n_ffs, RowFn row_fn) {
  std::vector<FdrRow> rows(n_ffs);
  unsigned hw = std::thread::hardware_concurrency();
  size_t n_threads = std::min<size_t>(n_ffs, hw == 0 ? 1 : hw);
  if (n_threads <= 1) {
    for (size_t f = 0; f < n_ffs; ++f) rows[f] = row_fn(f);
    return rows;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t f = next.fetch_add(1); f < n_ffs; f = next.fetch_add(1))
      rows[f] = row_fn(f);
  };
  std::vector<std::thread> threads;
  for (size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return rows;
}

}  // namespace detail

// Samples injections_per_ff cycles per flip-flop without replacement; when
// the budget covers every cycle it degrades to exhaustive-in-cycles. Each
// flip-flop draws from its own derived seed, so per-FF results do not
// depend on evaluation order.
inline FdrTable run_campaign(const Netlist& n, const Workload& w,
                             int injections_per_ff, uint64_t seed) {
  if (injections_per_ff < 1)
    throw ConfigError("injections_per_ff must be >= 1");
  Simulator sim(n, w);
  FdrTable table;
  table.source = FdrSource::Simulated;
  table.rows = detail::per_flipflop_rows(n.flipflops.size(), [&](size_t f) {
    std::vector<int> cycles;
    if (injections_per_ff >= w.n_cycles) {
      cycles.resize(w.n_cycles);
      std::iota(cycles.begin(), cycles.end(), 0);
    } else {
      Rng rng(seed_combine(seed, static_cast<uint64_t>(f)));
      std::vector<int> pool(w.n_cycles);
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < injections_per_ff; ++i) {
        size_t j = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
        cycles.push_back(pool[i]);
      }
    }
    FdrRow row;
    row.flipflop = n.flipflops[f];
    row.injections = static_cast<long>(cycles.size());
    for (int t : cycles) row.failures += sim.inject(static_cast<int>(f), t);
    row.fdr = static_cast<double>(row.failures) / static_cast<double>(row.injections);
    return row;
  });
  return table;
}

constexpr long kExhaustiveInjectionLimit = 1000000;

// Brute-force ground truth: every (flip-flop, cycle) pair exactly once.
inline FdrTable exhaustive_fdr(const Netlist& n, const Workload& w) {
  const long total = static_cast<long>(n.flipflops.size()) * w.n_cycles;
  if (total > kExhaustiveInjectionLimit)
    throw GuardError("exhaustive campaign of " + std::to_string(total) +
                     " injections exceeds the limit of " +
                     std::to_string(kExhaustiveInjectionLimit));
  Simulator sim(n, w);
  FdrTable table;
  table.source = FdrSource::Simulated;
  table.rows = detail::per_flipflop_rows(n.flipflops.size(), [&](size_t f) {
    FdrRow row;
    row.flipflop = n.flipflops[f];
    row.injections = w.n_cycles;
    for (int t = 0; t < w.n_cycles; ++t)
      row.failures += sim.inject(static_cast<int>(f), t);
    row.fdr = static_cast<double>(row.failures) / static_cast<double>(row.injections);
    return row;
  });
  return table;
}

// CSV: flipflop,injections,failures,fdr
inline std::string write_fdr_csv(const FdrTable& t) {
  std::ostringstream out;
  out << "flipflop,injections,failures,fdr\n";
  char buf[40];
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof(buf), "%.9g", r.fdr);
    out << r.flipflop << ',' << r.injections << ',' << r.failures << ',' << buf << "\n";
  }
  return out.str();
}

inline FdrTable read_fdr_csv(const std::string& text, FdrSource source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "flipflop,injections,failures,fdr")
    throw ParseError("FDR CSV: bad header");
  FdrTable t;
  t.source = source;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    FdrRow r;
    std::string field;
    if (!std::getline(ls, r.flipflop, ',')) throw ParseError("FDR CSV: bad row", lineno, 1);
    try {
      if (!std::getline(ls, field, ',')) throw ParseError("FDR CSV: bad row", lineno, 1);
      r.injections = std::stol(field);
      if (!std::getline(ls, field, ',')) throw ParseError("FDR CSV: bad row", lineno, 1);
      r.failures = std::stol(field);
      if (!std::getline(ls, field, ',')) throw ParseError("FDR CSV: bad row", lineno, 1);
      r.fdr = std::stod(field);
    } catch (const std::logic_error&) {
      throw ParseError("FDR CSV: bad number", lineno, 1);
    }
    if (r.failures < 0 || r.failures > r.injections)
      throw ValidationError("FDR CSV: failures must be within 0..injections");
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace derate
