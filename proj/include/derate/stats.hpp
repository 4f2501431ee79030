#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "derate/campaign.hpp"
#include "derate/error.hpp"

namespace derate {

struct CiSummary {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * sample stddev / sqrt(n)
  long n = 0;
};

inline CiSummary confidence_interval(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("confidence_interval: empty input");
  CiSummary ci;
  ci.n = static_cast<long>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  ci.mean = sum / static_cast<double>(ci.n);
  if (ci.n == 1) return ci;
  double sq = 0.0;
  for (double v : values) sq += (v - ci.mean) * (v - ci.mean);
  const double stddev = std::sqrt(sq / static_cast<double>(ci.n - 1));
  ci.half_width = 1.96 * stddev / std::sqrt(static_cast<double>(ci.n));
  return ci;
}

struct Histogram {
  std::vector<double> bin_edges;  // B+1 edges over [0,1]
  std::vector<long> counts;
};

// Uniform bins over [0,1]; the last bin is closed on the right so 1.0
// lands in bin B-1.
inline Histogram histogram(const std::vector<double>& values, int bins = 20) {
  if (bins < 1) throw ConfigError("histogram: bins must be >= 1");
  Histogram h;
  h.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    h.bin_edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (v < 0.0 || v > 1.0)
      throw ConfigError("histogram: value outside [0,1]");
    int b = std::min(bins - 1, static_cast<int>(std::floor(v * bins)));
    h.counts[b]++;
  }
  return h;
}

struct SortedPoint {
  long rank;
  double fdr;
};

// Ascending FDR curve; ties break by flip-flop name so the sort is stable
// across runs.
inline std::vector<SortedPoint> sorted_curve(const FdrTable& t) {
  std::vector<std::pair<double, std::string>> keyed;
  for (const auto& r : t.rows) keyed.emplace_back(r.fdr, r.flipflop);
  std::sort(keyed.begin(), keyed.end());
  std::vector<SortedPoint> out;
  for (size_t i = 0; i < keyed.size(); ++i)
    out.push_back({static_cast<long>(i), keyed[i].first});
  return out;
}

namespace detail {

// Linear-interpolation quantile of a sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Average-rank assignment for Spearman.
inline std::vector<double> ranks_of(const std::vector<double>& v) {
  std::vector<size_t> order(v.size());
  for (size_t i = 0; i < v.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return a == b ? 1.0 : 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace detail

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw ConfigError("spearman: need equal-length nonempty inputs");
  return detail::pearson(detail::ranks_of(a), detail::ranks_of(b));
}

struct ComparePair {
  std::string flipflop;
  double simulated;
  double predicted;
};

struct CompareReport {
  long total_flipflops = 0;
  long kept_flipflops = 0;  // after optional outlier filtering
  double mae = 0.0;
  double spearman = 0.0;
  bool ci_overlap = false;
  CiSummary ci_simulated, ci_predicted;
  Histogram hist_simulated, hist_predicted;
  std::vector<SortedPoint> sorted_simulated, sorted_predicted;
  std::vector<ComparePair> pairs;  // simulated-table row order
};

// Joins the two tables by flip-flop name. With filter_outliers, pairs whose
// simulated value falls outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR] of the
// simulated distribution are dropped from every section.
inline CompareReport compare_report(const FdrTable& predicted,
                                    const FdrTable& simulated,
                                    bool filter_outliers = false, int bins = 20) {
  std::map<std::string, double> pred;
  for (const auto& r : predicted.rows) pred[r.flipflop] = r.fdr;
  if (pred.size() != predicted.rows.size())
    throw ValidationError("compare_report: duplicate flip-flop in predicted table");
  if (predicted.rows.size() != simulated.rows.size())
    throw ValidationError("compare_report: mismatched flip-flop sets");

  CompareReport rep;
  rep.total_flipflops = static_cast<long>(simulated.rows.size());
  std::vector<ComparePair> pairs;
  std::map<std::string, int> seen;
  for (const auto& r : simulated.rows)
    if (++seen[r.flipflop] > 1)
      throw ValidationError("compare_report: duplicate flip-flop in simulated table");
  for (const auto& r : simulated.rows) {
    auto it = pred.find(r.flipflop);
    if (it == pred.end())
      throw ValidationError("compare_report: flip-flop '" + r.flipflop +
                            "' missing from predicted table");
    pairs.push_back({r.flipflop, r.fdr, it->second});
  }

  if (filter_outliers && !pairs.empty()) {
    std::vector<double> sim_sorted;
    for (const auto& p : pairs) sim_sorted.push_back(p.simulated);
    std::sort(sim_sorted.begin(), sim_sorted.end());
    const double q1 = detail::quantile_sorted(sim_sorted, 0.25);
    const double q3 = detail::quantile_sorted(sim_sorted, 0.75);
    const double iqr = q3 - q1;
    const double lo = q1 - 1.5 * iqr, hi = q3 + 1.5 * iqr;
    std::vector<ComparePair> kept;
    for (const auto& p : pairs)
      if (p.simulated >= lo && p.simulated <= hi) kept.push_back(p);
    pairs = std::move(kept);
  }
  if (pairs.empty()) throw ValidationError("compare_report: no flip-flops left to compare");
  rep.kept_flipflops = static_cast<long>(pairs.size());
  rep.pairs = pairs;

  FdrTable sim_kept, pred_kept;
  sim_kept.source = FdrSource::Simulated;
  pred_kept.source = FdrSource::Predicted;
  std::vector<double> sim_vals, pred_vals;
  double abs_err = 0.0;
  for (const auto& p : pairs) {
    sim_kept.rows.push_back({p.flipflop, 0, 0, p.simulated});
    pred_kept.rows.push_back({p.flipflop, 0, 0, p.predicted});
    sim_vals.push_back(p.simulated);
    pred_vals.push_back(p.predicted);
    abs_err += std::abs(p.predicted - p.simulated);
  }
  rep.mae = abs_err / static_cast<double>(pairs.size());
  rep.spearman = spearman(pred_vals, sim_vals);
  rep.ci_simulated = confidence_interval(sim_vals);
  rep.ci_predicted = confidence_interval(pred_vals);
  rep.ci_overlap =
      rep.ci_simulated.mean - rep.ci_simulated.half_width <=
          rep.ci_predicted.mean + rep.ci_predicted.half_width &&
      rep.ci_predicted.mean - rep.ci_predicted.half_width <=
          rep.ci_simulated.mean + rep.ci_simulated.half_width;
  rep.hist_simulated = histogram(sim_vals, bins);
  rep.hist_predicted = histogram(pred_vals, bins);
  rep.sorted_simulated = sorted_curve(sim_kept);
  rep.sorted_predicted = sorted_curve(pred_kept);
  return rep;
}

namespace detail {

inline std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace detail

// One CSV file with bracketed section headers.
inline std::string render_report_csv(const CompareReport& r) {
  using detail::fmt_g9;
  std::ostringstream out;
  out << "[summary]\nkey,value\n";
  out << "flipflops," << r.total_flipflops << "\n";
  out << "kept," << r.kept_flipflops << "\n";
  out << "filtered," << (r.total_flipflops - r.kept_flipflops) << "\n";
  out << "mae," << fmt_g9(r.mae) << "\n";
  out << "spearman," << fmt_g9(r.spearman) << "\n";
  out << "ci_overlap," << (r.ci_overlap ? 1 : 0) << "\n";
  out << "\n[ci]\ntable,mean,half_width,n\n";
  out << "simulated," << fmt_g9(r.ci_simulated.mean) << ','
      << fmt_g9(r.ci_simulated.half_width) << ',' << r.ci_simulated.n << "\n";
  out << "predicted," << fmt_g9(r.ci_predicted.mean) << ','
      << fmt_g9(r.ci_predicted.half_width) << ',' << r.ci_predicted.n << "\n";
  out << "\n[pairs]\nflipflop,fdr_simulated,fdr_predicted\n";
  for (const auto& p : r.pairs)
    out << p.flipflop << ',' << fmt_g9(p.simulated) << ',' << fmt_g9(p.predicted) << "\n";
  auto hist_section = [&](const char* name, const Histogram& h) {
    out << "\n[" << name << "]\nbin_lo,bin_hi,count\n";
    for (size_t b = 0; b < h.counts.size(); ++b)
      out << fmt_g9(h.bin_edges[b]) << ',' << fmt_g9(h.bin_edges[b + 1]) << ','
          << h.counts[b] << "\n";
  };
  hist_section("histogram_simulated", r.hist_simulated);
  hist_section("histogram_predicted", r.hist_predicted);
  auto curve_section = [&](const char* name, const std::vector<SortedPoint>& c) {
    out << "\n[" << name << "]\nrank,fdr\n";
    for (const auto& p : c) out << p.rank << ',' << fmt_g9(p.fdr) << "\n";
  };
  curve_section("sorted_simulated", r.sorted_simulated);
  curve_section("sorted_predicted", r.sorted_predicted);
  return out.str();
}

// Whitespace-column data files for plotting tools.
inline std::string render_ci_dat(const CompareReport& r) {
  using detail::fmt_g9;
  std::ostringstream out;
  out << "# table mean half_width n\n";
  out << "simulated " << fmt_g9(r.ci_simulated.mean) << ' '
      << fmt_g9(r.ci_simulated.half_width) << ' ' << r.ci_simulated.n << "\n";
  out << "predicted " << fmt_g9(r.ci_predicted.mean) << ' '
      << fmt_g9(r.ci_predicted.half_width) << ' ' << r.ci_predicted.n << "\n";
  return out.str();
}

inline std::string render_hist_dat(const Histogram& h) {
  using detail::fmt_g9;
  std::ostringstream out;
  out << "# bin_lo bin_hi count\n";
  for (size_t b = 0; b < h.counts.size(); ++b)
    out << fmt_g9(h.bin_edges[b]) << ' ' << fmt_g9(h.bin_edges[b + 1]) << ' '
        << h.counts[b] << "\n";
  return out.str();
}

inline std::string render_sorted_dat(const CompareReport& r) {
  using detail::fmt_g9;
  std::ostringstream out;
  out << "# rank fdr_simulated fdr_predicted\n";
  for (size_t i = 0; i < r.sorted_simulated.size(); ++i)
    out << r.sorted_simulated[i].rank << ' ' << fmt_g9(r.sorted_simulated[i].fdr)
        << ' ' << fmt_g9(r.sorted_predicted[i].fdr) << "\n";
  return out.str();
}

}  // namespace derate
