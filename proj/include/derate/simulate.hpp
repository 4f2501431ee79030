#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "derate/error.hpp"
#include "derate/netlist.hpp"
#include "derate/rng.hpp"

namespace derate {

// Per-cycle stimulus for every input port (port declaration order) plus the
// set of output ports whose values count as observable behavior.
struct Workload {
  int n_cycles = 0;
  std::vector<std::vector<uint8_t>> stimulus;  // [cycle][input port]
  std::vector<std::string> observed_outputs;
};

inline std::vector<std::string> output_port_names(const Netlist& n) {
  std::vector<std::string> out;
  for (const auto& p : n.ports)
    if (p.dir == PortDir::Output) out.push_back(p.name);
  return out;
}

inline int input_port_count(const Netlist& n) {
  int c = 0;
  for (const auto& p : n.ports) c += p.dir == PortDir::Input;
  return c;
}

inline Workload random_workload(const Netlist& n, int n_cycles, uint64_t seed) {
  if (n_cycles < 1) throw ConfigError("workload must have at least one cycle");
  Workload w;
  w.n_cycles = n_cycles;
  w.observed_outputs = output_port_names(n);
  const int k = input_port_count(n);
  Rng rng(seed);
  w.stimulus.assign(n_cycles, std::vector<uint8_t>(k));
  for (auto& cyc : w.stimulus)
    for (auto& b : cyc) b = static_cast<uint8_t>(rng.next_u64() & 1);
  return w;
}

// One line per cycle; each line is a hex vector whose bit i (counting from
// the least significant end) drives input port i.
inline Workload workload_from_hex(const Netlist& n, const std::string& text) {
  Workload w;
  w.observed_outputs = output_port_names(n);
  const int k = input_port_count(n);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string hex;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) hex += c;
    if (hex.empty()) continue;
    std::vector<uint8_t> bits(k, 0);
    for (int b = 0; b < k; ++b) {
      int digit_pos = b / 4;
      if (digit_pos >= static_cast<int>(hex.size())) break;
      char c = hex[hex.size() - 1 - digit_pos];
      int v;
      if (c >= '0' && c <= '9')
        v = c - '0';
      else if (c >= 'a' && c <= 'f')
        v = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F')
        v = c - 'A' + 10;
      else
        throw ParseError("workload: invalid hex digit", lineno, 1);
      bits[b] = static_cast<uint8_t>((v >> (b % 4)) & 1);
    }
    w.stimulus.push_back(std::move(bits));
  }
  w.n_cycles = static_cast<int>(w.stimulus.size());
  if (w.n_cycles == 0) throw ParseError("workload: no cycles");
  return w;
}

struct InjectionResult {
  std::string flipflop;
  int cycle;
  bool failed;
};

// Full golden trace: value of every net at every cycle, recorded after the
// combinational phase.
using Trace = std::vector<std::vector<uint8_t>>;

// Two-phase cycle-accurate evaluator. Compiles the netlist once, runs the
// golden workload once, and answers SEU injection queries against it.
class Simulator {
 public:
  Simulator(const Netlist& n, const Workload& w) : netlist_(n), workload_(w) {
    compile();
    check_workload();
    run_golden();
  }

  int n_cycles() const { return workload_.n_cycles; }
  int flipflop_count() const { return static_cast<int>(dff_d_.size()); }

  int net_index(const std::string& name) const {
    auto it = net_index_.find(name);
    if (it == net_index_.end()) throw ConfigError("unknown net '" + name + "'");
    return it->second;
  }

  const Trace& golden_trace() const { return golden_trace_; }

  // Re-simulation with the state of flip-flop `ff` inverted at the start of
  // cycle `t`. True iff some observed output differs from golden at any
  // cycle >= t.
  bool inject(int ff, int t) const {
    if (ff < 0 || ff >= flipflop_count())
      throw ConfigError("flip-flop index out of range");
    if (t < 0 || t >= n_cycles()) throw ConfigError("injection cycle out of range");

    std::vector<uint8_t> state(golden_state_[t]);
    state[ff] ^= 1;
    std::vector<uint8_t> vals(nets_.size(), 0);
    std::vector<uint8_t> next(flipflop_count(), 0);
    for (int cyc = t; cyc < n_cycles(); ++cyc) {
      eval_cycle(cyc, state, vals, next);
      for (int o : observed_)
        if (vals[o] != golden_trace_[cyc][o]) return true;
      // converged back to the golden state: the remaining cycles replay it
      if (state == golden_state_[cyc + 1]) return false;
    }
    return false;
  }

  // Trace with an arbitrary set of (flip-flop, cycle) state inversions
  // applied; an even number of flips of the same pair cancels out.
  Trace trace_with_flips(const std::vector<std::pair<int, int>>& flips) const {
    Trace trace(n_cycles());
    std::vector<uint8_t> state(flipflop_count(), 0);
    std::vector<uint8_t> vals(nets_.size(), 0);
    std::vector<uint8_t> next(flipflop_count(), 0);
    for (int cyc = 0; cyc < n_cycles(); ++cyc) {
      for (const auto& [ff, t] : flips)
        if (t == cyc) state[ff] ^= 1;
      eval_cycle(cyc, state, vals, next);
      trace[cyc] = vals;
    }
    return trace;
  }

 private:
  struct SimCell {
    CellKind kind;
    std::vector<int> inputs;  // net indices in canonical pin order
    int output;
  };

  void compile() {
    for (size_t i = 0; i < netlist_.nets.size(); ++i)
      net_index_[netlist_.nets[i]] = static_cast<int>(i);
    nets_ = netlist_.nets;

    for (const auto& p : netlist_.ports)
      if (p.dir == PortDir::Input) input_nets_.push_back(net_index_[p.name]);

    std::vector<int> comb_cells;
    std::map<int, int> comb_driver;  // net -> comb cell index
    for (const auto& c : netlist_.cells) {
      const auto& info = cell_kind_info(c.kind);
      SimCell sc;
      sc.kind = c.kind;
      sc.output = net_index_[c.pins.at(info.output)];
      for (const char* pin : info.inputs) sc.inputs.push_back(net_index_[c.pins.at(pin)]);
      if (info.is_sequential) {
        dff_d_.push_back(net_index_[c.pins.at("D")]);
        dff_q_.push_back(sc.output);
      } else {
        comb_driver[sc.output] = static_cast<int>(cells_.size());
        comb_cells.push_back(static_cast<int>(cells_.size()));
        cells_.push_back(sc);
      }
    }

    // topological order over combinational cells; DFF outputs and input
    // ports are sources
    std::vector<int> indeg(cells_.size(), 0);
    std::vector<std::vector<int>> consumers(cells_.size());
    for (size_t ci = 0; ci < cells_.size(); ++ci)
      for (int in : cells_[ci].inputs) {
        auto d = comb_driver.find(in);
        if (d != comb_driver.end()) {
          indeg[ci]++;
          consumers[d->second].push_back(static_cast<int>(ci));
        }
      }
    std::deque<int> ready;
    for (size_t ci = 0; ci < cells_.size(); ++ci)
      if (indeg[ci] == 0) ready.push_back(static_cast<int>(ci));
    while (!ready.empty()) {
      int ci = ready.front();
      ready.pop_front();
      topo_.push_back(ci);
      for (int consumer : consumers[ci])
        if (--indeg[consumer] == 0) ready.push_back(consumer);
    }
    if (topo_.size() != cells_.size())
      throw ValidationError("combinational loop detected");

    for (const auto& name : workload_.observed_outputs) {
      auto it = net_index_.find(name);
      bool is_output = false;
      for (const auto& p : netlist_.ports)
        is_output = is_output || (p.name == name && p.dir == PortDir::Output);
      if (it == net_index_.end() || !is_output)
        throw ConfigError("observed output '" + name + "' is not an output port");
      observed_.push_back(it->second);
    }
  }

  void check_workload() const {
    if (workload_.n_cycles < 1) throw ConfigError("workload must have at least one cycle");
    if (static_cast<int>(workload_.stimulus.size()) != workload_.n_cycles)
      throw ConfigError("workload stimulus does not cover every cycle");
    for (const auto& cyc : workload_.stimulus)
      if (cyc.size() != input_nets_.size())
        throw ConfigError("workload stimulus does not cover every input port");
  }

  static uint8_t eval_gate(CellKind k, const std::vector<uint8_t>& v,
                           const std::vector<int>& in) {
    switch (k) {
      case CellKind::AND2: return v[in[0]] & v[in[1]];
      case CellKind::OR2: return v[in[0]] | v[in[1]];
      case CellKind::NAND2: return (v[in[0]] & v[in[1]]) ^ 1;
      case CellKind::NOR2: return (v[in[0]] | v[in[1]]) ^ 1;
      case CellKind::XOR2: return v[in[0]] ^ v[in[1]];
      case CellKind::XNOR2: return (v[in[0]] ^ v[in[1]]) ^ 1;
      case CellKind::NOT: return v[in[0]] ^ 1;
      case CellKind::BUF: return v[in[0]];
      case CellKind::MUX2: return v[in[2]] ? v[in[1]] : v[in[0]];
      default: return 0;  // DFF never evaluates combinationally
    }
  }

  // One cycle: drive inputs and state, settle combinational logic, then
  // latch the next state into `state`. All buffers are caller-owned so
  // injections can run concurrently against one const Simulator.
  void eval_cycle(int cyc, std::vector<uint8_t>& state, std::vector<uint8_t>& vals,
                  std::vector<uint8_t>& next) const {
    for (size_t i = 0; i < input_nets_.size(); ++i)
      vals[input_nets_[i]] = workload_.stimulus[cyc][i];
    for (size_t f = 0; f < dff_q_.size(); ++f) vals[dff_q_[f]] = state[f];
    for (int ci : topo_) {
      const SimCell& c = cells_[ci];
      vals[c.output] = eval_gate(c.kind, vals, c.inputs);
    }
    for (size_t f = 0; f < dff_d_.size(); ++f) next[f] = vals[dff_d_[f]];
    state.swap(next);
  }

  void run_golden() {
    golden_trace_.resize(n_cycles());
    golden_state_.resize(n_cycles() + 1);
    std::vector<uint8_t> state(flipflop_count(), 0);
    std::vector<uint8_t> vals(nets_.size(), 0);
    std::vector<uint8_t> next(flipflop_count(), 0);
    golden_state_[0] = state;
    for (int cyc = 0; cyc < n_cycles(); ++cyc) {
      eval_cycle(cyc, state, vals, next);
      golden_trace_[cyc] = vals;
      golden_state_[cyc + 1] = state;
    }
  }

  Netlist netlist_;
  Workload workload_;
  std::map<std::string, int> net_index_;
  std::vector<std::string> nets_;
  std::vector<int> input_nets_;
  std::vector<SimCell> cells_;  // combinational only
  std::vector<int> topo_;
  std::vector<int> dff_d_, dff_q_;
  std::vector<int> observed_;
  Trace golden_trace_;
  std::vector<std::vector<uint8_t>> golden_state_;  // state at start of cycle t
};

inline Trace simulate_golden(const Netlist& n, const Workload& w) {
  return Simulator(n, w).golden_trace();
}

inline InjectionResult inject_seu(const Netlist& n, const Workload& w,
                                  const std::string& ff, int t) {
  int idx = -1;
  for (size_t i = 0; i < n.flipflops.size(); ++i)
    if (n.flipflops[i] == ff) idx = static_cast<int>(i);
  if (idx < 0) throw ConfigError("unknown flip-flop '" + ff + "'");
  Simulator sim(n, w);
  return {ff, t, sim.inject(idx, t)};
}

}  // namespace derate
