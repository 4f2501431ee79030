#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "derate/error.hpp"

namespace derate {
namespace detail {

inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace detail

// The fixed ten-kind cell library. DFF is the only sequential kind.
enum class CellKind { AND2, OR2, NAND2, NOR2, XOR2, XNOR2, NOT, BUF, MUX2, DFF };

struct CellKindInfo {
  const char* name;
  std::vector<const char*> inputs;  // input pin names in canonical order
  const char* output;
  bool is_sequential;
};

inline const CellKindInfo& cell_kind_info(CellKind k) {
  static const std::vector<CellKindInfo> table = {
      {"AND2", {"A", "B"}, "Y", false},
      {"OR2", {"A", "B"}, "Y", false},
      {"NAND2", {"A", "B"}, "Y", false},
      {"NOR2", {"A", "B"}, "Y", false},
      {"XOR2", {"A", "B"}, "Y", false},
      {"XNOR2", {"A", "B"}, "Y", false},
      {"NOT", {"A"}, "Y", false},
      {"BUF", {"A"}, "Y", false},
      {"MUX2", {"A", "B", "S"}, "Y", false},  // Y = S ? B : A
      {"DFF", {"D", "CLK"}, "Q", true},
  };
  return table[static_cast<int>(k)];
}

inline std::optional<CellKind> cell_kind_from_name(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(CellKind::DFF); ++i) {
    auto k = static_cast<CellKind>(i);
    if (s == cell_kind_info(k).name) return k;
  }
  return std::nullopt;
}

enum class PortDir { Input, Output };

struct Port {
  std::string name;  // also the name of the net the port drives/reads
  PortDir dir;
  bool operator==(const Port&) const = default;
};

struct Cell {
  std::string name;
  CellKind kind;
  std::map<std::string, std::string> pins;  // pin name -> net name
  bool operator==(const Cell&) const = default;
};

// Elaborated circuit. Immutable after validate(); safe to share read-only.
struct Netlist {
  std::string name;
  std::vector<Port> ports;
  std::vector<std::string> nets;  // port nets first (declaration order), then wires
  std::vector<Cell> cells;
  std::vector<std::string> flipflops;  // DFF instances in source order
  std::string clock_net;               // empty when the circuit has no DFF

  bool operator==(const Netlist&) const = default;

  const Cell* find_cell(const std::string& n) const {
    for (const auto& c : cells)
      if (c.name == n) return &c;
    return nullptr;
  }
};

inline std::vector<std::string> list_flipflops(const Netlist& n) { return n.flipflops; }

namespace detail {

// Cross-format well-formedness checks. Fills flipflops and clock_net.
inline void elaborate(Netlist& n) {
  std::map<std::string, int> net_index;
  for (size_t i = 0; i < n.nets.size(); ++i) {
    if (net_index.count(n.nets[i]))
      throw ValidationError("duplicate net '" + n.nets[i] + "'");
    net_index[n.nets[i]] = static_cast<int>(i);
  }
  for (const auto& p : n.ports)
    if (!net_index.count(p.name))
      throw ValidationError("port '" + p.name + "' has no net");

  std::vector<int> drivers(n.nets.size(), 0);
  std::vector<bool> used(n.nets.size(), false);
  for (const auto& p : n.ports) {
    if (p.dir == PortDir::Input)
      drivers[net_index[p.name]]++;
    else
      used[net_index[p.name]] = true;
  }

  std::map<std::string, bool> seen_cell;
  n.flipflops.clear();
  n.clock_net.clear();
  for (const auto& c : n.cells) {
    if (seen_cell[c.name])
      throw ValidationError("duplicate cell instance '" + c.name + "'");
    seen_cell[c.name] = true;

    const auto& info = cell_kind_info(c.kind);
    size_t expected = info.inputs.size() + 1;
    for (const auto& [pin, net] : c.pins) {
      bool known = pin == info.output;
      for (const char* in : info.inputs) known = known || pin == in;
      if (!known)
        throw ValidationError("cell '" + c.name + "': unknown pin '" + pin +
                              "' on " + info.name);
      if (!net_index.count(net))
        throw ValidationError("cell '" + c.name + "': pin '" + pin +
                              "' bound to undeclared net '" + net + "'");
    }
    if (c.pins.size() != expected)
      for (const char* pin : info.inputs)
        if (!c.pins.count(pin))
          throw ValidationError("cell '" + c.name + "': unbound pin '" +
                                std::string(pin) + "'");
    if (!c.pins.count(info.output))
      throw ValidationError("cell '" + c.name + "': unbound pin '" +
                            std::string(info.output) + "'");

    drivers[net_index[c.pins.at(info.output)]]++;
    for (const char* pin : info.inputs) used[net_index[c.pins.at(pin)]] = true;

    if (info.is_sequential) {
      n.flipflops.push_back(c.name);
      const std::string& clk = c.pins.at("CLK");
      if (n.clock_net.empty())
        n.clock_net = clk;
      else if (n.clock_net != clk)
        throw ValidationError("cell '" + c.name + "': clock net '" + clk +
                              "' differs from designated clock '" +
                              n.clock_net + "'");
    }
  }

  for (size_t i = 0; i < n.nets.size(); ++i) {
    if (drivers[i] > 1)
      throw ValidationError("net '" + n.nets[i] + "' is multiply driven");
    if (drivers[i] == 0 && used[i])
      throw ValidationError("undriven net '" + n.nets[i] + "' used as an input");
    if (drivers[i] == 0)
      throw ValidationError("undriven net '" + n.nets[i] + "'");
  }
}

}  // namespace detail
}  // namespace derate
