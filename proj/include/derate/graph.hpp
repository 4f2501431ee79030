#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "derate/netlist.hpp"

namespace derate {

enum class NodeKind { Port, Gate, Flipflop };

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Port: return "port";
    case NodeKind::Gate: return "gate";
    default: return "flipflop";
  }
}

inline std::optional<NodeKind> node_kind_from_name(const std::string& s) {
  if (s == "port") return NodeKind::Port;
  if (s == "gate") return NodeKind::Gate;
  if (s == "flipflop") return NodeKind::Flipflop;
  return std::nullopt;
}

struct GraphNode {
  std::string name;
  NodeKind kind;
  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  int source;
  int target;
  bool operator==(const GraphEdge&) const = default;
};

// Signal-flow graph of a netlist. Node index order is the construction
// order (ports, then cells) and is stable across GML export/import.
struct CircuitGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;  // directed, driver -> sink, deduplicated

  bool operator==(const CircuitGraph&) const = default;

  int size() const { return static_cast<int>(nodes.size()); }

  std::vector<int> flipflop_nodes() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (nodes[i].kind == NodeKind::Flipflop) out.push_back(i);
    return out;
  }

  int node_by_name(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (nodes[i].name == name) return i;
    return -1;
  }
};

// One node per port and per cell; one edge per (driver, sink) pair of every
// net. The designated clock net contributes no edges.
inline CircuitGraph build_graph(const Netlist& n) {
  CircuitGraph g;
  std::map<std::string, int> node_of;  // port or cell name -> node index
  for (const auto& p : n.ports) {
    node_of[p.name] = g.size();
    g.nodes.push_back({p.name, NodeKind::Port});
  }
  for (const auto& c : n.cells) {
    node_of[c.name] = g.size();
    g.nodes.push_back(
        {c.name, cell_kind_info(c.kind).is_sequential ? NodeKind::Flipflop : NodeKind::Gate});
  }

  // net -> driver node, net -> sink nodes (in port/cell order)
  std::map<std::string, int> driver;
  std::map<std::string, std::vector<int>> sinks;
  for (const auto& p : n.ports) {
    if (p.dir == PortDir::Input)
      driver[p.name] = node_of[p.name];
    else
      sinks[p.name].push_back(node_of[p.name]);
  }
  for (const auto& c : n.cells) {
    const auto& info = cell_kind_info(c.kind);
    driver[c.pins.at(info.output)] = node_of[c.name];
    for (const char* pin : info.inputs)
      sinks[c.pins.at(pin)].push_back(node_of[c.name]);
  }

  std::set<std::pair<int, int>> seen;
  for (const auto& net : n.nets) {
    if (net == n.clock_net) continue;
    auto d = driver.find(net);
    if (d == driver.end()) continue;  // driven-only validation happened upstream
    for (int s : sinks[net])
      if (seen.insert({d->second, s}).second) g.edges.push_back({d->second, s});
  }
  return g;
}

}  // namespace derate
