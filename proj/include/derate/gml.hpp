#pragma once

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "derate/error.hpp"
#include "derate/graph.hpp"

namespace derate {

// GML subset used by this project:
//   graph [ directed 1 node [ id I label "..." kind "..." ] ... edge [ source I target J ] ... ]
// Node ids are the dense 0..N-1 graph indices. Unknown attributes are
// skipped on import. Export is byte-deterministic.
inline std::string export_gml(const CircuitGraph& g) {
  std::ostringstream out;
  out << "graph [\n  directed 1\n";
  for (int i = 0; i < g.size(); ++i) {
    out << "  node [\n    id " << i << "\n    label \"" << g.nodes[i].name
        << "\"\n    kind \"" << node_kind_name(g.nodes[i].kind) << "\"\n  ]\n";
  }
  for (const auto& e : g.edges) {
    out << "  edge [\n    source " << e.source << "\n    target " << e.target
        << "\n  ]\n";
  }
  out << "]\n";
  return out.str();
}

namespace detail {

struct GmlToken {
  enum Type { Key, Int, String, Open, Close } type;
  std::string text;
  long value = 0;
};

inline std::vector<GmlToken> gml_tokenize(std::string_view src) {
  std::vector<GmlToken> out;
  size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '[') {
      out.push_back({GmlToken::Open, "["});
      ++i;
    } else if (c == ']') {
      out.push_back({GmlToken::Close, "]"});
      ++i;
    } else if (c == '"') {
      size_t j = src.find('"', i + 1);
      if (j == std::string_view::npos) throw ParseError("unterminated GML string");
      out.push_back({GmlToken::String, std::string(src.substr(i + 1, j - i - 1))});
      i = j + 1;
    } else if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i + 1;
      bool is_int = true;
      while (j < src.size() && !std::isspace(static_cast<unsigned char>(src[j])) &&
             src[j] != ']' && src[j] != '[') {
        if (!std::isdigit(static_cast<unsigned char>(src[j]))) is_int = false;
        ++j;
      }
      std::string text(src.substr(i, j - i));
      GmlToken t{is_int ? GmlToken::Int : GmlToken::Key, text};
      if (is_int) t.value = std::stol(text);
      out.push_back(std::move(t));
      i = j;
    } else if (ident_char(c)) {
      size_t j = i;
      while (j < src.size() && (ident_char(src[j]) || src[j] == '.')) ++j;
      out.push_back({GmlToken::Key, std::string(src.substr(i, j - i))});
      i = j;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "' in GML");
    }
  }
  return out;
}

class GmlParser {
 public:
  explicit GmlParser(std::string_view src) : toks_(gml_tokenize(src)) {}

  CircuitGraph parse() {
    expect_key("graph");
    expect(GmlToken::Open);

    struct RawNode {
      long id = -1;
      std::string label;
      std::string kind = "gate";
    };
    std::vector<RawNode> raw_nodes;
    std::vector<std::pair<long, long>> raw_edges;
    bool directed = false;

    while (!peek(GmlToken::Close)) {
      std::string key = take_key();
      if (key == "directed") {
        directed = take_int() != 0;
      } else if (key == "node") {
        expect(GmlToken::Open);
        RawNode rn;
        bool has_id = false;
        while (!peek(GmlToken::Close)) {
          std::string k = take_key();
          if (k == "id") {
            rn.id = take_int();
            has_id = true;
          } else if (k == "label") {
            rn.label = take_string();
          } else if (k == "kind") {
            rn.kind = take_string();
          } else {
            skip_value();
          }
        }
        expect(GmlToken::Close);
        if (!has_id) throw ParseError("GML node without id");
        raw_nodes.push_back(std::move(rn));
      } else if (key == "edge") {
        expect(GmlToken::Open);
        long s = -1, t = -1;
        while (!peek(GmlToken::Close)) {
          std::string k = take_key();
          if (k == "source")
            s = take_int();
          else if (k == "target")
            t = take_int();
          else
            skip_value();
        }
        expect(GmlToken::Close);
        if (s < 0 || t < 0) throw ParseError("GML edge without source/target");
        raw_edges.emplace_back(s, t);
      } else {
        skip_value();
      }
    }
    expect(GmlToken::Close);
    if (pos_ != toks_.size()) throw ParseError("trailing input after GML graph");
    (void)directed;

    std::set<long> ids;
    for (const auto& rn : raw_nodes)
      if (!ids.insert(rn.id).second)
        throw ValidationError("duplicate GML node id " + std::to_string(rn.id));
    long n = static_cast<long>(raw_nodes.size());
    for (const auto& rn : raw_nodes)
      if (rn.id < 0 || rn.id >= n)
        throw ValidationError("GML node ids must be dense 0..N-1, got " +
                              std::to_string(rn.id));

    CircuitGraph g;
    g.nodes.resize(raw_nodes.size());
    for (const auto& rn : raw_nodes) {
      auto kind = node_kind_from_name(rn.kind);
      if (!kind) throw ValidationError("unknown GML node kind '" + rn.kind + "'");
      g.nodes[rn.id] = {rn.label, *kind};
    }
    for (const auto& [s, t] : raw_edges) {
      if (!ids.count(s))
        throw ValidationError("GML edge references unknown id " + std::to_string(s));
      if (!ids.count(t))
        throw ValidationError("GML edge references unknown id " + std::to_string(t));
      g.edges.push_back({static_cast<int>(s), static_cast<int>(t)});
    }
    return g;
  }

 private:
  bool peek(GmlToken::Type t) const { return pos_ < toks_.size() && toks_[pos_].type == t; }
  void expect(GmlToken::Type t) {
    if (!peek(t)) throw ParseError("malformed GML near token " + std::to_string(pos_));
    ++pos_;
  }
  void expect_key(const std::string& k) {
    if (!peek(GmlToken::Key) || toks_[pos_].text != k)
      throw ParseError("expected '" + k + "' in GML");
    ++pos_;
  }
  std::string take_key() {
    if (!peek(GmlToken::Key)) throw ParseError("expected GML key");
    return toks_[pos_++].text;
  }
  long take_int() {
    if (!peek(GmlToken::Int)) throw ParseError("expected GML integer");
    return toks_[pos_++].value;
  }
  std::string take_string() {
    if (!peek(GmlToken::String)) throw ParseError("expected GML string");
    return toks_[pos_++].text;
  }
  void skip_value() {
    if (pos_ >= toks_.size()) throw ParseError("GML key without value");
    if (toks_[pos_].type == GmlToken::Open) {
      int depth = 0;
      do {
        if (toks_[pos_].type == GmlToken::Open) ++depth;
        if (toks_[pos_].type == GmlToken::Close) --depth;
        ++pos_;
        if (pos_ > toks_.size()) throw ParseError("unbalanced GML brackets");
      } while (depth > 0 && pos_ < toks_.size());
      if (depth > 0) throw ParseError("unbalanced GML brackets");
    } else {
      ++pos_;
    }
  }

  std::vector<GmlToken> toks_;
  size_t pos_ = 0;
};

}  // namespace detail

inline CircuitGraph import_gml(std::string_view src) {
  return detail::GmlParser(src).parse();
}

}  // namespace derate
