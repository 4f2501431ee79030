#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "derate/netlist.hpp"

namespace derate {

enum class NetlistFormat { Verilog, Json };

namespace detail {

struct VToken {
  std::string text;
  int line;
  int col;
};

inline std::vector<VToken> vtokenize(std::string_view src) {
  std::vector<VToken> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    int tl = line, tc = col;
    if (ident_char(c)) {
      size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      out.push_back({std::string(src.substr(i, j - i)), tl, tc});
      advance(j - i);
      continue;
    }
    if (std::string_view("().,;").find(c) != std::string_view::npos) {
      out.push_back({std::string(1, c), tl, tc});
      advance(1);
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", tl, tc);
  }
  return out;
}

// Recursive-descent parser for the structural verilog subset:
//   module NAME ( port {, port} ) ;
//   (input|output|wire) NAME {, NAME} ;
//   KIND INSTANCE ( .PIN(NET) {, .PIN(NET)} ) ;
//   endmodule
class VerilogParser {
 public:
  explicit VerilogParser(std::string_view src) : toks_(vtokenize(src)) {}

  Netlist parse() {
    Netlist n;
    expect("module");
    n.name = ident("module name");
    std::vector<VToken> header;
    expect("(");
    if (!peek_is(")")) {
      header.push_back(ident_tok("port name"));
      while (accept(",")) header.push_back(ident_tok("port name"));
    }
    expect(")");
    expect(";");

    std::vector<std::string> wires;
    while (!peek_is("endmodule")) {
      if (peek_is("input") || peek_is("output")) {
        PortDir dir = peek_is("input") ? PortDir::Input : PortDir::Output;
        next();
        n.ports.push_back({ident("port name"), dir});
        while (accept(",")) n.ports.push_back({ident("port name"), dir});
        expect(";");
      } else if (peek_is("wire")) {
        next();
        wires.push_back(ident("wire name"));
        while (accept(",")) wires.push_back(ident("wire name"));
        expect(";");
      } else {
        VToken kind_tok = ident_tok("cell kind");
        auto kind = cell_kind_from_name(kind_tok.text);
        if (!kind)
          throw ParseError("unknown cell kind '" + kind_tok.text + "'",
                           kind_tok.line, kind_tok.col);
        Cell c;
        c.kind = *kind;
        c.name = ident("instance name");
        expect("(");
        parse_pin(c);
        while (accept(",")) parse_pin(c);
        expect(")");
        expect(";");
        n.cells.push_back(std::move(c));
      }
    }
    expect("endmodule");
    if (pos_ != toks_.size()) {
      const auto& t = toks_[pos_];
      throw ParseError("trailing input after endmodule", t.line, t.col);
    }

    // header list and directional declarations must agree
    for (const auto& h : header) {
      bool declared = false;
      for (const auto& p : n.ports) declared = declared || p.name == h.text;
      if (!declared)
        throw ParseError("port '" + h.text + "' in module header has no direction",
                         h.line, h.col);
    }
    for (const auto& p : n.ports) {
      bool listed = false;
      for (const auto& h : header) listed = listed || h.text == p.name;
      if (!listed) throw ParseError("port '" + p.name + "' missing from module header");
    }

    for (const auto& p : n.ports) n.nets.push_back(p.name);
    for (auto& w : wires) n.nets.push_back(std::move(w));
    detail::elaborate(n);
    return n;
  }

 private:
  void parse_pin(Cell& c) {
    expect(".");
    VToken pin = ident_tok("pin name");
    expect("(");
    std::string net = ident("net name");
    expect(")");
    if (c.pins.count(pin.text))
      throw ParseError("pin '" + pin.text + "' bound twice", pin.line, pin.col);
    c.pins[pin.text] = std::move(net);
  }

  const VToken& next() {
    if (pos_ >= toks_.size()) throw ParseError("unexpected end of input");
    return toks_[pos_++];
  }
  bool peek_is(std::string_view s) const {
    return pos_ < toks_.size() && toks_[pos_].text == s;
  }
  bool accept(std::string_view s) {
    if (peek_is(s)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(std::string_view s) {
    if (pos_ >= toks_.size())
      throw ParseError("expected '" + std::string(s) + "' at end of input");
    const auto& t = toks_[pos_];
    if (t.text != s)
      throw ParseError("expected '" + std::string(s) + "', got '" + t.text + "'",
                       t.line, t.col);
    ++pos_;
  }
  VToken ident_tok(const char* what) {
    if (pos_ >= toks_.size())
      throw ParseError(std::string("expected ") + what + " at end of input");
    const auto& t = toks_[pos_];
    if (!ident_char(t.text[0]) || std::isdigit(static_cast<unsigned char>(t.text[0])))
      throw ParseError(std::string("expected ") + what + ", got '" + t.text + "'",
                       t.line, t.col);
    ++pos_;
    return t;
  }
  std::string ident(const char* what) { return ident_tok(what).text; }

  std::vector<VToken> toks_;
  size_t pos_ = 0;
};

}  // namespace detail

inline Netlist parse_verilog(std::string_view src) {
  return detail::VerilogParser(src).parse();
}

inline Netlist parse_json_netlist(std::string_view src) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(src);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  try {
    Netlist n;
    n.name = doc.at("name").get<std::string>();
    for (const auto& p : doc.at("ports")) {
      std::string dir = p.at("direction").get<std::string>();
      if (dir != "input" && dir != "output")
        throw ParseError("port direction must be 'input' or 'output', got '" + dir + "'");
      n.ports.push_back({p.at("name").get<std::string>(),
                         dir == "input" ? PortDir::Input : PortDir::Output});
    }
    for (const auto& w : doc.at("nets")) n.nets.push_back(w.get<std::string>());
    for (const auto& c : doc.at("cells")) {
      std::string kind_name = c.at("kind").get<std::string>();
      auto kind = cell_kind_from_name(kind_name);
      if (!kind) throw ParseError("unknown cell kind '" + kind_name + "'");
      Cell cell;
      cell.name = c.at("name").get<std::string>();
      cell.kind = *kind;
      for (const auto& [pin, net] : c.at("pins").items())
        cell.pins[pin] = net.get<std::string>();
      n.cells.push_back(std::move(cell));
    }
    detail::elaborate(n);
    return n;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

inline Netlist parse_netlist(std::string_view src, NetlistFormat fmt) {
  return fmt == NetlistFormat::Verilog ? parse_verilog(src) : parse_json_netlist(src);
}

// json-netlist pretty-printer; re-parsing the output reproduces the netlist.
inline std::string to_json_netlist(const Netlist& n) {
  nlohmann::ordered_json doc;
  doc["name"] = n.name;
  doc["ports"] = nlohmann::ordered_json::array();
  for (const auto& p : n.ports)
    doc["ports"].push_back({{"name", p.name},
                            {"direction", p.dir == PortDir::Input ? "input" : "output"}});
  doc["nets"] = n.nets;
  doc["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : n.cells) {
    nlohmann::ordered_json pins;
    for (const auto& [pin, net] : c.pins) pins[pin] = net;
    doc["cells"].push_back(
        {{"name", c.name}, {"kind", cell_kind_info(c.kind).name}, {"pins", pins}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace derate
