#include <gtest/gtest.h>

#include "derate/netlist.hpp"
#include "derate/netlist_parser.hpp"
#include "test_util.hpp"

using namespace derate;

namespace {

Netlist parse_v(const std::string& src) { return parse_verilog(src); }

const char* kMinimal =
    "module m (a, y);\n"
    "  input a;\n"
    "  output y;\n"
    "  BUF b1 (.A(a), .Y(y));\n"
    "endmodule\n";

}  // namespace

TEST(CellKinds, ArityAndOutputs) {
  for (int i = 0; i <= static_cast<int>(CellKind::DFF); ++i) {
    const auto& info = cell_kind_info(static_cast<CellKind>(i));
    EXPECT_NE(info.output, nullptr);
    EXPECT_EQ(info.is_sequential, std::string(info.name) == "DFF");
  }
  EXPECT_EQ(cell_kind_info(CellKind::AND2).inputs.size(), 2u);
  EXPECT_EQ(cell_kind_info(CellKind::NOT).inputs.size(), 1u);
  EXPECT_EQ(cell_kind_info(CellKind::BUF).inputs.size(), 1u);
  EXPECT_EQ(cell_kind_info(CellKind::MUX2).inputs.size(), 3u);
  EXPECT_EQ(cell_kind_info(CellKind::DFF).inputs.size(), 2u);
  EXPECT_STREQ(cell_kind_info(CellKind::DFF).output, "Q");
  EXPECT_TRUE(cell_kind_from_name("XNOR2").has_value());
  EXPECT_FALSE(cell_kind_from_name("UNKNOWN3").has_value());
}

TEST(VerilogParser, MinimalModule) {
  Netlist n = parse_v(kMinimal);
  EXPECT_EQ(n.name, "m");
  EXPECT_EQ(n.cells.size(), 1u);
  EXPECT_EQ(n.ports.size(), 2u);
  EXPECT_TRUE(n.flipflops.empty());
  EXPECT_TRUE(n.clock_net.empty());
}

TEST(VerilogParser, UnknownCellKind) {
  const char* src =
      "module m (a, y);\n  input a;\n  output y;\n"
      "  UNKNOWN3 u (.A(a), .Y(y));\nendmodule\n";
  EXPECT_THROW(parse_v(src), ParseError);
}

TEST(VerilogParser, Sr4Fixture) {
  Netlist n = parse_v(testutil::read_fixture("sr4.v"));
  EXPECT_EQ(n.name, "sr4");
  ASSERT_EQ(n.flipflops, (std::vector<std::string>{"ff0", "ff1", "ff2", "ff3"}));
  EXPECT_EQ(list_flipflops(n), n.flipflops);
  EXPECT_EQ(n.clock_net, "clk");
  EXPECT_EQ(n.ports.size(), 3u);
}

TEST(VerilogParser, SyntaxErrorReportsPosition) {
  try {
    parse_v("module m (a);\n  input a\nendmodule\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.line, 1);
    EXPECT_GT(e.col, 0);
    EXPECT_NE(std::string(e.what()).find(":"), std::string::npos);
  }
}

TEST(VerilogParser, CommentsAreSkipped) {
  Netlist n = parse_v(
      "// leading comment\n"
      "module m (a, y); // ports\n"
      "  input a;\n  output y;\n"
      "  // a buffer\n"
      "  BUF b1 (.A(a), .Y(y));\n"
      "endmodule\n");
  EXPECT_EQ(n.cells.size(), 1u);
}

TEST(Elaboration, UnboundPin) {
  const char* src =
      "module m (a, y);\n  input a;\n  output y;\n"
      "  AND2 g (.A(a), .Y(y));\nendmodule\n";
  EXPECT_THROW(parse_v(src), ValidationError);
}

TEST(Elaboration, MultiplyDrivenNet) {
  const char* src =
      "module m (a, b, y);\n  input a;\n  input b;\n  output y;\n"
      "  BUF g1 (.A(a), .Y(y));\n  BUF g2 (.A(b), .Y(y));\nendmodule\n";
  EXPECT_THROW(parse_v(src), ValidationError);
}

TEST(Elaboration, UndrivenNet) {
  const char* src =
      "module m (a, y);\n  input a;\n  output y;\n  wire w;\n"
      "  AND2 g (.A(a), .B(w), .Y(y));\nendmodule\n";
  EXPECT_THROW(parse_v(src), ValidationError);
}

TEST(Elaboration, UndeclaredNetBinding) {
  const char* src =
      "module m (a, y);\n  input a;\n  output y;\n"
      "  BUF g (.A(nosuch), .Y(y));\nendmodule\n";
  EXPECT_THROW(parse_v(src), ValidationError);
}

TEST(Elaboration, DuplicateCellName) {
  const char* src =
      "module m (a, y, z);\n  input a;\n  output y;\n  output z;\n"
      "  BUF g (.A(a), .Y(y));\n  BUF g (.A(a), .Y(z));\nendmodule\n";
  EXPECT_THROW(parse_v(src), ValidationError);
}

TEST(Elaboration, InconsistentClockRejected) {
  const char* src =
      "module m (c1, c2, d, q, r);\n"
      "  input c1;\n  input c2;\n  input d;\n  output q;\n  output r;\n"
      "  DFF f1 (.D(d), .CLK(c1), .Q(q));\n"
      "  DFF f2 (.D(d), .CLK(c2), .Q(r));\nendmodule\n";
  EXPECT_THROW(parse_v(src), ValidationError);
}

TEST(Elaboration, SingleDriverRecoveredEverywhere) {
  for (const char* fx : {"sr4.v", "obs2.v", "pipemux.v"}) {
    Netlist n = parse_v(testutil::read_fixture(fx));
    for (const auto& net : n.nets) {
      int drivers = 0;
      for (const auto& p : n.ports)
        if (p.dir == PortDir::Input && p.name == net) drivers++;
      for (const auto& c : n.cells)
        if (c.pins.at(cell_kind_info(c.kind).output) == net) drivers++;
      EXPECT_EQ(drivers, 1) << fx << " net " << net;
    }
  }
}

TEST(ListFlipflops, Cases) {
  EXPECT_TRUE(list_flipflops(parse_v(kMinimal)).empty());
  Netlist one = parse_v(
      "module m (clk, d, q);\n  input clk;\n  input d;\n  output q;\n"
      "  DFF f (.D(d), .CLK(clk), .Q(q));\nendmodule\n");
  EXPECT_EQ(list_flipflops(one), std::vector<std::string>{"f"});
}

TEST(JsonNetlist, EquivalentToVerilogFixture) {
  Netlist from_v = parse_v(testutil::read_fixture("sr4.v"));
  Netlist from_j = parse_json_netlist(testutil::read_fixture("sr4.json"));
  EXPECT_EQ(from_v, from_j);
}

TEST(JsonNetlist, RoundTrip) {
  for (const char* fx : {"sr4.v", "obs2.v", "pipemux.v"}) {
    Netlist n = parse_v(testutil::read_fixture(fx));
    std::string doc = to_json_netlist(n);
    Netlist back = parse_json_netlist(doc);
    EXPECT_EQ(n, back) << fx;
    EXPECT_EQ(to_json_netlist(back), doc) << fx;
  }
}

TEST(JsonNetlist, ParseDeterminism) {
  std::string src = testutil::read_fixture("pipemux.v");
  EXPECT_EQ(to_json_netlist(parse_v(src)), to_json_netlist(parse_v(src)));
}

TEST(JsonNetlist, BadDocuments) {
  EXPECT_THROW(parse_json_netlist("not json"), ParseError);
  EXPECT_THROW(parse_json_netlist("{}"), ParseError);
  EXPECT_THROW(parse_json_netlist(
                   R"({"name":"m","ports":[{"name":"a","direction":"sideways"}],)"
                   R"("nets":["a"],"cells":[]})"),
               ParseError);
}

TEST(VerilogParser, PortDeclarationCrossCheck) {
  EXPECT_THROW(parse_v("module m (a);\nendmodule\n"), ParseError);
  EXPECT_THROW(parse_v("module m ();\n  input a;\nendmodule\n"), ParseError);
}
