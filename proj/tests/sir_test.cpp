#include <gtest/gtest.h>

#include <set>

#include "strhound/sir/cfg.hpp"
#include "strhound/sir/dataflow.hpp"
#include "strhound/sir/text.hpp"
#include "strhound/sir/typecheck.hpp"
#include "support/oracles.hpp"

using namespace strhound::sir;

namespace {

Program figure3() { return parse_program(oracle::read_file(STRHOUND_TEST_DATA "/figure3.sir")); }

const Method& method(const Program& p, std::string_view cls, std::string_view name) {
  const Method* m = p.find_class(cls)->find_method(name);
  EXPECT_NE(m, nullptr);
  return *m;
}

TEST(Parse, MinimalProgram) {
  Program p = parse_program("class A { static void m() { regs 0; 0: return; } }");
  ASSERT_EQ(p.classes.size(), 1u);
  ASSERT_EQ(p.classes[0].methods.size(), 1u);
  EXPECT_EQ(p.classes[0].methods[0].body.size(), 1u);
}

TEST(Parse, Figure3HasElevenLogicalStatements) {
  Program p = figure3();
  ASSERT_EQ(p.classes.size(), 1u);
  const Method& m = method(p, "Fig3", "figure3");
  // Source line of each instruction; the goto and the trailing return belong
  // to lines 4 and 11.
  const int line_of[] = {1, 1, 1, 2, 3, 4, 4, 5, 6, 7, 8, 9, 10, 11, 11, 11};
  std::set<int> logical(std::begin(line_of), std::end(line_of));
  EXPECT_EQ(logical.size(), 11u);
  EXPECT_EQ(m.body.size(), 16u);
}

TEST(Parse, BranchToMissingIndexNamesInstruction) {
  try {
    parse_program("class A { static void m() { regs 1; 0: const int r0 1; 1: goto @7; 2: return; } }");
    FAIL() << "expected a type error";
  } catch (const TypeError& e) {
    EXPECT_NE(std::string(e.what()).find("A.m@1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("goto"), std::string::npos) << e.what();
  }
}

TEST(Parse, SyntaxErrorCarriesPosition) {
  try {
    parse_program("class A {\n  static void m() { regs 0; 0: frobnicate; }\n}");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line, 2);
  }
}

TEST(Parse, IndexOutOfSequenceRejected) {
  EXPECT_THROW(parse_program("class A { static void m() { regs 0; 1: return; } }"), SyntaxError);
}

TEST(Parse, RoundTripIsFixedPoint) {
  Program p = figure3();
  const std::string once = serialize(p);
  Program q = parse_program(once);
  EXPECT_EQ(p, q);
  EXPECT_EQ(serialize(q), once);
}

TEST(Parse, LiteralEscapesSurvive) {
  std::u16string s = u"a\"b\\c\n\x01é中";
  s += static_cast<char16_t>(0xD800);  // lone surrogate
  s += u"\U0001F600";
  Program p;
  Class c;
  c.name = "A";
  Method m;
  m.name = "m";
  m.is_static = true;
  m.register_count = 1;
  Instruction k;
  k.op = Op::Const;
  k.type = SirType::string();
  k.dst = 0;
  k.str = s;
  Instruction r;
  r.op = Op::Return;
  m.body = {k, r};
  c.methods.push_back(m);
  p.classes.push_back(c);
  const std::string text = serialize(p);
  Program q = parse_program(text);
  EXPECT_EQ(q.classes[0].methods[0].body[0].str, s);
}

TEST(TypeCheck, RejectsConflictingMergeOnUse) {
  const char* src = R"(class A { static int m(int) {
    regs 2;
    0: const int r1 0;
    1: if-eq r0 r1 @4;
    2: const string r1 "x";
    3: goto @4;
    4: return r1;
  } })";
  EXPECT_THROW(parse_program(src), TypeError);
}

TEST(TypeCheck, RejectsMissingReturnValue) {
  EXPECT_THROW(parse_program("class A { static int m() { regs 0; 0: return; } }"), TypeError);
}

TEST(TypeCheck, RejectsFallOffEnd) {
  EXPECT_THROW(parse_program("class A { static void m() { regs 1; 0: const int r0 1; } }"), TypeError);
}

TEST(TypeCheck, RegisterOutOfRange) {
  EXPECT_THROW(parse_program("class A { static void m() { regs 1; 0: const int r3 1; 1: return; } }"), TypeError);
}

TEST(TypeCheck, DuplicateSwitchKeyRejectedBySyntax) {
  EXPECT_THROW(parse_program("class A { static void m(int) { regs 1; 0: switch r0 { 1: @1, 1: @1 } default @1; 1: return; } }"),
               SyntaxError);
}

TEST(Cfg, StraightLineIsOneBlock) {
  Program p = parse_program(
      "class A { static void m() { regs 2; 0: const int r0 1; 1: const int r1 2; 2: add int r0 r0 r1; 3: return; } }");
  Cfg g(method(p, "A", "m"));
  ASSERT_EQ(g.block_count(), 1);
  EXPECT_EQ(g.block(0).succs, std::vector<int>{g.exit()});
}

TEST(Cfg, Diamond) {
  Program p = parse_program(R"(class A { static void m(int) {
    regs 2;
    0: const int r1 0;
    1: if-eq r0 r1 @4;
    2: const int r1 1;
    3: goto @5;
    4: const int r1 2;
    5: return;
  } })");
  const Method& m = method(p, "A", "m");
  Cfg g(m);
  ASSERT_EQ(g.block_count(), 4);
  EXPECT_EQ(g.block(0).succs.size(), 2u);
  EXPECT_EQ(g.block(1).succs, std::vector<int>{3});
  EXPECT_EQ(g.block(2).succs, std::vector<int>{3});
  EXPECT_EQ(g.block(3).preds.size(), 2u);
  DataflowIndex d(m, g);
  EXPECT_EQ(d.cd(2), std::vector<int>{1});
  EXPECT_EQ(d.cd(4), std::vector<int>{1});
  EXPECT_TRUE(d.cd(5).empty());
}

TEST(Cfg, Figure3SplitsAtBothConditionals) {
  Program p = figure3();
  Cfg g(method(p, "Fig3", "figure3"));
  // [0-4] [5-6] [7-8] [9-10] [11-14] [15]
  ASSERT_EQ(g.block_count(), 6);
  EXPECT_EQ(g.block(0).last, 4);
  EXPECT_EQ(g.block(3).first, 9);
  EXPECT_EQ(g.block(3).last, 10);
  EXPECT_EQ(g.block(4).first, 11);
}

TEST(Cfg, InfiniteLoopGetsSyntheticExit) {
  Program p = parse_program(R"(class A { static void m() {
    regs 1;
    0: const int r0 0;
    1: add int r0 r0 r0;
    2: goto @1;
  } })");
  Cfg g(method(p, "A", "m"));
  EXPECT_FALSE(g.synthetic_exit_blocks().empty());
  for (int b = 0; b < g.block_count(); ++b) EXPECT_GE(g.ipdom()[static_cast<std::size_t>(b)], 0);
}

TEST(Dataflow, StraightLineHasNoControlDependence) {
  Program p = parse_program(
      "class A { static void m() { regs 2; 0: const int r0 1; 1: const int r1 2; 2: add int r0 r0 r1; 3: return; } }");
  const Method& m = method(p, "A", "m");
  Cfg g(m);
  DataflowIndex d(m, g);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(d.cd(i).empty());
  EXPECT_EQ(d.ud(0, 2), std::vector<int>{0});
  EXPECT_EQ(d.du(1, 1), std::vector<int>{2});
}

TEST(Dataflow, NestedGuardInLoopIsTransitive) {
  // Blocks: [0-1] [2] [3] [4-5] [6-7] [8].
  Program p = parse_program(R"(class A { static void m(int) {
    regs 4;
    0: const int r1 0;
    1: const int r2 10;
    2: if-ge r1 r2 @8;
    3: if-eq r1 r0 @6;
    4: const int r3 1;
    5: add int r1 r1 r3;
    6: const int r3 1;
    7: goto @2;
    8: return;
  } })");
  const Method& m = method(p, "A", "m");
  Cfg g(m);
  ASSERT_EQ(g.block_count(), 6);
  DataflowIndex d(m, g);
  EXPECT_EQ(d.cd(4), (std::vector<int>{2, 3}));
  EXPECT_EQ(d.cd(6), std::vector<int>{2});
  EXPECT_EQ(d.cd(2), std::vector<int>{2});
  EXPECT_FALSE(oracle::cd_closed(m, d));
  EXPECT_FALSE(oracle::du_ud_duality(d));
  EXPECT_FALSE(oracle::br_matches_dfs(m, g, d));
}

TEST(Dataflow, Figure3Properties) {
  Program p = figure3();
  const Method& m = method(p, "Fig3", "figure3");
  Cfg g(m);
  DataflowIndex d(m, g);
  EXPECT_FALSE(oracle::cd_closed(m, d));
  EXPECT_FALSE(oracle::du_ud_duality(d));
  EXPECT_FALSE(oracle::br_matches_dfs(m, g, d));
  EXPECT_EQ(d.cd(11), std::vector<int>{10});
  EXPECT_EQ(d.cd(5), std::vector<int>{4});
  EXPECT_EQ(d.ud(5, 12), std::vector<int>{3});
  EXPECT_EQ(d.du(5, 3), (std::vector<int>{5, 8, 11, 12}));
  // Parameters have no defining instruction.
  EXPECT_TRUE(d.ud(0, 4).empty());
  EXPECT_TRUE(d.param_reaches(0, 4));
  EXPECT_TRUE(d.reaches(12, 14));
  EXPECT_FALSE(d.reaches(14, 12));
}

TEST(Dataflow, StreamPseudoVariableLinksWriteAndRead) {
  Program p = parse_program(R"(class A { static void m() {
    regs 3;
    0: const int r0 2;
    1: new-array byte r1 r0;
    2: invoke intrinsic Stream.write (r1);
    3: invoke intrinsic Stream.read () -> r2;
    4: return;
  } })");
  const Method& m = method(p, "A", "m");
  Cfg g(m);
  DataflowIndex d(m, g);
  EXPECT_EQ(d.ud(d.stream_var(), 3), std::vector<int>{2});
}

}  // namespace
