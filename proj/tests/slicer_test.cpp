#include <gtest/gtest.h>

#include "strhound/sir/text.hpp"
#include "strhound/slicer/slicer.hpp"
#include "support/oracles.hpp"

using namespace strhound;
using namespace strhound::slicer;

namespace {

struct Fixture {
  sir::Program p;
  const sir::Class* c;
  const sir::Method* m;
  sir::Cfg g;
  sir::DataflowIndex d;
  Fixture(sir::Program prog, const std::string& cls, const std::string& name)
      : p(std::move(prog)), c(p.find_class(cls)), m(c->find_method(name)), g(*m), d(*m, g) {}
};

Fixture figure3() {
  return {sir::parse_program(oracle::read_file(STRHOUND_TEST_DATA "/figure3.sir")), "Fig3", "figure3"};
}

std::vector<int> indices(const std::vector<Loi>& l) {
  std::vector<int> out;
  for (const auto& x : l) out.push_back(x.index);
  return out;
}

std::vector<int> indices(const std::vector<Criterion>& l) {
  std::vector<int> out;
  for (const auto& x : l) out.push_back(x.index);
  return out;
}

const Loi& loi_at(const std::vector<Loi>& lois, int index) {
  for (const auto& l : lois)
    if (l.index == index) return l;
  throw std::out_of_range("no loi");
}

TEST(Lois, Figure3) {
  auto f = figure3();
  // concat (the builder's initial content), the three appends and useString;
  // toString only reads the builder.
  EXPECT_EQ(indices(find_lois(f.p, *f.c, *f.m)), (std::vector<int>{2, 5, 8, 12, 14}));
}

TEST(Lois, KindsAndNonStrings) {
  const auto p = sir::parse_program(R"(class A {
    static string s;
    static int arith(int) {
      regs 2;
      0: const int r1 3;
      1: add int r1 r0 r1;
      2: return r1;
    }
    static string kinds(string) {
      regs 4;
      0: sput A.s r0;
      1: const int r1 1;
      2: new-array string r2 r1;
      3: const int r3 0;
      4: aput r2 r3 r0;
      5: return r0;
    }
  })");
  const auto& c = *p.find_class("A");
  EXPECT_TRUE(find_lois(p, c, *c.find_method("arith")).empty());
  const auto l = find_lois(p, c, *c.find_method("kinds"));
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0].kind, obf::LoiKind::FieldWrite);
  EXPECT_EQ(l[1].kind, obf::LoiKind::ArrayStore);
  EXPECT_EQ(l[2].kind, obf::LoiKind::Return);
  EXPECT_EQ(l[0].operands, std::vector<int>{0});
}

TEST(Criteria, Figure3) {
  auto f = figure3();
  const auto lois = find_lois(f.p, *f.c, *f.m);
  EXPECT_EQ(indices(find_criteria(*f.m, f.d, loi_at(lois, 14))), std::vector<int>{11});
  // Appending the constant "D" or "E": nothing can be deobfuscated before it.
  EXPECT_TRUE(find_criteria(*f.m, f.d, loi_at(lois, 8)).empty());
  EXPECT_TRUE(find_criteria(*f.m, f.d, loi_at(lois, 12)).empty());
  EXPECT_EQ(indices(find_criteria(*f.m, f.d, loi_at(lois, 5))), std::vector<int>{2});
}

TEST(Criteria, Listing1HasTwoSources) {
  Fixture f(sir::parse_program(oracle::read_file(STRHOUND_TEST_DATA "/listing1.sir")), "Listing1", "send");
  const auto lois = find_lois(f.p, *f.c, *f.m);
  EXPECT_EQ(indices(find_criteria(*f.m, f.d, loi_at(lois, 9))), (std::vector<int>{5, 7}));
  // Each source slices to its own call, without the country check.
  for (const int crit : {5, 7}) {
    const auto s = slice(*f.m, f.d, 9, crit);
    EXPECT_EQ(s, std::set<int>{crit});
  }
}

TEST(Slice, Figure3KeepsAllButTheGuardAndTheLoi) {
  auto f = figure3();
  const auto s = slice(*f.m, f.d, 14, 11);
  EXPECT_EQ(s, (std::set<int>{0, 1, 2, 3, 4, 5, 7, 8, 9, 11, 12}));
  EXPECT_FALSE(s.count(10));  // the if guarding toString
  EXPECT_FALSE(s.count(14));  // useString itself
  const auto dump = dump_slice(*f.m, f.d, s, 14, 11);
  EXPECT_NE(dump.find("10: if-le r1 r0 @15;  // cut: guard-of-criterion"), std::string::npos) << dump;
  EXPECT_NE(dump.find("// criterion"), std::string::npos);
}

TEST(Slice, StraightLineByteArrayDecoding) {
  const auto p = sir::parse_program(R"(class A {
    static void sink(string) {
      regs 1;
      0: return;
    }
    static void m() {
      regs 7;
      0: const int r0 2;
      1: new-array byte r1 r0;
      2: const int r2 0;
      3: const byte r3 66;
      4: aput r1 r2 r3;
      5: const int r2 1;
      6: const byte r3 79;
      7: aput r1 r2 r3;
      8: const int r4 42;
      9: const int r5 99;
      10: invoke intrinsic Bytes.toString (r1) -> r6;
      11: invoke static A.sink(string) (r6);
      12: return;
    }
  })");
  Fixture f(p, "A", "m");
  const auto lois = find_lois(f.p, *f.c, *f.m);
  EXPECT_EQ(indices(find_criteria(*f.m, f.d, loi_at(lois, 11))), std::vector<int>{10});
  EXPECT_EQ(slice(*f.m, f.d, 11, 10), (std::set<int>{0, 1, 2, 3, 4, 5, 6, 7, 10}));
}

TEST(Slice, LoopFillingAnArrayIsKept) {
  const auto p = sir::parse_program(R"(class A {
    static void m() {
      regs 6;
      0: const int r0 3;
      1: new-array char r1 r0;
      2: const int r2 0;
      3: if-ge r2 r0 @9;
      4: const int r3 97;
      5: add int r3 r3 r2;
      6: aput r1 r2 r3;
      7: const int r4 1;
      8: add int r2 r2 r4;
      9: if-lt r2 r0 @4;
      10: invoke intrinsic Str.fromChars (r1) -> r5;
      11: invoke intrinsic Log.record (r5);
      12: return;
    }
  })");
  Fixture f(p, "A", "m");
  const auto s = slice(*f.m, f.d, 11, 10);
  for (const int i : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) EXPECT_TRUE(s.count(i)) << i;
}

// Slice invariants over generated obfuscated programs.
TEST(Slice, InvariantsOverCorpus) {
  int slices = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed)
    for (const auto& sc : obf::scheme_catalog()) {
      const auto pp = obf::generate_plain_program(seed, seed % 2 ? obf::SizeClass::M : obf::SizeClass::S);
      const auto o = obf::apply_scheme(pp, sc, seed);
      const sir::StreamSummary streams(o.program);
      for (const auto& c : o.program.classes)
        for (const auto& m : c.methods) {
          if (m.is_abstract) continue;
          const sir::Cfg g(m);
          const sir::DataflowIndex d(m, g, &streams);
          for (const auto& loi : find_lois(o.program, c, m))
            for (const auto& crit : find_criteria(m, d, loi)) {
              ++slices;
              EXPECT_NE(m.body[static_cast<std::size_t>(crit.index)].op, sir::Op::Const);
              const auto s = slice(m, d, loi.index, crit.index);
              EXPECT_TRUE(s.count(crit.index));
              EXPECT_FALSE(s.count(loi.index));
              for (const int guard : d.cd(crit.index)) EXPECT_FALSE(s.count(guard)) << c.name << "." << m.name;
              // Closure over use-def chains (the LoI is the only permitted gap).
              for (const int i : s)
                for (const int x : d.use(i))
                  for (const int def : d.ud(x, i)) EXPECT_TRUE(s.count(def) || def == loi.index);
            }
        }
    }
  EXPECT_GT(slices, 500);
}

}  // namespace
