#include "strhound/harness/harness.hpp"

#include <gtest/gtest.h>

#include "strhound/sir/text.hpp"
#include "strhound/sir/typecheck.hpp"
#include "support/models.hpp"

using namespace strhound;
using namespace strhound::harness;

namespace {

obf::PlainProgram one_string_program(const std::u16string& s) {
  obf::PlainProgram pp;
  pp.id = "one";
  pp.program = sir::parse_program(R"(entry Greeter.greet;
  class Greeter {
    static void greet() {
      regs 1;
      0: const string r0 "x";
      1: invoke intrinsic Log.record (r0);
      2: return;
    }
  })");
  pp.program.classes[0].methods[0].body[0].str = s;
  pp.strings.push_back({s, "Greeter", "greet", 0, 1, 0, obf::LoiKind::CallArg});
  return pp;
}

// Slices `cls.method` at (loi, crit) and builds the executable form.
ExecutableSlice executable(const sir::Program& p, const std::string& cls, const std::string& method, int loi,
                           int crit) {
  const sir::StreamSummary streams(p);
  const sir::Class& c = *p.find_class(cls);
  const sir::Method& m = *c.find_method(method);
  const sir::Cfg g(m);
  const sir::DataflowIndex d(m, g, &streams);
  return build_executable(p, c, m, d, slicer::slice(m, d, loi, crit), loi, crit);
}

SliceResult run(const sir::Program& p, const ExecutableSlice& es, Budgets b = {}) {
  return run_slice(inject_context(p, es), es, b);
}

// Runs the slice for a manifest entry, criterion taken from the manifest.
SliceResult run_entry(const obf::Obfuscated& o, const obf::ManifestEntry& e, Budgets b = {}) {
  return run(o.program, executable(o.program, e.cls, e.method, e.loi, e.value_def), b);
}

nlohmann::json without_timing(const SliceResult& r) {
  auto j = to_json(r);
  j.erase("wall_ms");
  return j;
}

TEST(Build, EmptySliceOnlyLogsAndReturns) {
  const auto p = sir::parse_program(R"(class A {
    static string m(string) {
      regs 3;
      0: const string r1 "k";
      1: invoke intrinsic Str.concat (r0, r1) -> r2;
      2: invoke intrinsic Log.record (r2);
      3: return r2;
    }
  })");
  const auto& c = *p.find_class("A");
  const auto& m = *c.find_method("m");
  const sir::Cfg g(m);
  const sir::DataflowIndex d(m, g);
  const auto es = build_executable(p, c, m, d, {}, 2, 1);
  // Original indices are kept as jumps, the tail logs and returns.
  const auto& body = es.method.body;
  const int pro = static_cast<int>(es.seeded.size());
  ASSERT_GE(body.size(), 6u + static_cast<std::size_t>(pro));
  for (int i = pro; i < pro + 4; ++i) EXPECT_EQ(body[static_cast<std::size_t>(i)].op, sir::Op::Goto) << i;
  EXPECT_EQ(body[static_cast<std::size_t>(pro + 2)].target, pro + 4);
  EXPECT_EQ(body[static_cast<std::size_t>(pro + 4)].op, sir::Op::Invoke);
  EXPECT_EQ(body[static_cast<std::size_t>(pro + 4)].method.cls, "Log");
  EXPECT_EQ(body.back().op, sir::Op::Return);
  // r2 is never defined in the rebuilt body, so it is seeded.
  EXPECT_EQ(es.seeded, std::vector<int>{2});
  EXPECT_NO_THROW(sir::check_method(p, c, es.method));
}

TEST(Build, XorConstRecoversHello) {
  const auto pp = one_string_program(u"hello");
  for (const bool inl : {false, true}) {
    const auto o = obf::apply_scheme(pp, *obf::find_scheme("xor-const"), 4, {.force_inline = inl});
    const auto& e = o.manifest.entries.at(0);
    ASSERT_GE(e.value_def, 0);
    const auto r = run_entry(o, e);
    EXPECT_EQ(r.outcome.status, vm::Status::Completed) << r.outcome.message;
    EXPECT_EQ(r.recovered, std::vector<std::u16string>{u"hello"}) << inl;
  }
}

TEST(Build, AesWithStaticInitializerRecovers) {
  const auto pp = one_string_program(u"secret endpoint");
  const auto o = obf::apply_scheme(pp, *obf::find_scheme("aes-si"), 11);
  const auto& e = o.manifest.entries.at(0);
  const auto r = run_entry(o, e);
  EXPECT_EQ(r.outcome.status, vm::Status::Completed) << r.outcome.message;
  EXPECT_EQ(r.recovered, std::vector<std::u16string>{u"secret endpoint"});
}

TEST(Build, ParameterDerivedCriterionRunsWithDefaults) {
  const auto p = sir::parse_program(R"(class A {
    static void sink(string) {
      regs 1;
      0: return;
    }
    static void m(string) {
      regs 3;
      0: const string r1 "id=";
      1: invoke intrinsic Str.concat (r1, r0) -> r2;
      2: invoke static A.sink(string) (r2);
      3: return;
    }
  })");
  const auto& c = *p.find_class("A");
  const auto lois = slicer::find_lois(p, c, *c.find_method("m"));
  ASSERT_EQ(lois.size(), 2u);  // concat consumes both strings, sink its argument
  const auto es = executable(p, "A", "m", 2, 1);
  EXPECT_TRUE(es.seeded.empty());  // the parameter needs no seeding
  const auto r = run(p, es);
  // The parameter gets its default, null, and the concat faults; the fault
  // is reported rather than escaping.
  EXPECT_EQ(r.outcome.status, vm::Status::Fault);
  EXPECT_EQ(r.outcome.fault, vm::FaultKind::NullPointer);
  EXPECT_EQ(r.outcome.fault_site, "A.m@1");
  EXPECT_TRUE(r.recovered.empty());
}

TEST(Inject, ConcreteClassOnlyHostChanges) {
  const auto pp = obf::generate_plain_program(3, obf::SizeClass::S);
  const auto o = obf::apply_scheme(pp, *obf::find_scheme("xor-const"), 3);
  const auto& e = o.manifest.entries.at(0);
  const auto es = executable(o.program, e.cls, e.method, e.loi, e.value_def);
  const auto injected = inject_context(o.program, es);
  ASSERT_EQ(injected.classes.size(), o.program.classes.size());
  for (std::size_t i = 0; i < injected.classes.size(); ++i) {
    const auto& a = o.program.classes[i];
    const auto& b = injected.classes[i];
    EXPECT_EQ(a.is_abstract, b.is_abstract);
    for (std::size_t k = 0; k < a.methods.size(); ++k) {
      const bool host = a.name == e.cls && a.methods[k].name == e.method;
      EXPECT_EQ(a.methods[k].body == b.methods[k].body, !host) << a.name << "." << a.methods[k].name;
    }
  }
}

TEST(Inject, AbstractHostBecomesConcrete) {
  const auto p = sir::parse_program(R"(abstract class H {
    abstract int size();
    abstract string name(int);
    static void sink(string) {
      regs 1;
      0: return;
    }
    void m() {
      regs 3;
      0: const string r1 "abc";
      1: invoke intrinsic Str.concat (r1, r1) -> r2;
      2: invoke static H.sink(string) (r2);
      3: return;
    }
  })");
  const auto es = executable(p, "H", "m", 2, 1);
  const auto injected = inject_context(p, es);
  const auto& c = *injected.find_class("H");
  EXPECT_FALSE(c.is_abstract);
  for (const char* n : {"size", "name"}) {
    const auto* m = c.find_method(n);
    EXPECT_FALSE(m->is_abstract);
    ASSERT_FALSE(m->body.empty());
    EXPECT_EQ(m->body.back().op, sir::Op::Return);
  }
  const auto r = run_slice(injected, es, {});
  EXPECT_EQ(r.outcome.status, vm::Status::Completed) << r.outcome.message;
  EXPECT_EQ(r.recovered, std::vector<std::u16string>{u"abcabc"});
}

// The key depends on the method's own name: moving the slice elsewhere
// breaks decoding, which is why slices run inside their host.
TEST(Inject, KeyFromContextNeedsTheOriginalHost) {
  const auto pp = one_string_program(u"context bound");
  const auto o = obf::apply_scheme(pp, *obf::find_scheme("ksc"), 9);
  const auto& e = o.manifest.entries.at(0);
  auto es = executable(o.program, e.cls, e.method, e.loi, e.value_def);
  EXPECT_EQ(run(o.program, es).recovered, std::vector<std::u16string>{u"context bound"});

  auto moved = o.program;
  moved.find_class("Greeter")->find_method("greet")->name = "elsewhere";
  es.method.name = "elsewhere";
  const auto r = run(moved, es);
  ASSERT_EQ(r.recovered.size(), 1u);
  EXPECT_NE(r.recovered[0], u"context bound");
}

TEST(Budget, InfiniteLoopTimesOutWithinGrace) {
  const auto pp = one_string_program(u"never");
  auto o = obf::apply_scheme(pp, *obf::find_scheme("b64"), 1, {.force_inline = false});
  ASSERT_TRUE(obf::inject_infinite_loop(o, 0));
  Budgets b;
  b.limits = {std::chrono::milliseconds(200), 0};
  const auto r = run_entry(o, o.manifest.entries[0], b);
  EXPECT_EQ(r.outcome.status, vm::Status::Timeout);
  EXPECT_LE(r.wall_ms, 200.0 + 100.0);
  EXPECT_TRUE(r.recovered.empty());

  b.limits = {std::chrono::milliseconds(0), 100000};
  EXPECT_EQ(run_entry(o, o.manifest.entries[0], b).outcome.status, vm::Status::StepBudgetExhausted);
}

TEST(Budget, AnalysisContinuesPastAHangingSlice) {
  const auto& t = testmodels::small();
  const auto pp = obf::generate_plain_program(21, obf::SizeClass::S);
  auto o = obf::apply_scheme(pp, *obf::find_scheme("b64"), 21, {.force_inline = false});
  ASSERT_GE(o.manifest.entries.size(), 2u);
  ASSERT_TRUE(obf::inject_infinite_loop(o, 0));
  AnalysisOptions opts;
  opts.budgets.limits = {std::chrono::milliseconds(200), 0};
  const auto a = deobfuscate_program(o.program, t.models(), opts);
  int timeouts = 0;
  for (const auto& r : a.slices)
    if (r.outcome.status == vm::Status::Timeout) {
      ++timeouts;
      EXPECT_LE(r.wall_ms, 300.0);
    }
  EXPECT_GE(timeouts, 1);
  std::set<std::u16string> got;
  for (const auto& f : a.findings) got.insert(f.text);
  int others = 0;
  for (std::size_t i = 1; i < o.manifest.entries.size(); ++i) {
    const auto& e = o.manifest.entries[i];
    if (e.skipped || e.plaintext == o.manifest.entries[0].plaintext) continue;
    ++others;
    EXPECT_TRUE(got.count(e.plaintext)) << e.cls << "." << e.method << "@" << e.loi;
  }
  EXPECT_GT(others, 0);
}

// Slice execution against the values the whole program produces at the
// same LoI.
TEST(Differential, SlicesAgreeWithFullRuns) {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto pp = obf::generate_plain_program(seed, obf::SizeClass::S);
    for (const auto& sc : obf::scheme_catalog()) {
      const auto o = obf::apply_scheme(pp, sc, seed);
      const auto seen = obf::observe_lois(o.program, o.manifest);
      for (std::size_t i = 0; i < o.manifest.entries.size(); ++i) {
        const auto& e = o.manifest.entries[i];
        if (e.skipped || e.value_def < 0 || !seen[i]) continue;
        const auto r = run_entry(o, e);
        ASSERT_EQ(r.recovered.size(), 1u) << sc.id << " " << e.cls << "." << e.method << " " << r.outcome.message;
        EXPECT_EQ(r.recovered[0], *seen[i]) << sc.id;
        ++compared;
      }
    }
  }
  EXPECT_GT(compared, 100);
}

TEST(Analysis, RecoversAcrossSchemes) {
  const auto& t = testmodels::small();
  const auto pp = obf::generate_plain_program(5001, obf::SizeClass::S);
  for (const auto& sc : obf::scheme_catalog()) {
    const auto o = obf::apply_scheme(pp, sc, 5001);
    const auto a = deobfuscate_program(o.program, t.models(), {});
    std::set<std::u16string> got;
    for (const auto& f : a.findings) got.insert(f.text);
    for (const auto& e : o.manifest.entries)
      if (!e.skipped) EXPECT_TRUE(got.count(e.plaintext)) << sc.id << " " << e.cls << "." << e.method;
  }
}

TEST(Analysis, ParallelMatchesSequential) {
  const auto& t = testmodels::small();
  const auto pp = obf::generate_plain_program(8, obf::SizeClass::M);
  const auto o = obf::apply_scheme(pp, *obf::find_scheme("key-in-ba"), 8);
  AnalysisOptions seq;
  AnalysisOptions par;
  par.workers = 3;
  const auto a = deobfuscate_program(o.program, t.models(), seq);
  const auto b = deobfuscate_program(o.program, t.models(), par);
  ASSERT_EQ(a.slices.size(), b.slices.size());
  ASSERT_FALSE(a.slices.empty());
  for (std::size_t i = 0; i < a.slices.size(); ++i) EXPECT_EQ(without_timing(a.slices[i]), without_timing(b.slices[i]));
  ASSERT_EQ(a.findings.size(), b.findings.size());
  for (std::size_t i = 0; i < a.findings.size(); ++i) EXPECT_EQ(a.findings[i].text, b.findings[i].text);
}

TEST(Analysis, PlainProgramsHaveNoMethodClassifierHits) {
  const auto& t = testmodels::small();
  for (std::uint64_t seed = 100; seed < 106; ++seed) {
    const auto pp = obf::generate_plain_program(seed, seed % 2 ? obf::SizeClass::M : obf::SizeClass::S);
    for (const auto& c : slicer::find_candidate_methods(pp.program, t.models()))
      EXPECT_EQ(c.reasons & (slicer::kCallsDeobfuscator | slicer::kIsDeobfuscator), 0u) << c.id.cls << "." << c.id.name;
  }
}

TEST(Analysis, EachReasonFires) {
  const auto& t = testmodels::small();
  const auto pp = obf::generate_plain_program(2, obf::SizeClass::S);
  auto reasons_for = [&](const char* scheme, bool inl) {
    const auto o = obf::apply_scheme(pp, *obf::find_scheme(scheme), 2, {.force_inline = inl});
    unsigned all = 0;
    for (const auto& c : slicer::find_candidate_methods(o.program, t.models())) all |= c.reasons;
    return all;
  };
  // Encoded literals without helpers: only the string classifier can tell.
  EXPECT_TRUE(reasons_for("b85", true) & slicer::kObfuscatedString);
  // Extracted byte-array helpers: callers and the helper itself.
  const unsigned ba = reasons_for("key-in-ba", false);
  EXPECT_TRUE(ba & slicer::kCallsDeobfuscator);
  EXPECT_TRUE(ba & slicer::kIsDeobfuscator);
}

TEST(Results, JsonRoundTrip) {
  const auto& t = testmodels::small();
  const auto pp = obf::generate_plain_program(4, obf::SizeClass::S);
  const auto o = obf::apply_scheme(pp, *obf::find_scheme("tk"), 4);
  const auto a = deobfuscate_program(o.program, t.models(), {});
  ASSERT_FALSE(a.slices.empty());
  const auto dir = std::filesystem::temp_directory_path() / "strhound_harness_test";
  std::filesystem::remove_all(dir);
  write_results(dir, "p4", a);
  const auto back = read_results(dir / "p4.json");
  ASSERT_EQ(back.size(), a.slices.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(to_json(back[i]), to_json(a.slices[i]));
    EXPECT_EQ(back[i].recovered, a.slices[i].recovered);
  }
  const auto j = to_json(a.slices[0]);
  for (const char* k : {"class", "method", "signature", "loi", "criterion", "reasons", "status", "recovered_b64",
                        "wall_ms", "steps", "seeded"})
    EXPECT_TRUE(j.contains(k)) << k;
  std::filesystem::remove_all(dir);
}

}  // namespace
