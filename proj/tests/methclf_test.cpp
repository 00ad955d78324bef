#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "strhound/methclf/methclf.hpp"
#include "strhound/sir/text.hpp"

using namespace strhound;
using namespace strhound::methclf;

namespace {

Correlation sp(std::vector<double> x, std::vector<double> y) { return spearman(x, y); }

TEST(Spearman, HandComputedVectors) {
  EXPECT_NEAR(sp({1, 2, 3}, {1, 2, 3}).rho, 1.0, 1e-9);
  EXPECT_NEAR(sp({1, 2, 3}, {3, 2, 1}).rho, -1.0, 1e-9);
  // ranks x = [1, 2.5, 2.5]; centered [-1, .5, .5] and [-1, 0, 1] give 1.5 / sqrt(1.5 * 2)
  EXPECT_NEAR(sp({1, 2, 2}, {1, 2, 3}).rho, std::sqrt(3.0) / 2, 1e-9);
  EXPECT_NEAR(sp({1, 2, 2}, {1, 2, 3}).rho, 0.8660254037844386, 1e-9);
}

TEST(Spearman, ConstantSideIsFlaggedZero) {
  const auto c = sp({4, 4, 4}, {1, 2, 3});
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.rho, 0.0);
  EXPECT_TRUE(sp({1, 2, 3}, {0, 0, 0}).degenerate);
  EXPECT_FALSE(sp({1, 2, 3}, {0, 0, 1}).degenerate);
}

TEST(Spearman, BadShapesThrow) {
  EXPECT_THROW(sp({1, 2}, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(sp({1}, {1}), std::invalid_argument);
}

// Naive O(n^2) ranking and the textbook formula as an oracle for tie-free data.
double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
  auto rank = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      for (const double w : v) r[i] += w <= v[i];
    return r;
  };
  const auto rx = rank(x), ry = rank(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1 - 6 * d2 / (n * (n * n - 1));
}

TEST(Spearman, AgreesWithRankDifferenceFormulaWithoutTies) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> x(3 + t % 30), y(x.size());
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    EXPECT_NEAR(spearman(x, y).rho, spearman_no_ties(x, y), 1e-9);
  }
}

TEST(Spearman, ScaleAndPermutationInvariant) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> cnt(0, 9);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> x(38), y(38);
    for (auto& v : x) v = cnt(rng);
    for (auto& v : y) v = cnt(rng);
    const auto base = spearman(x, y);
    auto xs = x;
    for (auto& v : xs) v *= 3.5;
    EXPECT_NEAR(spearman(xs, y).rho, base.rho, 1e-12);
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> xp, yp;
    for (const auto i : perm) {
      xp.push_back(x[i]);
      yp.push_back(y[i]);
    }
    EXPECT_NEAR(spearman(xp, yp).rho, base.rho, 1e-12);
    EXPECT_NEAR(spearman(y, x).rho, base.rho, 1e-12);
    EXPECT_LE(std::abs(base.rho), 1.0);
  }
}

TEST(Spr, Examples) {
  const auto p = sir::parse_program(R"(class A {
    static int f(int) {
      regs 3;
      0: const int r1 1;
      1: const int r2 2;
      2: xor int r1 r1 r2;
      3: return r1;
    }
    static string g(string, int) {
      regs 3;
      0: invoke static A.f(int) (r1) -> r1;
      1: invoke intrinsic B64.decode (r0) -> r2;
      2: invoke intrinsic Bytes.toString (r2) -> r0;
      3: return r0;
    }
  })");
  EXPECT_EQ(spr_tokens(p.classes[0].methods[0]), (std::vector<std::string>{"CONST", "CONST", "XOR", "RETURN"}));
  EXPECT_EQ(spr_tokens(p.classes[0].methods[1]), (std::vector<std::string>{"CALL", "B64.decode", "Bytes.toString", "RETURN"}));
}

std::vector<DeobSample> samples_for(const obf::PlainProgram& pp, std::string_view scheme, std::uint64_t seed,
                                    bool inl) {
  return deobfuscation_samples(pp, obf::apply_scheme(pp, *obf::find_scheme(scheme), seed, {.force_inline = inl}));
}

const SignatureSet& trained() {
  static const SignatureSet s = [] {
    std::vector<DeobSample> all;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const auto pp = obf::generate_plain_program(seed, obf::SizeClass::S);
      for (const auto& sc : obf::scheme_catalog())
        for (const bool inl : {false, true}) {
          if (inl && !sc.can_inline) continue;
          const auto d = samples_for(pp, sc.id, seed, inl);
          all.insert(all.end(), d.begin(), d.end());
        }
    }
    return build_signatures(all);
  }();
  return s;
}

TEST(Signatures, WellFormed) {
  const auto& s = trained();
  EXPECT_EQ(s.threshold, 0.85);
  EXPECT_TRUE(std::is_sorted(s.alphabet.begin(), s.alphabet.end()));
  for (const auto& sig : s.signatures) {
    EXPECT_EQ(sig.counts.size(), s.alphabet.size());
    EXPECT_GT(std::accumulate(sig.counts.begin(), sig.counts.end(), 0.0), 0) << sig.id;
  }
  // Every scheme contributes an extracted signature.
  for (const auto& sc : obf::scheme_catalog())
    EXPECT_TRUE(std::any_of(s.signatures.begin(), s.signatures.end(),
                            [&](const Signature& g) { return g.id == sc.id + "/extracted-0"; }))
        << sc.id;
}

TEST(Signatures, JsonRoundTrip) {
  const auto j = trained().to_json();
  const auto back = SignatureSet::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.to_json(), j);
  auto bad = j;
  bad["alphabet"].push_back("ZZZ");
  EXPECT_THROW(SignatureSet::from_json(bad), std::runtime_error);
  EXPECT_THROW(SignatureSet::from_json(nlohmann::json{{"model", "reptree"}}), std::runtime_error);
}

TEST(Classify, SelfComparisonIsPerfect) {
  std::vector<DeobSample> one = samples_for(obf::generate_plain_program(3, obf::SizeClass::S), "key-in-ba", 3, false);
  ASSERT_FALSE(one.empty());
  one.resize(1);
  const auto sigs = build_signatures(one);
  const auto m = classify_tokens(one[0].tokens, sigs);
  EXPECT_TRUE(m.match);
  EXPECT_NEAR(m.rho, 1.0, 1e-12);
  EXPECT_EQ(m.best, "key-in-ba/extracted-0");
}

TEST(Classify, EmptyTokensDoNotMatch) {
  const auto m = classify_tokens({}, trained());
  EXPECT_FALSE(m.match);
  EXPECT_TRUE(m.best.empty());
}

TEST(Classify, PlainHelpersDoNotMatch) {
  int matched = 0, total = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed)
    for (const auto& m : obf::generate_plain_methods(seed, 20)) {
      ++total;
      matched += classify_method(m, trained()).match;
    }
  EXPECT_EQ(matched, 0) << "of " << total;
}

TEST(Classify, UnseenExtractedMethodsMatch) {
  for (const auto& sc : obf::scheme_catalog()) {
    const auto pp = obf::generate_plain_program(777, obf::SizeClass::S);
    const auto d = samples_for(pp, sc.id, 777, false);
    ASSERT_FALSE(d.empty()) << sc.id;
    for (const auto& s : d) EXPECT_TRUE(classify_tokens(s.tokens, trained()).match) << s.signature_id;
  }
}

TEST(Classify, InlinedByteArrayLogicMatches) {
  for (const char* id : {"xor-const", "key-in-ba", "tk", "key-idx-ba"}) {
    const auto pp = obf::generate_plain_program(901, obf::SizeClass::S);
    const auto o = obf::apply_scheme(pp, *obf::find_scheme(id), 901, {.force_inline = true});
    int hosts = 0;
    for (const auto& d : deobfuscation_samples(pp, o)) {
      if (!d.inlined) continue;
      ++hosts;
      const auto* m = o.program.find_class(d.cls)->find_method(d.method);
      EXPECT_TRUE(classify_method(*m, trained()).match) << id << " " << d.cls << "." << d.method;
    }
    EXPECT_GT(hosts, 0) << id;
  }
}

TEST(Classify, PreexistingByteArrayCodeAddsNoise) {
  const auto pp = obf::generate_plain_program(902, obf::SizeClass::S);
  const auto o = obf::apply_scheme(pp, *obf::find_scheme("xor-const"), 902, {.force_inline = true});
  for (const auto& d : deobfuscation_samples(pp, o)) {
    if (!d.inlined) continue;
    auto tokens = spr_tokens(*o.program.find_class(d.cls)->find_method(d.method));
    const double clean = classify_tokens(tokens, trained()).rho;
    // Byte-array bookkeeping the host did before obfuscation.
    for (int i = 0; i < 12; ++i)
      for (const char* t : {"NEW-ARRAY", "ALEN", "AGET", "APUT", "IGET"}) tokens.push_back(t);
    EXPECT_LT(classify_tokens(tokens, trained()).rho, clean);
  }
}

// Signature and SPR tokens of every method the scheme added, void ones included.
std::string emitted_shape(const obf::PlainProgram& pp, const obf::Obfuscated& o) {
  std::string out;
  for (const auto& c : o.program.classes) {
    const auto* pc = pp.program.find_class(c.name);
    for (const auto& m : c.methods) {
      if (pc && pc->find_method(m.name, &m.params)) continue;
      const auto text = sir::serialize_method(m);
      out += text.substr(0, text.find('\n')) + ": ";  // signature, so parameter order counts
      for (const auto& t : spr_tokens(m)) out += t + " ";
      out += "| ";
    }
  }
  return out;
}

// Same scheme, other seeds: the emitted code changes shape, but the decoder
// keeps a distribution close to the first one.
void expect_variation(std::string_view scheme) {
  const auto pp = obf::generate_plain_program(42, obf::SizeClass::S);
  const auto a = obf::apply_scheme(pp, *obf::find_scheme(scheme), 1, {.force_inline = false});
  const auto da = deobfuscation_samples(pp, a);
  ASSERT_FALSE(da.empty());
  const auto sigs = build_signatures({da[0]});
  std::set<std::string> shapes{emitted_shape(pp, a)};
  for (std::uint64_t seed = 2; seed < 12; ++seed) {
    const auto b = obf::apply_scheme(pp, *obf::find_scheme(scheme), seed, {.force_inline = false});
    const auto db = deobfuscation_samples(pp, b);
    ASSERT_FALSE(db.empty());
    shapes.insert(emitted_shape(pp, b));
    EXPECT_GE(classify_tokens(db[0].tokens, sigs).rho, 0.9) << scheme << " seed " << seed;
  }
  EXPECT_GT(shapes.size(), 1u) << scheme;
}

TEST(Variation, AddRotate) { expect_variation("tm"); }
TEST(Variation, ObfuscatedInit) { expect_variation("oi"); }
TEST(Variation, Switch) { expect_variation("sw"); }

}  // namespace
