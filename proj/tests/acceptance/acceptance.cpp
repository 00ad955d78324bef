// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `acceptance 3 7` runs only the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "strhound/codec/codec.hpp"
#include "strhound/harness/harness.hpp"
#include "strhound/methclf/methclf.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/report/report.hpp"
#include "strhound/sir/text.hpp"
#include "strhound/slicer/slicer.hpp"
#include "strhound/strclf/strclf.hpp"
#include "support/models.hpp"
#include "support/oracles.hpp"

using namespace strhound;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// --- shared state, built on first use ------------------------------------------

struct StringModel {
  strclf::TrainResult result;
  std::vector<strclf::LabeledString> strings;
};

const StringModel& string_model() {
  static const StringModel m = [] {
    StringModel s;
    s.strings = strclf::synthesize_string_corpus(4, 50000);
    s.result = strclf::train_tree(strclf::featurize(s.strings, strclf::FeatureExtractor::standard()), {}, 4);
    return s;
  }();
  return m;
}

// Signatures come from programs seeded 0..39; evaluation programs use
// seeds far from that range.
const methclf::SignatureSet& signatures() {
  static const auto s = testmodels::train_signatures(40);
  return s;
}

slicer::Models models() {
  return {&string_model().result.tree, nullptr, &signatures()};
}

struct Analyzed {
  std::vector<obf::CorpusProgram> corpus;
  std::vector<report::ProgramRun> runs;
  report::Report report;
  double seconds = 0;
};

// 200 programs under all 18 schemes, analyzed with 8 workers.
const Analyzed& main_corpus() {
  static const Analyzed a = [] {
    Analyzed out;
    obf::CorpusOptions co;
    co.n_programs = 200;
    co.seed = 31;
    co.size = obf::SizeClass::S;
    out.corpus = obf::generate_corpus(co);
    const auto mdl = models();
    harness::AnalysisOptions ao;
    ao.workers = 8;
    const auto t0 = Clock::now();
    for (const auto& cp : out.corpus)
      for (const auto& v : cp.variants) {
        auto an = harness::deobfuscate_program(v.program, mdl, ao);
        out.runs.push_back(
            {cp.plain.id, v.manifest.scheme, std::move(an.slices), v.manifest, report::string_constants(v.program)});
      }
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out.report = report::compute_metrics("acceptance", out.runs);
    return out;
  }();
  return a;
}

// Slice for (loi, crit) of a method, run in its original context.
harness::SliceResult run_at(const sir::Program& p, const std::string& cls, const std::string& method, int loi, int crit,
                            const harness::Budgets& b = {}) {
  const sir::StreamSummary streams(p);
  const sir::Class& c = *p.find_class(cls);
  const sir::Method& m = *c.find_method(method);
  const sir::Cfg g(m);
  const sir::DataflowIndex d(m, g, &streams);
  const auto es = harness::build_executable(p, c, m, d, slicer::slice(m, d, loi, crit), loi, crit);
  return harness::run_slice(harness::inject_context(p, es), es, b);
}

// --- criteria ---------------------------------------------------------------------

Verdict differential() {
  const auto t0 = Clock::now();
  std::set<std::tuple<std::string, std::string, std::string, std::string>> methods;
  int compared = 0, mismatched = 0, unreached = 0;
  std::string first;
  for (std::uint64_t seed = 20000; methods.size() < 1000 || seed < 20010; ++seed) {
    const auto pp = obf::generate_plain_program(seed, seed % 2 ? obf::SizeClass::M : obf::SizeClass::S);
    for (const auto& sc : obf::scheme_catalog()) {
      const auto o = obf::apply_scheme(pp, sc, seed);
      const auto seen = obf::observe_lois(o.program, o.manifest);
      for (std::size_t i = 0; i < o.manifest.entries.size(); ++i) {
        const auto& e = o.manifest.entries[i];
        if (e.skipped || e.value_def < 0) continue;
        if (!seen[i]) {
          ++unreached;
          continue;
        }
        methods.emplace(pp.id, sc.id, e.cls, e.method);
        ++compared;
        const auto r = run_at(o.program, e.cls, e.method, e.loi, e.value_def);
        if (r.recovered.size() != 1 || r.recovered[0] != *seen[i]) {
          ++mismatched;
          if (first.empty()) first = sc.id + " " + pp.id + " " + e.cls + "." + e.method + " " + r.outcome.message;
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  Verdict v;
  v.pass = mismatched == 0 && methods.size() >= 1000 && secs <= 300;
  v.detail = std::to_string(compared) + " sites in " + std::to_string(methods.size()) + " methods, " +
             std::to_string(mismatched) + " mismatches, " + std::to_string(unreached) + " not reached by full runs, " +
             fmt(secs, 1) + " s (limit 300 s)" + (first.empty() ? "" : "; first: " + first);
  return v;
}

Verdict figure3() {
  const auto p = sir::parse_program(oracle::read_file(STRHOUND_TEST_DATA "/figure3.sir"));
  const auto& c = *p.find_class("Fig3");
  const auto& m = *c.find_method("figure3");
  const sir::Cfg g(m);
  const sir::DataflowIndex d(m, g);
  std::vector<int> lois, crits;
  for (const auto& l : slicer::find_lois(p, c, m)) {
    lois.push_back(l.index);
    if (l.index == 14)
      for (const auto& cr : slicer::find_criteria(m, d, l)) crits.push_back(cr.index);
  }
  const auto s = slicer::slice(m, d, 14, 11);
  // Everything but the guard of toString (10) and the useString call (14);
  // 6 is the jump closing the if and 13 loads the ignored int argument.
  const std::set<int> want{0, 1, 2, 3, 4, 5, 7, 8, 9, 11, 12};
  Verdict v;
  v.pass = s == want && lois == std::vector<int>{2, 5, 8, 12, 14} && crits == std::vector<int>{11};
  std::string got;
  for (const int i : s) got += (got.empty() ? "" : ",") + std::to_string(i);
  v.detail = "slice {" + got + "}, guard 10 " + (s.count(10) ? "kept" : "cut") + ", loi 14 " +
             (s.count(14) ? "kept" : "excluded");
  return v;
}

Verdict recall() {
  const auto& a = main_corpus();
  const auto& r = a.report;
  Verdict v;
  v.pass = r.recall() >= 0.95 && a.seconds <= 1800;
  std::string worst;
  double lo = 2;
  for (const auto& s : r.per_scheme)
    if (s.recall() < lo) {
      lo = s.recall();
      worst = s.scheme;
    }
  v.detail = "recall " + fmt(r.recall()) + " (" + std::to_string(r.hits) + "/" + std::to_string(r.total) + ", " +
             std::to_string(r.skipped) + " skipped) over " + std::to_string(a.corpus.size()) +
             " programs x 18 schemes, lowest " + worst + " " + fmt(lo) + "; attribution string " +
             fmt(r.string_clf, 3) + " method " + fmt(r.method_clf, 3) + " both " + fmt(r.overlap, 3) + "; analysis " +
             fmt(a.seconds, 1) + " s (limit 1800 s)";
  return v;
}

Verdict string_classifier() {
  const auto& m = string_model();
  const auto& h = m.result.holdout;
  strclf::Confusion digits;
  const auto& fx = strclf::FeatureExtractor::standard();
  for (const auto i : m.result.holdout_indices) {
    const auto& s = m.strings[i];
    if (s.label != strclf::Label::Obfuscated || !strclf::is_digit_only(s.text)) continue;
    digits.add(s.label, m.result.tree.classify(fx.extract(s.text)));
  }
  const int n_digits = digits.tp + digits.fn;
  Verdict v;
  v.pass = m.strings.size() >= 100000 && h.precision() >= 0.95 && h.recall() >= 0.80 && n_digits > 0 &&
           digits.recall() < h.recall();
  v.detail = "holdout " + std::to_string(h.tp + h.fp + h.tn + h.fn) + " of " + std::to_string(m.strings.size()) +
             ": precision " + fmt(h.precision()) + " recall " + fmt(h.recall()) + "; digit-only recall " +
             fmt(digits.recall()) + " over " + std::to_string(n_digits);
  return v;
}

Verdict method_classifier() {
  const auto& sigs = signatures();
  strclf::Confusion all;
  int inl_hit = 0, inl_total = 0, pos = 0, neg = 0;
  std::map<std::string, std::pair<int, int>> inl_by_scheme;
  for (std::uint64_t seed = 30000; pos < 10000 || neg < 10000; ++seed) {
    const auto pp = obf::generate_plain_program(seed, seed % 2 ? obf::SizeClass::M : obf::SizeClass::S);
    for (const auto& c : pp.program.classes)
      for (const auto& m : c.methods) {
        if (m.is_abstract) continue;
        ++neg;
        all.add(strclf::Label::Plain,
                methclf::classify_method(m, sigs).match ? strclf::Label::Obfuscated : strclf::Label::Plain);
      }
    for (const auto& m : obf::generate_plain_methods(seed, 20)) {
      ++neg;
      all.add(strclf::Label::Plain,
              methclf::classify_method(m, sigs).match ? strclf::Label::Obfuscated : strclf::Label::Plain);
    }
    for (const auto& sc : obf::scheme_catalog())
      for (const bool inl : {false, true}) {
        if (inl && !sc.can_inline) continue;
        const auto o = obf::apply_scheme(pp, sc, seed, {.force_inline = inl});
        for (const auto& d : methclf::deobfuscation_samples(pp, o)) {
          const auto* m = o.program.find_class(d.cls)->find_method(d.method);
          const bool hit = methclf::classify_method(*m, sigs).match;
          if (d.inlined) {
            ++inl_total;
            inl_hit += hit;
            auto& [h, t] = inl_by_scheme[sc.id];
            h += hit;
            ++t;
          } else {
            ++pos;
            all.add(strclf::Label::Obfuscated, hit ? strclf::Label::Obfuscated : strclf::Label::Plain);
          }
        }
      }
  }
  const double inl_recall = inl_total ? static_cast<double>(inl_hit) / inl_total : 0.0;
  Verdict v;
  v.pass = all.precision() >= 0.95 && all.recall() >= 0.90 && inl_recall >= 0.85;
  v.detail = std::to_string(pos) + " emitted vs " + std::to_string(neg) + " plain methods: precision " +
             fmt(all.precision()) + " recall " + fmt(all.recall()) + "; inlined recall " + fmt(inl_recall) + " over " +
             std::to_string(inl_total) + " hosts (";
  bool first = true;
  for (const auto& [id, ht] : inl_by_scheme) {
    v.detail += (first ? "" : " ") + id + "=" + fmt(static_cast<double>(ht.first) / ht.second, 2);
    first = false;
  }
  v.detail += ")";
  return v;
}

Verdict countermeasures() {
  const std::vector<std::pair<std::string, std::string>> cms = {{"SI", "aes-si"},
                                                                {"BA", "xor-const"},
                                                                {"SW", "sw"},
                                                                {"SW-mod-key", "sw-mod-key"},
                                                                {"SC", "sc"},
                                                                {"KSC", "ksc"},
                                                                {"OI", "oi"},
                                                                {"ST", "st"},
                                                                {"TK", "tk"},
                                                                {"TM", "tm"},
                                                                {"KMC", "kmc"},
                                                                {"key-in-BA", "key-in-ba"},
                                                                {"key-is-idx-of-BA", "key-idx-ba"}};
  const auto mdl = models();
  Verdict v;
  v.pass = true;
  std::string lows;
  double worst = 2;
  for (const auto& [cm, id] : cms) {
    std::vector<report::ProgramRun> runs;
    for (std::uint64_t seed = 40000; seed < 40030; ++seed) {
      const auto pp = obf::generate_plain_program(seed, seed % 2 ? obf::SizeClass::M : obf::SizeClass::S);
      const auto o = obf::apply_scheme(pp, *obf::find_scheme(id), seed);
      auto a = harness::deobfuscate_program(o.program, mdl, {});
      runs.push_back({pp.id, id, std::move(a.slices), o.manifest, report::string_constants(o.program)});
    }
    const auto r = report::compute_metrics(id, runs).recall();
    worst = std::min(worst, r);
    if (r < 0.95) {
      v.pass = false;
      lows += " " + cm + "=" + fmt(r);
    }
  }

  // Negative control: the same KSC slices hosted under another method name.
  int controls = 0, still_decoded = 0, original_ok = 0;
  for (std::uint64_t seed = 41000; seed < 41010; ++seed) {
    const auto pp = obf::generate_plain_program(seed, obf::SizeClass::S);
    const auto o = obf::apply_scheme(pp, *obf::find_scheme("ksc"), seed);
    for (const auto& e : o.manifest.entries) {
      if (e.skipped || e.value_def < 0) continue;
      const sir::Program& p = o.program;
      const sir::StreamSummary streams(p);
      const sir::Class& c = *p.find_class(e.cls);
      const sir::Method& m = *c.find_method(e.method);
      const sir::Cfg g(m);
      const sir::DataflowIndex d(m, g, &streams);
      auto es = harness::build_executable(p, c, m, d, slicer::slice(m, d, e.loi, e.value_def), e.loi, e.value_def);
      const auto ok = harness::run_slice(harness::inject_context(p, es), es, {});
      original_ok += ok.recovered == std::vector<std::u16string>{e.plaintext};
      auto moved = p;
      moved.find_class(e.cls)->find_method(e.method)->name = e.method + "Renamed";
      es.method.name = e.method + "Renamed";
      const auto r = harness::run_slice(harness::inject_context(moved, es), es, {});
      ++controls;
      still_decoded += std::find(r.recovered.begin(), r.recovered.end(), e.plaintext) != r.recovered.end();
    }
  }
  v.pass = v.pass && controls > 0 && still_decoded == 0 && original_ok == controls;
  v.detail = "13 countermeasures x 30 programs, lowest recall " + fmt(worst) + (lows.empty() ? "" : ", below:" + lows) +
             "; renamed KSC hosts decoded " + std::to_string(still_decoded) + "/" + std::to_string(controls) +
             " (original context " + std::to_string(original_ok) + "/" + std::to_string(controls) + ")";
  return v;
}

Verdict isolation() {
  const auto mdl = models();
  harness::AnalysisOptions ao;
  ao.budgets.limits = {std::chrono::milliseconds(250), 0};  // wall clock only
  ao.workers = 4;
  const double limit_ms = 250 + 100;

  struct Variant {
    obf::Obfuscated clean;
    harness::ProgramAnalysis analysis;
    std::vector<std::size_t> loop;  // manifest entries to loop
  };
  std::vector<Variant> variants;
  // Sites whose own slice the pipeline executes and that can take a loop:
  // (variant, entry).
  std::vector<std::pair<std::size_t, std::size_t>> executed;
  for (std::uint64_t seed = 50000; seed < 50030; ++seed) {
    const auto pp = obf::generate_plain_program(seed, obf::SizeClass::S);
    for (const auto& sc : obf::scheme_catalog()) {
      Variant v{obf::apply_scheme(pp, sc, seed), {}, {}};
      v.analysis = harness::deobfuscate_program(v.clean.program, mdl, ao);
      for (std::size_t i = 0; i < v.clean.manifest.entries.size(); ++i) {
        const auto& e = v.clean.manifest.entries[i];
        if (e.skipped || e.value_def < 0) continue;
        for (const auto& r : v.analysis.slices)
          if (r.cls == e.cls && r.method == e.method && r.loi == e.loi && r.criterion == e.value_def) {
            auto probe = v.clean;
            if (obf::inject_infinite_loop(probe, i)) executed.emplace_back(variants.size(), i);
            break;
          }
      }
      variants.push_back(std::move(v));
    }
  }
  std::mt19937_64 rng(77);
  std::shuffle(executed.begin(), executed.end(), rng);
  const std::size_t want_loops = (executed.size() + 19) / 20;
  for (std::size_t k = 0; k < want_loops; ++k) variants[executed[k].first].loop.push_back(executed[k].second);

  int injected = 0, timed_out = 0, slices = 0, over = 0, total = 0, clean_hits = 0, loop_hits = 0;
  double max_wall = 0;
  std::string first;
  for (auto& v : variants) {
    if (v.loop.empty()) continue;
    auto looped = v.clean;
    for (const std::size_t i : v.loop) injected += obf::inject_infinite_loop(looped, i);
    const auto a_loop = harness::deobfuscate_program(looped.program, mdl, ao);
    for (const auto& r : a_loop.slices) {
      ++slices;
      max_wall = std::max(max_wall, r.wall_ms);
      over += r.wall_ms > limit_ms;
    }
    for (const std::size_t i : v.loop) {
      const auto& e = looped.manifest.entries[i];
      bool t = false;
      for (const auto& r : a_loop.slices)
        if (r.cls == e.cls && r.method == e.method && r.loi == e.loi && r.criterion == e.value_def)
          t = r.outcome.status == vm::Status::Timeout;
      timed_out += t;
      if (!t && first.empty()) first = looped.manifest.scheme + " " + e.cls + "." + e.method;
    }
    // Recall over plaintexts whose slices were left alone.
    std::set<std::u16string> affected, want, got_clean, got_loop;
    for (const std::size_t i : v.loop) affected.insert(looped.manifest.entries[i].plaintext);
    for (const auto& e : v.clean.manifest.entries)
      if (!e.skipped && !affected.count(e.plaintext)) want.insert(e.plaintext);
    for (const auto& f : v.analysis.findings) got_clean.insert(f.text);
    for (const auto& f : a_loop.findings) got_loop.insert(f.text);
    for (const auto& w : want) {
      ++total;
      clean_hits += got_clean.count(w) ? 1 : 0;
      loop_hits += got_loop.count(w) ? 1 : 0;
    }
  }
  // Variants without loops contribute identically to both sides.
  for (const auto& v : variants) {
    if (!v.loop.empty()) continue;
    std::set<std::u16string> want, got;
    for (const auto& e : v.clean.manifest.entries)
      if (!e.skipped) want.insert(e.plaintext);
    for (const auto& f : v.analysis.findings) got.insert(f.text);
    for (const auto& r : v.analysis.slices) max_wall = std::max(max_wall, r.wall_ms), over += r.wall_ms > limit_ms;
    for (const auto& w : want) {
      ++total;
      clean_hits += got.count(w) ? 1 : 0;
      loop_hits += got.count(w) ? 1 : 0;
    }
  }
  const double rc = static_cast<double>(clean_hits) / total, rl = static_cast<double>(loop_hits) / total;
  Verdict v;
  v.pass = injected == static_cast<int>(want_loops) && timed_out == injected && std::abs(rc - rl) <= 0.005 && over == 0;
  v.detail = std::to_string(injected) + " of " + std::to_string(executed.size()) + " executed site slices looped (" +
             fmt(100.0 * injected / static_cast<double>(executed.size()), 1) + "%), " + std::to_string(timed_out) +
             " reported timeout; recall elsewhere clean " + fmt(rc) + " vs " + fmt(rl) + "; max wall " +
             fmt(max_wall, 1) + " ms, " + std::to_string(over) + " slices above " + fmt(limit_ms, 0) + " ms" +
             (first.empty() ? "" : "; no timeout at " + first);
  return v;
}

Verdict dataflow() {
  const auto& a = main_corpus();
  int methods = 0, skipped = 0;
  std::string first;
  auto check = [&](const sir::Program& p) {
    const sir::StreamSummary streams(p);
    sir::for_each_method(p, [&](const sir::Class& c, const sir::Method& m) {
      if (m.is_abstract) return;
      if (m.body.size() >= 200) {
        ++skipped;
        return;
      }
      ++methods;
      const sir::Cfg g(m);
      const sir::DataflowIndex d(m, g, &streams);
      std::optional<std::string> err = oracle::du_ud_duality(d);
      if (!err) err = oracle::cd_closed(m, d);
      if (!err) err = oracle::br_matches_dfs(m, g, d);
      if (err && first.empty()) first = c.name + "." + m.name + ": " + *err;
    });
  };
  for (const auto& cp : a.corpus) {
    check(cp.plain.program);
    for (const auto& v : cp.variants) check(v.program);
  }
  Verdict v;
  v.pass = first.empty() && methods > 0;
  v.detail = std::to_string(methods) + " methods checked (" + std::to_string(skipped) +
             " with 200+ instructions left out)" + (first.empty() ? "" : "; first violation " + first);
  return v;
}

Verdict kernels() {
  std::vector<std::string> bad;
  auto close = [&](double got, double want, const std::string& what) {
    if (std::abs(got - want) > 1e-9) bad.push_back(what + "=" + fmt(got, 12));
  };
  auto rho = [](std::vector<double> x, std::vector<double> y) { return methclf::spearman(x, y).rho; };
  close(rho({1, 2, 3}, {1, 2, 3}), 1.0, "spearman(id)");
  close(rho({1, 2, 3}, {3, 2, 1}), -1.0, "spearman(rev)");
  close(rho({1, 2, 2}, {1, 2, 3}), std::sqrt(3.0) / 2, "spearman(ties)");
  close(strclf::chi_squared_uniform(u"aaaa"), 380.0, "chi2(aaaa)");
  close(strclf::normalized_entropy(u"aab"), -(2.0 / 3) * std::log2(2.0 / 3) - (1.0 / 3) * std::log2(1.0 / 3),
        "entropy(aab)");
  close(strclf::normalized_entropy(u"aaaa"), 0.0, "entropy(aaaa)");

  const codec::Bytes key{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  const codec::Bytes pt{0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff};
  const codec::Bytes ct{0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30, 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a};
  std::uint8_t out[16], back[16];
  codec::aes128_encrypt_block(key.data(), pt.data(), out);
  codec::aes128_decrypt_block(key.data(), out, back);
  if (!std::equal(ct.begin(), ct.end(), out) || !std::equal(pt.begin(), pt.end(), back)) bad.push_back("aes vector");

  std::mt19937_64 rng(9);
  std::map<std::string, int> fails;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    codec::Bytes b(rng() % 80);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    if (!b.empty() && i % 5 == 0) std::fill(b.begin(), b.begin() + static_cast<long>(b.size() / 3), 0);
    fails["b64"] += codec::b64_decode(codec::b64_encode(b)) != b;
    fails["b85"] += codec::b85_decode(codec::b85_encode(b)) != b;
    fails["bigint33"] += codec::bigint_decode(codec::bigint_encode(b, 33), 33) != b;
    fails["aes"] += codec::aes128_ecb_decrypt(codec::aes128_ecb_encrypt(b, key), key) != b;
    // Well-formed text (pairs included) for url; raw code units, lone
    // surrogates too, for wtf8.
    std::u16string text, units;
    for (std::size_t k = 0; k < b.size(); ++k) {
      std::uint32_t cp = static_cast<std::uint32_t>(rng() % 0x110000);
      if (k % 3 == 0) cp %= 0x80;
      if (cp >= 0xD800 && cp < 0xE000) cp -= 0x800;
      if (cp >= 0x10000) {
        text += static_cast<char16_t>(0xD800 + ((cp - 0x10000) >> 10));
        text += static_cast<char16_t>(0xDC00 + ((cp - 0x10000) & 0x3FF));
      } else {
        text += static_cast<char16_t>(cp);
      }
      units += static_cast<char16_t>(rng());
    }
    fails["url"] += codec::url_decode(codec::url_encode(text)) != text;
    fails["wtf8"] += codec::from_wtf8(codec::to_wtf8(units)) != units;
  }
  for (const auto& [k, n] : fails)
    if (n) bad.push_back(k + " round trip failed " + std::to_string(n) + "x");
  Verdict v;
  v.pass = bad.empty();
  v.detail = "spearman 3/3, chi2 and entropy examples, AES reference block, " + std::to_string(fails.size()) +
             " codecs x " + std::to_string(cases) + " round trips";
  for (const auto& b : bad) v.detail += "; " + b;
  return v;
}

Verdict timing() {
  const auto& t = main_corpus().report.timing;
  Verdict v;
  v.pass = t.slices > 0 && t.p95_ms <= 1000;
  v.detail = std::to_string(t.slices) + " slices: mean " + fmt(t.mean_ms, 2) + " ms, median " + fmt(t.p50_ms, 2) +
             " ms, p95 " + fmt(t.p95_ms, 2) + " ms (target 250 ms " + (t.p95_ms <= 250 ? "met" : "missed") +
             ", hard limit 1000 ms)";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"differential slicing oracle", differential},
      {"figure 3 slice", figure3},
      {"end-to-end recall", recall},
      {"string classifier", string_classifier},
      {"method classifier", method_classifier},
      {"countermeasure coverage", countermeasures},
      {"timeout and isolation", isolation},
      {"dataflow correctness", dataflow},
      {"numeric kernels", kernels},
      {"per-slice timing", timing},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    failed += !v.pass;
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[k].first << ": "
              << v.detail << " [" << fmt(secs, 1) << " s]" << std::endl;
  }
  return failed ? 1 : 0;
}
