#include "strhound/report/report.hpp"

#include <algorithm>
#include <boost/regex.hpp>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "strhound/codec/codec.hpp"
#include "strhound/slicer/slicer.hpp"

namespace strhound::report {

const std::vector<CategoryRule>& category_rules() {
  // Spaces around the SQL alternatives in the published table are layout.
  static const std::vector<CategoryRule> rules = {
      {"URL", R"(\w+://[^/\"]+.*)"},
      {"IP", R"(.*\b([0-9]{1,3}\.){3}[0-9]{1,3}\b.*)"},
      {"Paths", R"(/\w+[\./].+)"},
      {"Intents", R"(android.intent\..*)"},
      {"SQL", R"(.*(select.*from|update.*set|insert into|delete from|create table|drop table|truncate table).*)", true},
      {"Certificates", R"(MII.+)"},
      {"Permissions", R"(android.permission\..*)"},
      {"YouTubeApiKey", R"(AIza[0-9A-Za-z\-_]{35})"},
      {"CryptoAlgorithms", R"(MD2|MD5|SHA\-?1|ECB|DES)", false, true},
  };
  return rules;
}

namespace {

struct Compiled {
  const CategoryRule* rule;
  boost::regex re;
};

std::vector<Compiled> compile(const std::vector<CategoryRule>& rules) {
  std::vector<Compiled> out;
  for (const auto& r : rules) {
    boost::regex::flag_type flags = boost::regex::perl;
    if (r.icase) flags |= boost::regex::icase;
    out.push_back({&r, boost::regex(r.pattern, flags)});
  }
  return out;
}

std::set<std::string> match_all(const std::string& text, const std::vector<Compiled>& rules) {
  std::set<std::string> out;
  for (const auto& c : rules) {
    const bool hit = c.rule->search ? boost::regex_search(text, c.re) : boost::regex_match(text, c.re);
    if (hit) out.insert(c.rule->name);
  }
  return out;
}

}  // namespace

std::set<std::string> categorize(std::u16string_view s) {
  static const auto compiled = compile(category_rules());
  return match_all(codec::to_wtf8(s), compiled);
}

std::set<std::string> categorize(std::u16string_view s, const std::vector<CategoryRule>& rules) {
  return match_all(codec::to_wtf8(s), compile(rules));
}

std::set<std::u16string> string_constants(const sir::Program& p) {
  std::set<std::u16string> out;
  auto scan = [&](const sir::Method& m) {
    for (const auto& ins : m.body)
      if (ins.is_string_const()) out.insert(ins.str);
  };
  for (const auto& c : p.classes) {
    for (const auto& m : c.methods) scan(m);
    if (c.static_init) scan(*c.static_init);
  }
  return out;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (xs[hi] - xs[lo]) * (pos - static_cast<double>(lo));
}

Report compute_metrics(const std::string& corpus, const std::vector<ProgramRun>& runs) {
  Report rep;
  rep.corpus = corpus;
  std::map<std::string, SchemeRecall> schemes;
  std::map<std::string, int> cat_counts;
  std::vector<double> walls;
  int via_string = 0, via_method = 0, via_both = 0;

  for (const auto& run : runs) {
    RunSummary sum{run.program_id, run.scheme, 0, 0, 0, {}};
    std::set<std::u16string> want;
    for (const auto& e : run.manifest.entries) {
      if (e.skipped)
        ++sum.skipped;
      else
        want.insert(e.plaintext);
    }
    std::map<std::u16string, unsigned> got;
    for (const auto& s : run.slices) {
      walls.push_back(s.wall_ms);
      ++rep.statuses[std::string(vm::to_string(s.outcome.status))];
      for (const auto& t : s.recovered)
        if (!run.constants.count(t)) got[t] |= s.reasons;
    }
    for (const auto& [text, reasons] : got) {
      Recovered r{text, categorize(text), reasons, want.count(text) > 0};
      for (const auto& c : r.categories) ++cat_counts[c];
      const bool by_string = reasons & slicer::kObfuscatedString;
      const bool by_method = reasons & (slicer::kCallsDeobfuscator | slicer::kIsDeobfuscator);
      via_string += by_string;
      via_method += by_method;
      via_both += by_string && by_method;
      if (r.expected) ++sum.hits;
      sum.recovered.push_back(std::move(r));
    }
    sum.total = static_cast<int>(want.size());
    rep.hits += sum.hits;
    rep.total += sum.total;
    rep.skipped += sum.skipped;
    rep.revealed += static_cast<int>(got.size());
    auto& sr = schemes[run.scheme];
    sr.scheme = run.scheme;
    sr.hits += sum.hits;
    sr.total += sum.total;
    sr.skipped += sum.skipped;
    rep.runs.push_back(std::move(sum));
  }

  for (const auto& sc : obf::scheme_catalog())
    if (const auto it = schemes.find(sc.id); it != schemes.end()) {
      rep.per_scheme.push_back(it->second);
      schemes.erase(it);
    }
  for (auto& [_, sr] : schemes) rep.per_scheme.push_back(sr);

  if (rep.revealed) {
    rep.string_clf = static_cast<double>(via_string) / rep.revealed;
    rep.method_clf = static_cast<double>(via_method) / rep.revealed;
    rep.overlap = static_cast<double>(via_both) / rep.revealed;
  }
  for (const auto& rule : category_rules()) rep.categories.emplace_back(rule.name, cat_counts[rule.name]);

  rep.timing.slices = static_cast<int>(walls.size());
  if (!walls.empty()) {
    rep.timing.p50_ms = quantile(walls, 0.5);
    rep.timing.p95_ms = quantile(walls, 0.95);
    rep.timing.mean_ms = std::accumulate(walls.begin(), walls.end(), 0.0) / static_cast<double>(walls.size());
  }
  return rep;
}

namespace {

std::string preview(const std::u16string& s) {
  return codec::to_string(codec::utf8_bytes(s));
}
std::string wrap(const std::u16string& s) {
  return codec::b64_encode(codec::to_bytes(codec::to_wtf8(s)));
}

}  // namespace

nlohmann::json to_json(const Report& r) {
  using nlohmann::json;
  json j;
  j["corpus"] = r.corpus;
  j["recall"] = r.recall();
  j["hits"] = r.hits;
  j["total"] = r.total;
  j["skipped"] = r.skipped;
  j["per_scheme"] = json::array();
  for (const auto& s : r.per_scheme)
    j["per_scheme"].push_back(
        {{"scheme", s.scheme}, {"recall", s.recall()}, {"hits", s.hits}, {"total", s.total}, {"skipped", s.skipped}});
  j["attribution"] = {
      {"string_clf", r.string_clf}, {"method_clf", r.method_clf}, {"overlap", r.overlap}, {"revealed", r.revealed}};
  j["categories"] = json::array();
  for (const auto& [name, n] : r.categories) j["categories"].push_back({{"name", name}, {"count", n}});
  j["timing"] = {{"slices", r.timing.slices},
                 {"p50_ms", r.timing.p50_ms},
                 {"p95_ms", r.timing.p95_ms},
                 {"mean_ms", r.timing.mean_ms}};
  j["statuses"] = r.statuses;
  j["programs"] = json::array();
  for (const auto& run : r.runs) {
    json strings = json::array();
    for (const auto& s : run.recovered)
      strings.push_back({{"text_b64", wrap(s.text)},
                         {"preview", preview(s.text)},
                         {"categories", s.categories},
                         {"reasons", slicer::reasons_to_string(s.reasons)},
                         {"expected", s.expected}});
    j["programs"].push_back({{"program", run.program_id},
                             {"scheme", run.scheme},
                             {"hits", run.hits},
                             {"total", run.total},
                             {"skipped", run.skipped},
                             {"recovered", std::move(strings)}});
  }
  return j;
}

std::string to_text(const Report& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "corpus " << r.corpus << "\n";
  out << std::left << std::setw(14) << "scheme" << std::right << std::setw(8) << "hits" << std::setw(8) << "total"
      << std::setw(8) << "skipped" << std::setw(10) << "recall" << "\n";
  for (const auto& s : r.per_scheme)
    out << std::left << std::setw(14) << s.scheme << std::right << std::setw(8) << s.hits << std::setw(8) << s.total
        << std::setw(8) << s.skipped << std::setw(10) << s.recall() << "\n";
  out << std::left << std::setw(14) << "all" << std::right << std::setw(8) << r.hits << std::setw(8) << r.total
      << std::setw(8) << r.skipped << std::setw(10) << r.recall() << "\n\n";
  out << "revealed " << r.revealed << ": string classifier " << r.string_clf << ", method classifier " << r.method_clf
      << ", both " << r.overlap << "\n";
  out << "categories:";
  for (const auto& [name, n] : r.categories) out << " " << name << "=" << n;
  out << "\n";
  out << std::setprecision(2) << "slices " << r.timing.slices << ": p50 " << r.timing.p50_ms << " ms, p95 "
      << r.timing.p95_ms << " ms, mean " << r.timing.mean_ms << " ms\n";
  out << "outcomes:";
  for (const auto& [k, n] : r.statuses) out << " " << k << "=" << n;
  out << "\n";
  return out.str();
}

}  // namespace strhound::report
