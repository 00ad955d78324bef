#pragma once

#include <json.hpp>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "strhound/harness/harness.hpp"
#include "strhound/obf/obf.hpp"

namespace strhound::report {

struct CategoryRule {
  std::string name;
  std::string pattern;
  bool icase = false;
  bool search = false;  // match anywhere instead of the whole string
};

/// The nine rules for sorting recovered strings, in table order.
const std::vector<CategoryRule>& category_rules();

/// Names of all matching rules, sorted.
std::set<std::string> categorize(std::u16string_view s);
std::set<std::string> categorize(std::u16string_view s, const std::vector<CategoryRule>& rules);

/// Analysis output for one obfuscated program together with its ground truth.
struct ProgramRun {
  std::string program_id;
  std::string scheme;
  std::vector<harness::SliceResult> slices;
  obf::Manifest manifest;
  std::set<std::u16string> constants;  // literals of the analyzed program
};

/// Literals appearing anywhere in `p`.
std::set<std::u16string> string_constants(const sir::Program& p);

struct Recovered {
  std::u16string text;
  std::set<std::string> categories;
  unsigned reasons = 0;   // union over the slices that produced it
  bool expected = false;  // a manifest plaintext
};

struct RunSummary {
  std::string program_id;
  std::string scheme;
  int hits = 0;
  int total = 0;                     // unique non-skipped plaintexts
  int skipped = 0;                   // skipped manifest entries
  std::vector<Recovered> recovered;  // newly revealed, unique, sorted by text
};

struct SchemeRecall {
  std::string scheme;
  int hits = 0;
  int total = 0;
  int skipped = 0;
  double recall() const { return total ? static_cast<double>(hits) / total : 0.0; }
};

struct Timing {
  int slices = 0;
  double p50_ms = 0;
  double p95_ms = 0;
  double mean_ms = 0;
};

struct Report {
  std::string corpus;
  int hits = 0;
  int total = 0;
  int skipped = 0;
  double recall() const { return total ? static_cast<double>(hits) / total : 0.0; }
  std::vector<SchemeRecall> per_scheme;  // catalog order, then unknown schemes by name
  // Fractions of revealed strings reached through each classifier.
  double string_clf = 0;
  double method_clf = 0;
  double overlap = 0;
  int revealed = 0;
  std::vector<std::pair<std::string, int>> categories;  // rule order
  Timing timing;
  std::map<std::string, int> statuses;  // slice outcomes
  std::vector<RunSummary> runs;
};

/// Recall is computed per run over unique strings: a plaintext counts once
/// per (program, scheme) pair, however many sites carry it.
Report compute_metrics(const std::string& corpus, const std::vector<ProgramRun>& runs);

/// Linear interpolation between closest ranks; `q` in [0, 1].
double quantile(std::vector<double> xs, double q);

nlohmann::json to_json(const Report& r);
std::string to_text(const Report& r);

}  // namespace strhound::report
