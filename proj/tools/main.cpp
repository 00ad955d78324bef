#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "strhound/codec/codec.hpp"
#include "strhound/harness/harness.hpp"
#include "strhound/methclf/methclf.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/report/report.hpp"
#include "strhound/sir/text.hpp"
#include "strhound/strclf/strclf.hpp"

namespace fs = std::filesystem;
using namespace strhound;
using nlohmann::json;

namespace {

// Bad paths, unreadable or malformed inputs: exit code 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

sir::Program read_program(const fs::path& p) {
  try {
    return sir::parse_program(read_text(p));
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  out << s;
}

std::vector<obf::CorpusIndexEntry> read_index(const fs::path& dir) {
  try {
    return obf::read_corpus_index(dir);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
}

// Plain programs of a corpus, keyed by program id.
std::map<std::string, sir::Program> plain_programs(const std::vector<obf::CorpusIndexEntry>& index) {
  std::map<std::string, sir::Program> out;
  for (const auto& e : index)
    if (e.scheme == "plain") out.emplace(e.program_id, read_program(e.sir));
  return out;
}

obf::Obfuscated read_variant(const obf::CorpusIndexEntry& e) {
  try {
    return {read_program(e.sir), obf::manifest_from_json(read_json(e.manifest))};
  } catch (const json::exception& x) {
    throw InputError(e.manifest.string() + ": " + x.what());
  }
}

// --- gen-corpus -------------------------------------------------------------

struct GenOpts {
  int n = 1;
  std::vector<std::string> schemes;
  std::uint64_t seed = 0;
  std::string size = "S";
  fs::path out;
  bool balance = false;
  bool no_verify = false;
};

int gen_corpus(const GenOpts& o) {
  obf::CorpusOptions co;
  co.n_programs = o.n;
  co.seed = o.seed;
  co.verify = !o.no_verify;
  const auto size = obf::parse_size_class(o.size);
  if (!size) throw InputError("unknown size class " + o.size);
  co.size = *size;
  for (const auto& s : o.schemes) {
    if (!obf::find_scheme(s)) throw InputError("unknown scheme " + s);
    co.schemes.push_back(s);
  }
  const auto corpus = obf::generate_corpus(co);
  obf::write_corpus(corpus, o.out, o.balance);
  std::size_t variants = 0;
  for (const auto& p : corpus) variants += p.variants.size();
  std::cout << "wrote " << corpus.size() << " programs, " << variants << " obfuscated variants to " << o.out.string()
            << "\n";
  return 0;
}

// --- train-string-model -------------------------------------------------------

struct TrainOpts {
  fs::path corpus;  // program corpus; empty means the synthetic string corpus
  std::size_t per_side = 50000;
  std::uint64_t seed = 0;
  fs::path out;
};

// Plain literals against the literals the obfuscated variants introduced.
std::vector<strclf::LabeledString> strings_from_corpus(const fs::path& dir, std::size_t per_side, std::uint64_t seed) {
  const auto index = read_index(dir);
  const auto plains = plain_programs(index);
  std::set<std::u16string> plain, obfuscated;
  for (const auto& [_, p] : plains) {
    const auto c = report::string_constants(p);
    plain.insert(c.begin(), c.end());
  }
  for (const auto& e : index) {
    if (e.scheme == "plain") continue;
    for (const auto& s : report::string_constants(read_program(e.sir)))
      if (!plain.count(s)) obfuscated.insert(s);
  }
  std::vector<strclf::LabeledString> pos, neg;
  for (const auto& s : plain) neg.push_back({s, strclf::Label::Plain, "corpus"});
  for (const auto& s : obfuscated) pos.push_back({s, strclf::Label::Obfuscated, "corpus"});
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const std::size_t n = std::min({per_side, pos.size(), neg.size()});
  if (n == 0) throw InputError(dir.string() + ": no labeled strings");
  std::vector<strclf::LabeledString> out(neg.begin(), neg.begin() + static_cast<long>(n));
  out.insert(out.end(), pos.begin(), pos.begin() + static_cast<long>(n));
  return out;
}

int train_string_model(const TrainOpts& o) {
  const auto strings = o.corpus.empty() ? strclf::synthesize_string_corpus(o.seed, o.per_side)
                                        : strings_from_corpus(o.corpus, o.per_side, o.seed);
  const auto& fx = strclf::FeatureExtractor::standard();
  const auto tr = strclf::train_tree(strclf::featurize(strings, fx), {}, o.seed);
  write_text(o.out, tr.tree.to_json().dump() + "\n");
  std::cout << "trained on " << strings.size() << " strings, " << tr.tree.leaf_count() << " leaves, depth "
            << tr.tree.depth() << " (" << tr.pruned << " pruned)\n";
  std::cout << "holdout precision " << tr.holdout.precision() << " recall " << tr.holdout.recall() << "\n";
  return 0;
}

// --- build-signatures -----------------------------------------------------------

struct SigOpts {
  fs::path corpus;
  fs::path out;
  double threshold = 0.85;
};

int build_signatures(const SigOpts& o) {
  const auto index = read_index(o.corpus);
  const auto plains = plain_programs(index);
  std::vector<methclf::DeobSample> samples;
  for (const auto& e : index) {
    if (e.scheme == "plain") continue;
    const auto it = plains.find(e.program_id);
    if (it == plains.end()) throw InputError("no plain program for " + e.program_id);
    auto v = read_variant(e);
    obf::restore_inline_flags(it->second, v);
    obf::PlainProgram pp;
    pp.id = e.program_id;
    pp.program = it->second;
    const auto d = methclf::deobfuscation_samples(pp, v);
    samples.insert(samples.end(), d.begin(), d.end());
  }
  const auto sigs = methclf::build_signatures(samples, o.threshold);
  write_text(o.out, sigs.to_json().dump() + "\n");
  std::cout << "built " << sigs.signatures.size() << " signatures from " << samples.size() << " samples\n";
  return 0;
}

// --- analyze --------------------------------------------------------------------

struct AnalyzeOpts {
  fs::path in;
  fs::path corpus;
  fs::path string_model;
  fs::path signatures;
  int wall_ms = 5000;
  std::uint64_t steps = 10'000'000;
  int workers = 1;
  fs::path out;
};

void summarize(const std::string& name, const harness::ProgramAnalysis& a) {
  int completed = 0;
  for (const auto& s : a.slices) completed += s.outcome.status == vm::Status::Completed;
  std::cout << name << ": " << a.candidates.size() << " candidates, " << a.lois << " lois, " << a.slices.size()
            << " slices (" << completed << " completed), " << a.findings.size() << " revealed\n";
}

int analyze(const AnalyzeOpts& o) {
  std::optional<strclf::DecisionTree> tree;
  std::optional<methclf::SignatureSet> sigs;
  try {
    if (!o.string_model.empty()) tree = strclf::DecisionTree::from_json(read_json(o.string_model));
    if (!o.signatures.empty()) sigs = methclf::SignatureSet::from_json(read_json(o.signatures));
  } catch (const json::exception& e) {
    throw InputError(std::string("bad model file: ") + e.what());
  }
  const slicer::Models models{tree ? &*tree : nullptr, nullptr, sigs ? &*sigs : nullptr};
  harness::AnalysisOptions ao;
  ao.budgets.limits = {std::chrono::milliseconds(o.wall_ms), o.steps};
  ao.workers = o.workers;

  if (!o.in.empty()) {
    const auto p = read_program(o.in);
    const auto a = harness::deobfuscate_program(p, models, ao);
    harness::write_results(o.out, o.in.stem().string(), a);
    summarize(o.in.stem().string(), a);
    for (const auto& f : a.findings)
      std::cout << "  " << f.cls << "." << f.method << "@" << f.loi << " "
                << codec::to_string(codec::utf8_bytes(f.text)) << "\n";
    return 0;
  }
  for (const auto& e : read_index(o.corpus)) {
    const auto a = harness::deobfuscate_program(read_program(e.sir), models, ao);
    harness::write_results(o.out / e.program_id, e.scheme, a);
    summarize(e.program_id + "/" + e.scheme, a);
  }
  return 0;
}

// --- report -----------------------------------------------------------------------

struct ReportOpts {
  fs::path results;
  fs::path corpus;
  fs::path out;
  fs::path text;
};

int make_report(const ReportOpts& o) {
  std::vector<report::ProgramRun> runs;
  for (const auto& e : read_index(o.corpus)) {
    if (e.scheme == "plain") continue;
    const auto file = o.results / e.program_id / (e.scheme + ".json");
    if (!fs::exists(file)) throw InputError("missing results " + file.string());
    auto v = read_variant(e);
    std::vector<harness::SliceResult> slices;
    try {
      slices = harness::read_results(file);
    } catch (const std::exception& x) {
      throw InputError(file.string() + ": " + x.what());
    }
    runs.push_back(
        {e.program_id, e.scheme, std::move(slices), std::move(v.manifest), report::string_constants(v.program)});
  }
  const auto rep = report::compute_metrics(o.corpus.filename().string(), runs);
  write_text(o.out, report::to_json(rep).dump(2) + "\n");
  const auto text = report::to_text(rep);
  if (!o.text.empty()) write_text(o.text, text);
  std::cout << text;
  return 0;
}

// --- categorize ---------------------------------------------------------------------

struct CategorizeOpts {
  fs::path in;
  std::vector<std::string> strings;
};

int categorize(const CategorizeOpts& o) {
  std::vector<std::string> lines = o.strings;
  if (!o.in.empty()) {
    std::istringstream ss(read_text(o.in));
    for (std::string line; std::getline(ss, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  for (const auto& s : lines) {
    const auto cats = report::categorize(codec::utf8_decode(codec::to_bytes(s)));
    std::string names;
    for (const auto& c : cats) names += (names.empty() ? "" : ",") + c;
    std::cout << (names.empty() ? "-" : names) << "\t" << s << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strhound: string deobfuscation by targeted slicing"};
  app.require_subcommand(1);

  GenOpts gen;
  auto* g = app.add_subcommand("gen-corpus", "generate plain programs and obfuscated variants");
  g->add_option("--n", gen.n, "number of plain programs")->check(CLI::PositiveNumber);
  g->add_option("--schemes", gen.schemes, "scheme ids (default: whole catalog)")->delimiter(',');
  g->add_option("--seed", gen.seed);
  g->add_option("--size", gen.size, "size class S, M or L");
  g->add_option("--out", gen.out)->required();
  g->add_flag("--balance", gen.balance, "equal plain and obfuscated string counts");
  g->add_flag("--no-verify", gen.no_verify, "skip differential verification");

  TrainOpts train;
  auto* t = app.add_subcommand("train-string-model", "train the string classifier");
  t->add_option("--corpus", train.corpus, "program corpus to take labeled literals from")
      ->check(CLI::ExistingDirectory);
  t->add_option("--per-side", train.per_side, "strings per label");
  t->add_option("--seed", train.seed);
  t->add_option("--out", train.out)->required();

  SigOpts sig;
  auto* b = app.add_subcommand("build-signatures", "build method classifier signatures from a corpus");
  b->add_option("--corpus", sig.corpus)->required()->check(CLI::ExistingDirectory);
  b->add_option("--out", sig.out)->required();
  b->add_option("--threshold", sig.threshold)->check(CLI::Range(-1.0, 1.0));

  AnalyzeOpts an;
  auto* a = app.add_subcommand("analyze", "slice and execute candidate methods");
  auto* in_opt = a->add_option("--in", an.in, "single SIR program")->check(CLI::ExistingFile);
  auto* corpus_opt = a->add_option("--corpus", an.corpus, "corpus directory")->check(CLI::ExistingDirectory);
  in_opt->excludes(corpus_opt);
  a->add_option("--string-model", an.string_model)->check(CLI::ExistingFile);
  a->add_option("--signatures", an.signatures)->check(CLI::ExistingFile);
  a->add_option("--wall-ms", an.wall_ms, "per-slice wall budget")->check(CLI::NonNegativeNumber);
  a->add_option("--steps", an.steps, "per-slice step budget, 0 for none");
  a->add_option("--workers", an.workers)->check(CLI::PositiveNumber);
  a->add_option("--out", an.out)->required();

  ReportOpts rep;
  auto* r = app.add_subcommand("report", "metrics from analysis results and manifests");
  r->add_option("--results", rep.results)->required()->check(CLI::ExistingDirectory);
  r->add_option("--corpus", rep.corpus)->required()->check(CLI::ExistingDirectory);
  r->add_option("--out", rep.out)->required();
  r->add_option("--text", rep.text, "also write the text table here");

  CategorizeOpts cat;
  auto* c = app.add_subcommand("categorize", "match strings against the category rules");
  c->add_option("--in", cat.in, "file with one string per line")->check(CLI::ExistingFile);
  c->add_option("strings", cat.strings);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0 && e.get_exit_code() != static_cast<int>(CLI::ExitCodes::Success)) {
      std::cerr << app.help();
      return 1;
    }
    return 0;
  }

  try {
    if (*g) return gen_corpus(gen);
    if (*t) return train_string_model(train);
    if (*b) return build_signatures(sig);
    if (*a) {
      if (an.in.empty() && an.corpus.empty()) throw InputError("analyze needs --in or --corpus");
      return analyze(an);
    }
    if (*r) return make_report(rep);
    if (*c) return categorize(cat);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
