#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>

#include "strhound/codec/codec.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/sir/text.hpp"

namespace strhound::obf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string wrap(const std::u16string& s) { return codec::b64_encode(codec::to_bytes(codec::to_wtf8(s))); }
std::u16string unwrap(const std::string& s) { return codec::from_wtf8(codec::to_string(codec::b64_decode(s))); }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

json to_json(const Manifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json j = {{"plaintext_b64", wrap(e.plaintext)}, {"scheme", e.scheme},   {"class", e.cls},
              {"method", e.method},                 {"loi", e.loi},         {"representation", e.representation},
              {"skipped", e.skipped}};
    if (e.skipped) j["skip_reason"] = e.skip_reason;
    entries.push_back(std::move(j));
  }
  return {{"program_id", m.program_id}, {"scheme", m.scheme}, {"entries", std::move(entries)}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.program_id = j.at("program_id").get<std::string>();
  m.scheme = j.value("scheme", "");
  for (const auto& e : j.at("entries")) {
    ManifestEntry me;
    me.plaintext = unwrap(e.at("plaintext_b64").get<std::string>());
    me.scheme = e.at("scheme").get<std::string>();
    me.cls = e.at("class").get<std::string>();
    me.method = e.at("method").get<std::string>();
    me.loi = e.at("loi").get<int>();
    me.representation = e.at("representation").get<std::string>();
    me.skipped = e.value("skipped", false);
    me.skip_reason = e.value("skip_reason", "");
    m.entries.push_back(std::move(me));
  }
  return m;
}

std::vector<CorpusProgram> generate_corpus(const CorpusOptions& opts) {
  if (opts.n_programs < 1) throw std::invalid_argument("n_programs must be at least 1");
  std::vector<const Scheme*> schemes;
  if (opts.schemes.empty())
    for (const auto& s : scheme_catalog()) schemes.push_back(&s);
  for (const auto& id : opts.schemes) {
    const Scheme* s = find_scheme(id);
    if (!s) throw std::invalid_argument("unknown scheme: " + id);
    schemes.push_back(s);
  }
  std::vector<CorpusProgram> out;
  for (int i = 0; i < opts.n_programs; ++i) {
    const std::uint64_t pseed = opts.seed * 1000003ULL + static_cast<std::uint64_t>(i);
    CorpusProgram cp;
    cp.plain = generate_plain_program(pseed, opts.size);
    for (const Scheme* s : schemes) {
      Obfuscated o = apply_scheme(cp.plain, *s, pseed);
      if (opts.verify) {
        const DiffReport r = differential_check(cp.plain, o);
        if (r.mismatched > 0)
          throw std::logic_error("scheme " + s->id + " broke program " + cp.plain.id + ": " +
                                 (r.problems.empty() ? std::string("?") : r.problems.front()));
      }
      cp.variants.push_back(std::move(o));
    }
    out.push_back(std::move(cp));
  }
  return out;
}

void write_corpus(const std::vector<CorpusProgram>& corpus, const fs::path& out, bool balance) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create " + out.string() + ": " + ec.message());
  json programs = json::array();
  std::vector<std::string> plain_strings, obf_strings;
  for (const auto& cp : corpus) {
    const fs::path dir = out / cp.plain.id;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / "plain.sir", sir::serialize(cp.plain.program));
    programs.push_back({{"program_id", cp.plain.id}, {"scheme", "plain"}, {"sir", cp.plain.id + "/plain.sir"}});
    for (const auto& e : cp.plain.strings) plain_strings.push_back(wrap(e.text));
    for (const auto& v : cp.variants) {
      const std::string& scheme = v.manifest.scheme;
      write_text(dir / (scheme + ".sir"), sir::serialize(v.program));
      write_text(dir / (scheme + ".manifest.json"), to_json(v.manifest).dump(2));
      programs.push_back({{"program_id", cp.plain.id},
                          {"scheme", scheme},
                          {"sir", cp.plain.id + "/" + scheme + ".sir"},
                          {"manifest", cp.plain.id + "/" + scheme + ".manifest.json"}});
      for (const auto& e : v.manifest.entries)
        if (e.encoded) obf_strings.push_back(wrap(*e.encoded));
    }
  }
  if (balance) {
    // Sample the larger side down to the size of the smaller one.
    std::mt19937_64 rng(corpus.size());
    auto& big = plain_strings.size() > obf_strings.size() ? plain_strings : obf_strings;
    const std::size_t keep = std::min(plain_strings.size(), obf_strings.size());
    std::shuffle(big.begin(), big.end(), rng);
    big.resize(keep);
  }
  json index = {{"programs", std::move(programs)},
                {"balanced", balance},
                {"strings", {{"plain_b64", plain_strings}, {"obfuscated_b64", obf_strings}}},
                {"excluded_schemes",
                 {{{"row", "DESede (two rows)"}, {"reason", "block-cipher class already covered by aes-si"}},
                  {{"row", "SO"}, {"reason", "no serialization in the IR"}}}}};
  write_text(out / "index.json", index.dump(1));
}

std::vector<CorpusIndexEntry> read_corpus_index(const fs::path& dir) {
  std::ifstream in(dir / "index.json", std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + (dir / "index.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error((dir / "index.json").string() + ": " + e.what());
  }
  std::vector<CorpusIndexEntry> out;
  for (const auto& p : j.at("programs")) {
    CorpusIndexEntry e;
    e.program_id = p.at("program_id").get<std::string>();
    e.scheme = p.at("scheme").get<std::string>();
    e.sir = dir / p.at("sir").get<std::string>();
    if (p.contains("manifest")) e.manifest = dir / p.at("manifest").get<std::string>();
    out.push_back(std::move(e));
  }
  return out;
}

void restore_inline_flags(const sir::Program& plain, Obfuscated& obf) {
  const Scheme* sc = find_scheme(obf.manifest.scheme);
  for (auto& e : obf.manifest.entries) {
    e.inlined = false;
    if (!sc || !sc->can_inline || e.skipped) continue;
    const sir::Class* before = plain.find_class(e.cls);
    const sir::Class* now = obf.program.find_class(e.cls);
    if (!before || !now) continue;
    bool helper = false;
    for (const auto& m : now->methods)
      if (!m.return_type.is_void() && !before->find_method(m.name, &m.params)) helper = true;
    e.inlined = !helper;
  }
}

}  // namespace strhound::obf
