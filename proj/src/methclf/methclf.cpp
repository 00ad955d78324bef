#include "strhound/methclf/methclf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace strhound::methclf {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2;  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = r;
    i = j;
  }
  return rank;
}

std::map<std::string, int> count(const std::vector<std::string>& tokens) {
  std::map<std::string, int> c;
  for (const auto& t : tokens) ++c[t];
  return c;
}

}  // namespace

std::vector<std::string> spr_tokens(const sir::Method& m) {
  std::vector<std::string> out;
  if (m.is_abstract) return out;
  out.reserve(m.body.size());
  for (const auto& ins : m.body) {
    if (ins.op == sir::Op::Invoke) {
      out.push_back(ins.kind == sir::InvokeKind::Intrinsic ? ins.method.cls + "." + ins.method.name : "CALL");
      continue;
    }
    std::string t(sir::mnemonic(ins.op));
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    out.push_back(std::move(t));
  }
  return out;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two vectors of equal length >= 2");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return {0, true};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

std::vector<double> SignatureSet::project(const std::vector<std::string>& tokens) const {
  std::vector<double> v(alphabet.size(), 0);
  for (const auto& t : tokens) {
    const auto it = std::lower_bound(alphabet.begin(), alphabet.end(), t);
    if (it != alphabet.end() && *it == t) v[static_cast<std::size_t>(it - alphabet.begin())] += 1;
  }
  return v;
}

nlohmann::json SignatureSet::to_json() const {
  nlohmann::json sigs = nlohmann::json::array();
  for (const auto& s : signatures) sigs.push_back({{"id", s.id}, {"counts", s.counts}});
  return {{"model", "spr-signatures"}, {"version", version}, {"threshold", threshold}, {"alphabet", alphabet},
          {"signatures", sigs}};
}

SignatureSet SignatureSet::from_json(const nlohmann::json& j) {
  if (j.value("model", "") != "spr-signatures") throw std::runtime_error("not a signature set");
  SignatureSet s;
  s.version = j.at("version").get<int>();
  s.threshold = j.at("threshold").get<double>();
  s.alphabet = j.at("alphabet").get<std::vector<std::string>>();
  if (!std::is_sorted(s.alphabet.begin(), s.alphabet.end())) throw std::runtime_error("signature alphabet not sorted");
  for (const auto& e : j.at("signatures")) {
    Signature sig{e.at("id").get<std::string>(), e.at("counts").get<std::vector<double>>()};
    if (sig.counts.size() != s.alphabet.size()) throw std::runtime_error("signature " + sig.id + " has wrong length");
    s.signatures.push_back(std::move(sig));
  }
  if (s.signatures.empty()) throw std::runtime_error("signature set is empty");
  return s;
}

MethodMatch classify_tokens(const std::vector<std::string>& tokens, const SignatureSet& sigs) {
  MethodMatch r;
  if (tokens.empty() || sigs.signatures.empty() || sigs.alphabet.size() < 2) return r;
  const auto v = sigs.project(tokens);
  bool first = true;
  for (const auto& s : sigs.signatures) {
    const Correlation c = spearman(s.counts, v);
    if (first || c.rho > r.rho) {
      r.best = s.id;
      r.rho = c.rho;
      first = false;
    }
  }
  r.match = r.rho >= sigs.threshold;
  return r;
}

MethodMatch classify_method(const sir::Method& m, const SignatureSet& sigs) { return classify_tokens(spr_tokens(m), sigs); }

std::vector<DeobSample> deobfuscation_samples(const obf::PlainProgram& plain, const obf::Obfuscated& obf) {
  std::vector<DeobSample> out;
  const std::string& scheme = obf.manifest.scheme;
  for (const auto& c : obf.program.classes) {
    const sir::Class* pc = plain.program.find_class(c.name);
    int k = 0;
    for (const auto& m : c.methods) {
      if (pc && pc->find_method(m.name, &m.params)) continue;
      if (m.return_type.is_void()) continue;
      out.push_back({scheme + "/extracted-" + std::to_string(k++), spr_tokens(m), c.name, m.name, false});
    }
  }
  // Inline hosts: the inserted code is what the host gained over its plain form.
  std::set<std::pair<std::string, std::string>> hosts;
  for (const auto& e : obf.manifest.entries)
    if (e.inlined && !e.skipped) hosts.emplace(e.cls, e.method);
  for (const auto& [cls, name] : hosts) {
    const sir::Method* now = obf.program.find_class(cls)->find_method(name);
    const sir::Method* before = plain.program.find_class(cls)->find_method(name);
    auto diff = count(spr_tokens(*now));
    for (const auto& [t, n] : count(spr_tokens(*before))) diff[t] -= n;
    std::vector<std::string> tokens;
    for (const auto& [t, n] : diff)
      for (int i = 0; i < n; ++i) tokens.push_back(t);
    out.push_back({scheme + "/inline", std::move(tokens), cls, name, true});
  }
  return out;
}

SignatureSet build_signatures(const std::vector<DeobSample>& samples, double threshold) {
  SignatureSet s;
  s.threshold = threshold;
  std::set<std::string> alpha;
  std::map<std::string, std::map<std::string, int>> by_id;
  for (const auto& d : samples)
    for (const auto& t : d.tokens) {
      alpha.insert(t);
      ++by_id[d.signature_id][t];
    }
  s.alphabet.assign(alpha.begin(), alpha.end());
  for (const auto& [id, counts] : by_id) {
    Signature sig{id, std::vector<double>(s.alphabet.size(), 0)};
    for (const auto& [t, n] : counts)
      sig.counts[static_cast<std::size_t>(std::lower_bound(s.alphabet.begin(), s.alphabet.end(), t) - s.alphabet.begin())] = n;
    s.signatures.push_back(std::move(sig));
  }
  return s;
}

}  // namespace strhound::methclf
