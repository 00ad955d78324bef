#include "strhound/slicer/slicer.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "strhound/sir/text.hpp"
#include "strhound/sir/typecheck.hpp"

namespace strhound::slicer {

using sir::Op;

std::string reasons_to_string(unsigned reasons) {
  std::string out;
  auto add = [&](unsigned bit, const char* s) {
    if (!(reasons & bit)) return;
    if (!out.empty()) out += ',';
    out += s;
  };
  add(kObfuscatedString, "i");
  add(kCallsDeobfuscator, "ii");
  add(kIsDeobfuscator, "iii");
  return out;
}

namespace {

// Static initializer first, then the methods in declaration order.
std::vector<const sir::Method*> bodies(const sir::Class& c) {
  std::vector<const sir::Method*> out;
  if (c.static_init) out.push_back(&*c.static_init);
  for (const auto& m : c.methods) out.push_back(&m);
  return out;
}

}  // namespace

std::vector<Candidate> find_candidate_methods(const sir::Program& p, const Models& models) {
  const strclf::FeatureExtractor& fx = models.features ? *models.features : strclf::FeatureExtractor::standard();
  // Method classifier verdicts for every method with a body.
  std::set<const sir::Method*> deob;
  if (models.signatures)
    for (const auto& c : p.classes)
      for (const sir::Method* m : bodies(c))
        if (!m->is_abstract && methclf::classify_method(*m, *models.signatures).match) deob.insert(m);

  std::vector<Candidate> out;
  for (const auto& c : p.classes)
    for (const sir::Method* mp : bodies(c)) {
      const sir::Method& m = *mp;
      if (m.is_abstract || find_lois(p, c, m).empty()) continue;
      Candidate cand{{c.name, m.name, m.params}, 0, {}, {}};
      if (models.tree) {
        const strclf::FeatureContext ctx{c.name, nullptr};
        for (const auto& ins : m.body)
          if (ins.is_string_const() &&
              models.tree->classify(fx.extract(ins.str, ctx)) == strclf::Label::Obfuscated) {
            cand.reasons |= kObfuscatedString;
            cand.flagged.push_back(ins.str);
          }
      }
      for (const auto& ins : m.body) {
        if (ins.op != Op::Invoke || ins.kind == sir::InvokeKind::Intrinsic) continue;
        const sir::Class* owner = nullptr;
        const sir::Method* callee = sir::resolve_invoke(p, ins.method, &owner);
        if (!callee || !deob.count(callee)) continue;
        cand.reasons |= kCallsDeobfuscator;
        const std::string name = owner->name + "." + callee->name;
        if (std::find(cand.deobfuscators.begin(), cand.deobfuscators.end(), name) == cand.deobfuscators.end())
          cand.deobfuscators.push_back(name);
      }
      if (deob.count(&m)) cand.reasons |= kIsDeobfuscator;
      if (cand.reasons) out.push_back(std::move(cand));
    }
  return out;
}

namespace {

// A builder receiver is the object under construction, not a consumed value;
// string receivers (Str.len, Str.equals, ...) are consumed like arguments.
bool skips_first(const sir::Instruction& ins) {
  if (ins.kind == sir::InvokeKind::Virtual || ins.kind == sir::InvokeKind::Special) return true;
  return ins.kind == sir::InvokeKind::Intrinsic && ins.method.cls == "Builder";
}

}  // namespace

std::vector<Loi> find_lois(const sir::Program& p, const sir::Class& c, const sir::Method& m) {
  std::vector<Loi> out;
  if (m.is_abstract) return out;
  const auto types = sir::infer_types(p, c, m);
  for (int i = 0; i < static_cast<int>(m.body.size()); ++i) {
    const auto& before = types.before[static_cast<std::size_t>(i)];
    if (!before) continue;  // unreachable
    auto is_cs = [&](int r) {
      const auto& t = (*before)[static_cast<std::size_t>(r)];
      return t.is_value() && t.type.is_char_sequence();
    };
    const auto& ins = m.body[static_cast<std::size_t>(i)];
    Loi loi{i, obf::LoiKind::CallArg, {}};
    std::vector<int> candidates;
    switch (ins.op) {
      case Op::Invoke:
        candidates.assign(ins.srcs.begin() + (skips_first(ins) && !ins.srcs.empty() ? 1 : 0), ins.srcs.end());
        break;
      case Op::PutStatic:
        loi.kind = obf::LoiKind::FieldWrite;
        candidates = {ins.srcs[0]};
        break;
      case Op::PutField:
        loi.kind = obf::LoiKind::FieldWrite;
        candidates = {ins.srcs[1]};
        break;
      case Op::ArrayStore:
        loi.kind = obf::LoiKind::ArrayStore;
        candidates = {ins.srcs[2]};
        break;
      case Op::Return:
        loi.kind = obf::LoiKind::Return;
        candidates = ins.srcs;
        break;
      default:
        break;
    }
    for (const int r : candidates)
      if (is_cs(r) && std::find(loi.operands.begin(), loi.operands.end(), r) == loi.operands.end())
        loi.operands.push_back(r);
    if (!loi.operands.empty()) out.push_back(std::move(loi));
  }
  return out;
}

std::vector<Criterion> find_criteria(const sir::Method& m, const sir::DataflowIndex& dfi, const Loi& loi) {
  std::set<int> sites;
  for (const int r : loi.operands)
    for (const int d : dfi.ud(r, loi.index))
      if (m.body[static_cast<std::size_t>(d)].op != Op::Const) sites.insert(d);
  std::vector<Criterion> out;
  for (const int s : sites) out.push_back({s, loi.index});
  return out;
}

std::set<int> slice(const sir::Method& m, const sir::DataflowIndex& dfi, int loi, int s_crit) {
  (void)m;
  std::set<int> n_slice;
  std::deque<int> w{s_crit};
  const auto& cd_crit = dfi.cd(s_crit);
  auto guards_crit = [&](int i) { return std::binary_search(cd_crit.begin(), cd_crit.end(), i); };
  const auto br = dfi.br(loi);
  const std::set<int> br_loi(br.begin(), br.end());
  while (!w.empty()) {
    const int cur = w.front();
    w.pop_front();
    if (n_slice.count(cur) || cur == loi) continue;
    n_slice.insert(cur);
    // backward: definitions of everything used here
    for (const int x : dfi.use(cur))
      for (const int d : dfi.ud(x, cur)) w.push_back(d);
    for (const int c : dfi.cd(cur))
      if (!guards_crit(c)) w.push_back(c);
    // forward: later uses that may still flow into the LoI
    for (const int x : dfi.def(cur))
      for (const int u : dfi.du(x, cur))
        if (br_loi.count(u) && !guards_crit(u)) w.push_back(u);
  }
  return n_slice;
}

std::string dump_slice(const sir::Method& m, const sir::DataflowIndex& dfi, const std::set<int>& n_slice, int loi,
                       int s_crit) {
  const auto& cd_crit = dfi.cd(s_crit);
  std::string out = "// slice of " + m.name + " for criterion " + std::to_string(s_crit) + ", loi " +
                    std::to_string(loi) + "\n";
  for (int i = 0; i < static_cast<int>(m.body.size()); ++i) {
    const std::string text = std::to_string(i) + ": " + sir::serialize_instruction(m.body[static_cast<std::size_t>(i)]) + ";";
    if (n_slice.count(i)) out += "  " + text + (i == s_crit ? "  // criterion" : "") + "\n";
    else if (std::binary_search(cd_crit.begin(), cd_crit.end(), i)) out += "  // " + text + "  // cut: guard-of-criterion\n";
    else if (i == loi) out += "  // " + text + "  // loi\n";
  }
  return out;
}

}  // namespace strhound::slicer
