#include <map>

#include "strhound/codec/codec.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/sir/builder.hpp"
#include "strhound/sir/typecheck.hpp"

namespace strhound::obf {

namespace {

struct Watch {
  vm::Site site;
  int operand = 0;
};

// Per entry point: the ordered strings seen at the watched sites, tagged with
// the watch index.
using Trace = std::vector<std::pair<std::size_t, std::optional<std::u16string>>>;

std::vector<Trace> trace(const sir::Program& p, const std::vector<Watch>& watches, vm::Limits limits,
                         std::vector<std::string>* problems) {
  std::map<vm::Site, std::vector<std::size_t>> by_site;
  for (std::size_t k = 0; k < watches.size(); ++k) by_site[watches[k].site].push_back(k);
  std::vector<Trace> out;
  for (const auto& ep : p.entry_points) {
    vm::Vm machine(p, limits);
    Trace t;
    for (const auto& [site, ks] : by_site) machine.watch(site);
    machine.set_hook([&](const vm::Site& s, const std::vector<vm::Value>& regs) {
      const auto it = by_site.find(s);
      if (it == by_site.end()) return;
      const sir::Method* m = sir::find_method(p, {s.cls, s.method, s.params});
      const auto& ins = m->body[static_cast<std::size_t>(s.index)];
      for (const std::size_t k : it->second) {
        const int reg = ins.srcs.at(static_cast<std::size_t>(watches[k].operand));
        const auto* str = regs[static_cast<std::size_t>(reg)].as_string();
        t.emplace_back(k, str ? std::optional<std::u16string>(*str) : std::nullopt);
      }
    });
    const vm::Outcome o = machine.run(ep.cls, ep.method);
    if (o.status != vm::Status::Completed && problems)
      problems->push_back(ep.cls + "." + ep.method + ": " + std::string(vm::to_string(o.status)) + " " + o.message);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Watch> watches_for(const sir::Program& p, const Manifest& m) {
  std::vector<Watch> w;
  for (const auto& e : m.entries) {
    const sir::Class* c = p.find_class(e.cls);
    const sir::Method* meth = c ? c->find_method(e.method) : nullptr;
    if (!meth) throw std::invalid_argument("manifest names missing method " + e.cls + "." + e.method);
    w.push_back({{e.cls, e.method, meth->params, e.loi}, e.operand});
  }
  return w;
}

std::string show(const std::optional<std::u16string>& s) { return s ? "\"" + codec::to_wtf8(*s) + "\"" : "null"; }

}  // namespace

std::vector<std::optional<std::u16string>> observe_lois(const sir::Program& p, const Manifest& m, vm::Limits limits) {
  std::vector<std::optional<std::u16string>> seen(m.entries.size());
  for (const auto& t : trace(p, watches_for(p, m), limits, nullptr))
    for (const auto& [k, s] : t)
      if (!seen[k]) seen[k] = s;
  return seen;
}

DiffReport differential_check(const PlainProgram& plain, const Obfuscated& obf, vm::Limits limits) {
  DiffReport r;
  // Watches on the plain program sit at the original LoIs.
  std::vector<Watch> pw;
  for (const auto& e : plain.strings) {
    const sir::Method* m = plain.program.find_class(e.cls)->find_method(e.method);
    pw.push_back({{e.cls, e.method, m->params, e.loi_index}, e.operand});
  }
  const std::vector<Watch> ow = watches_for(obf.program, obf.manifest);
  if (pw.size() != ow.size()) {
    r.problems.push_back("manifest size differs from embedded string count");
    r.mismatched = 1;
    return r;
  }
  const auto pt = trace(plain.program, pw, limits, &r.problems);
  const auto ot = trace(obf.program, ow, limits, &r.problems);
  std::vector<char> reached(ow.size(), 0);
  for (std::size_t ep = 0; ep < pt.size() && ep < ot.size(); ++ep) {
    const auto& a = pt[ep];
    const auto& b = ot[ep];
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      ++r.checked;
      if (i >= a.size() || i >= b.size() || a[i] != b[i]) {
        ++r.mismatched;
        const std::string where = obf.program.entry_points[ep].cls + "." + obf.program.entry_points[ep].method;
        r.problems.push_back(where + " observation " + std::to_string(i) + ": plain " +
                             (i < a.size() ? show(a[i].second) : "-") + " vs obfuscated " +
                             (i < b.size() ? show(b[i].second) : "-"));
        continue;
      }
      reached[b[i].first] = 1;
      const auto& e = obf.manifest.entries[b[i].first];
      if (b[i].second != e.plaintext) {
        ++r.mismatched;
        r.problems.push_back("manifest plaintext differs at " + e.cls + "." + e.method + "@" + std::to_string(e.loi));
      }
    }
  }
  for (std::size_t k = 0; k < reached.size(); ++k)
    if (!reached[k]) {
      ++r.mismatched;
      const auto& e = obf.manifest.entries[k];
      r.problems.push_back("LoI never reached: " + e.cls + "." + e.method + "@" + std::to_string(e.loi));
    }
  return r;
}

bool inject_infinite_loop(Obfuscated& obf, std::size_t entry) {
  ManifestEntry& me = obf.manifest.entries.at(entry);
  if (me.skipped || me.value_def < 0) return false;
  sir::Class* c = obf.program.find_class(me.cls);
  sir::Method* m = c ? c->find_method(me.method) : nullptr;
  if (!m) return false;
  const sir::Instruction& def = m->body[static_cast<std::size_t>(me.value_def)];
  if (def.srcs.empty()) return false;
  const int rx = def.srcs[0];
  // A loop whose exit test never succeeds, redefining an operand of the
  // value definition so the loop lands in its slice.
  sir::BodyBuilder b(m->register_count);
  const int rz = b.reg(), ro = b.reg();
  const int top = b.label(), body = b.label(), out = b.label();
  b.const_int(rz, sir::SirType::int_(), 0);
  b.bind(top);
  b.const_int(ro, sir::SirType::int_(), 1);
  b.branch(sir::Op::IfLt, rz, ro, body);
  b.go(out);
  b.bind(body);
  b.move(rx, rx);
  b.go(top);
  b.bind(out);
  const auto frag = b.finish(0);
  const int k = me.value_def;
  sir::insert_before(*m, k, frag);
  m->register_count = b.next_reg();
  const int extra = static_cast<int>(frag.size());
  for (auto& e : obf.manifest.entries) {
    if (e.cls != me.cls || e.method != me.method) continue;
    if (e.loi >= k) e.loi += extra;
    if (e.value_def >= k) e.value_def += extra;
  }
  sir::typecheck(obf.program);
  return true;
}

}  // namespace strhound::obf
