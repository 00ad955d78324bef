#include "strhound/harness/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <tuple>

#include "strhound/codec/codec.hpp"
#include "strhound/sir/builder.hpp"
#include "strhound/sir/typecheck.hpp"

namespace strhound::harness {

using sir::Instruction;
using sir::Op;
using sir::SirType;

namespace {

Instruction jump(int target) {
  Instruction i;
  i.op = Op::Goto;
  i.target = target;
  return i;
}

void default_return(sir::BodyBuilder& b, const SirType& t) {
  if (t.is_void()) return b.ret();
  const int r = b.reg();
  if (t.is_reference()) b.const_null(r);
  else b.const_int(r, t, 0);
  b.ret(r);
}

void default_value(sir::BodyBuilder& b, int r, const sir::RegType& t) {
  if (t.kind == sir::RegType::Kind::Null || t.type.is_reference()) b.const_null(r);
  else b.const_int(r, t.type, 0);
}

// Puts `front` before the body; every branch keeps its old destination.
void prepend(sir::Method& m, std::vector<Instruction> front) {
  const int k = static_cast<int>(front.size());
  for (auto& ins : m.body) {
    if (ins.target >= 0) ins.target += k;
    for (auto& c : ins.cases) c.target += k;
  }
  m.body.insert(m.body.begin(), front.begin(), front.end());
}

// Path from `from` to `to` that does not pass through `avoid`; a guard's
// successor that only gets back to the criterion around a loop would keep
// the rewritten guard spinning.
bool reaches_avoiding(const sir::Cfg& g, int from, int to, int avoid) {
  std::vector<char> seen(static_cast<std::size_t>(g.instruction_count()), 0);
  std::vector<int> stack{from};
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (x == to) return true;
    if (x == avoid || seen[static_cast<std::size_t>(x)]) continue;
    seen[static_cast<std::size_t>(x)] = 1;
    for (const int y : g.instruction_succs(x)) stack.push_back(y);
  }
  return false;
}

std::string wrap(const std::u16string& s) { return codec::b64_encode(codec::to_bytes(codec::to_wtf8(s))); }
std::u16string unwrap(const std::string& s) { return codec::from_wtf8(codec::to_string(codec::b64_decode(s))); }

}  // namespace

ExecutableSlice build_executable(const sir::Program& p, const sir::Class& c, const sir::Method& m,
                                 const sir::DataflowIndex& dfi, const std::set<int>& n_slice, int loi, int s_crit) {
  const sir::Cfg& g = dfi.cfg();
  const auto& cd_crit = dfi.cd(s_crit);
  const auto types = sir::infer_types(p, c, m);
  const int n = static_cast<int>(m.body.size());

  // The LoI operand the criterion's value arrives in.
  const auto& at_loi = m.body[static_cast<std::size_t>(loi)];
  int logged = m.body[static_cast<std::size_t>(s_crit)].dst;
  for (const int r : at_loi.srcs) {
    const auto& defs = dfi.ud(r, loi);
    if (std::binary_search(defs.begin(), defs.end(), s_crit)) {
      logged = r;
      break;
    }
  }

  sir::BodyBuilder tail(m.register_count);
  const auto& loi_types = types.before[static_cast<std::size_t>(loi)];
  if (loi_types && (*loi_types)[static_cast<std::size_t>(logged)].type.is_builder()) {
    const int s = tail.reg();
    tail.intrinsic("Builder.toString", {logged}, s);
    logged = s;
  }
  tail.intrinsic("Log.record", {logged});
  const int ret_at = n + tail.size();
  default_return(tail, m.return_type);

  ExecutableSlice es;
  es.cls = c.name;
  es.loi = loi;
  es.criterion = s_crit;
  es.method = m;
  auto& body = es.method.body;
  for (int i = 0; i < n; ++i) {
    const Instruction& ins = m.body[static_cast<std::size_t>(i)];
    Instruction& out = body[static_cast<std::size_t>(i)];
    if (i == loi) {
      out = jump(n);
    } else if (n_slice.count(i) || ins.op == Op::Goto) {
      continue;
    } else if (std::binary_search(cd_crit.begin(), cd_crit.end(), i)) {
      // Guard of the criterion: always take the way to it.
      int to = -1;
      for (const int s : g.instruction_succs(i))
        if (reaches_avoiding(g, s, s_crit, i)) {
          to = s;
          break;
        }
      out = jump(to >= 0 ? to : ret_at);
    } else if (sir::is_cond_branch(ins.op) || ins.op == Op::Switch) {
      const int ip = g.ipdom()[static_cast<std::size_t>(g.block_of(i))];
      out = jump(ip == g.exit() ? ret_at : g.block(ip).first);
    } else if (ins.op == Op::Return) {
      out = jump(ret_at);
    } else {
      out = jump(i + 1);
    }
  }
  const auto appended = tail.finish(n);
  body.insert(body.end(), appended.begin(), appended.end());
  es.method.register_count = tail.next_reg();

  // Registers read before any kept definition on some path get defaults.
  const auto now = sir::infer_types(p, c, es.method);
  std::map<int, sir::RegType> seed;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (!now.before[i]) continue;
    const auto& orig = i < static_cast<std::size_t>(n) ? types.before[i] : loi_types;
    for (const int r : body[i].srcs) {
      if ((*now.before[i])[static_cast<std::size_t>(r)].usable() || seed.count(r)) continue;
      if (orig && r < static_cast<int>(orig->size()) && (*orig)[static_cast<std::size_t>(r)].usable())
        seed[r] = (*orig)[static_cast<std::size_t>(r)];
    }
  }
  if (!seed.empty()) {
    sir::BodyBuilder pro(es.method.register_count);
    for (const auto& [r, t] : seed) {
      default_value(pro, r, t);
      es.seeded.push_back(r);
    }
    prepend(es.method, pro.finish(0));
  }
  return es;
}

sir::Program inject_context(const sir::Program& p, const ExecutableSlice& es) {
  sir::Program out = p;
  sir::Class* c = out.find_class(es.cls);
  if (!c) throw std::invalid_argument("no class " + es.cls);
  sir::Method* host = c->find_method(es.method.name, &es.method.params);
  if (!host) throw std::invalid_argument("no method " + es.cls + "." + es.method.signature());
  *host = es.method;
  if (c->is_abstract) {
    c->is_abstract = false;
    for (auto& m : c->methods) {
      if (!m.is_abstract) continue;
      m.is_abstract = false;
      sir::BodyBuilder b(m.arg_register_count());
      default_return(b, m.return_type);
      m.body = b.finish(0);
      m.register_count = b.next_reg();
    }
  }
  return out;
}

SliceResult run_slice(const sir::Program& injected, const ExecutableSlice& es, const Budgets& budgets,
                      std::stop_token stop) {
  SliceResult r;
  r.cls = es.cls;
  r.method = es.method.name;
  r.signature = es.method.signature();
  r.loi = es.loi;
  r.criterion = es.criterion;
  r.seeded = es.seeded;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const sir::Class* c = injected.find_class(es.cls);
    sir::check_method(injected, *c, *c->find_method(es.method.name, &es.method.params));
    vm::Vm machine(injected, budgets.limits);
    r.outcome = machine.run(es.cls, es.method.name, {}, &es.method.params, stop);
  } catch (const sir::TypeError& e) {
    r.outcome.status = vm::Status::Fault;
    r.outcome.fault = vm::FaultKind::BadEntry;
    r.outcome.message = std::string("rebuilt slice does not type-check: ") + e.what();
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  r.recovered = r.outcome.logged;
  return r;
}

ProgramAnalysis deobfuscate_program(const sir::Program& p, const slicer::Models& models, const AnalysisOptions& opts) {
  ProgramAnalysis a;
  a.candidates = slicer::find_candidate_methods(p, models);
  const sir::StreamSummary streams(p);

  struct Job {
    ExecutableSlice es;
    unsigned reasons;
  };
  std::vector<Job> jobs;
  for (const auto& cand : a.candidates) {
    const sir::Class* c = p.find_class(cand.id.cls);
    const sir::Method* m = c->find_method(cand.id.name, &cand.id.params);
    const sir::Cfg g(*m);
    const sir::DataflowIndex dfi(*m, g, &streams);
    for (const auto& loi : slicer::find_lois(p, *c, *m)) {
      ++a.lois;
      for (const auto& crit : slicer::find_criteria(*m, dfi, loi)) {
        ++a.criteria;
        const auto n_slice = slicer::slice(*m, dfi, loi.index, crit.index);
        jobs.push_back({build_executable(p, *c, *m, dfi, n_slice, loi.index, crit.index), cand.reasons});
      }
    }
  }
  std::stable_sort(jobs.begin(), jobs.end(), [](const Job& x, const Job& y) {
    return std::tuple(x.es.cls, x.es.method.name, x.es.method.signature(), x.es.loi, x.es.criterion) <
           std::tuple(y.es.cls, y.es.method.name, y.es.method.signature(), y.es.loi, y.es.criterion);
  });

  // Bounded pool; each worker owns its VM. The watchdog stops runs that
  // overstay the wall budget plus grace, in case a single step runs long.
  a.slices.resize(jobs.size());
  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(jobs.size())));
  struct Slot {
    std::mutex mu;
    std::optional<std::chrono::steady_clock::time_point> deadline;
    std::stop_source source;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(workers));
  std::atomic<std::size_t> next{0};
  const auto wall = opts.budgets.limits.wall;
  {
    std::jthread watchdog([&](std::stop_token st) {
      while (!st.stop_requested()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        const auto now = std::chrono::steady_clock::now();
        for (auto& s : slots) {
          std::lock_guard lock(s.mu);
          if (s.deadline && now > *s.deadline) s.source.request_stop();
        }
      }
    });
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        Slot& slot = slots[static_cast<std::size_t>(w)];
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          std::stop_token token;
          {
            std::lock_guard lock(slot.mu);
            slot.source = std::stop_source();
            token = slot.source.get_token();
            if (wall.count() > 0) slot.deadline = std::chrono::steady_clock::now() + wall + opts.budgets.grace;
          }
          const auto injected = inject_context(p, jobs[i].es);
          a.slices[i] = run_slice(injected, jobs[i].es, opts.budgets, token);
          a.slices[i].reasons = jobs[i].reasons;
          std::lock_guard lock(slot.mu);
          slot.deadline.reset();
        }
      });
    pool.clear();  // joins
  }

  std::set<std::u16string> constants;
  if (opts.exclude_constants)
    for (const auto& c : p.classes) {
      auto scan = [&](const sir::Method& m) {
        for (const auto& ins : m.body)
          if (ins.is_string_const()) constants.insert(ins.str);
      };
      for (const auto& m : c.methods) scan(m);
      if (c.static_init) scan(*c.static_init);
    }
  std::set<std::tuple<std::u16string, std::string, std::string, int>> seen;
  for (const auto& r : a.slices)
    for (const auto& s : r.recovered) {
      if (constants.count(s)) continue;
      if (seen.emplace(s, r.cls, r.method, r.loi).second) a.findings.push_back({s, r.cls, r.method, r.loi});
    }
  return a;
}

nlohmann::json to_json(const SliceResult& r) {
  nlohmann::json rec = nlohmann::json::array();
  for (const auto& s : r.recovered) rec.push_back(wrap(s));
  nlohmann::json j = {{"class", r.cls},
                      {"method", r.method},
                      {"signature", r.signature},
                      {"loi", r.loi},
                      {"criterion", r.criterion},
                      {"reasons", slicer::reasons_to_string(r.reasons)},
                      {"status", std::string(vm::to_string(r.outcome.status))},
                      {"recovered_b64", rec},
                      {"wall_ms", r.wall_ms},
                      {"steps", r.outcome.steps},
                      {"seeded", r.seeded}};
  if (r.outcome.fault) {
    j["fault"] = std::string(vm::to_string(*r.outcome.fault));
    j["fault_site"] = r.outcome.fault_site;
  }
  if (!r.outcome.message.empty()) j["message"] = r.outcome.message;
  return j;
}

SliceResult slice_result_from_json(const nlohmann::json& j) {
  SliceResult r;
  r.cls = j.at("class").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.signature = j.value("signature", "");
  r.loi = j.at("loi").get<int>();
  r.criterion = j.at("criterion").get<int>();
  const std::string reasons = j.value("reasons", "");
  std::size_t from = 0;
  while (from < reasons.size()) {
    const auto to = std::min(reasons.find(',', from), reasons.size());
    const std::string part = reasons.substr(from, to - from);
    if (part == "i") r.reasons |= slicer::kObfuscatedString;
    else if (part == "ii") r.reasons |= slicer::kCallsDeobfuscator;
    else if (part == "iii") r.reasons |= slicer::kIsDeobfuscator;
    from = to + 1;
  }
  const std::string status = j.at("status").get<std::string>();
  bool known = false;
  for (const auto s : {vm::Status::Completed, vm::Status::Fault, vm::Status::Timeout, vm::Status::StepBudgetExhausted})
    if (vm::to_string(s) == status) {
      r.outcome.status = s;
      known = true;
    }
  if (!known) throw std::runtime_error("unknown status " + status);
  if (j.contains("fault")) {
    const std::string f = j["fault"].get<std::string>();
    for (int k = 0; k <= static_cast<int>(vm::FaultKind::BadEntry); ++k)
      if (vm::to_string(static_cast<vm::FaultKind>(k)) == f) r.outcome.fault = static_cast<vm::FaultKind>(k);
    r.outcome.fault_site = j.value("fault_site", "");
  }
  r.outcome.message = j.value("message", "");
  for (const auto& s : j.at("recovered_b64")) r.recovered.push_back(unwrap(s.get<std::string>()));
  r.outcome.logged = r.recovered;
  r.wall_ms = j.value("wall_ms", 0.0);
  r.outcome.steps = j.value("steps", std::uint64_t{0});
  r.seeded = j.value("seeded", std::vector<int>{});
  return r;
}

void write_results(const std::filesystem::path& dir, const std::string& program_id, const ProgramAnalysis& a) {
  std::filesystem::create_directories(dir);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : a.slices) arr.push_back(to_json(r));
  std::ofstream out(dir / (program_id + ".json"));
  if (!out) throw std::runtime_error("cannot write results for " + program_id);
  out << arr.dump(1) << '\n';
}

std::vector<SliceResult> read_results(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  const auto j = nlohmann::json::parse(in);
  std::vector<SliceResult> out;
  for (const auto& e : j) out.push_back(slice_result_from_json(e));
  return out;
}

}  // namespace strhound::harness
