#include <algorithm>
#include <mutex>
#include <random>
#include <set>

#include "strhound/codec/codec.hpp"
#include "strhound/data.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/sir/builder.hpp"

namespace strhound::obf {

using sir::BodyBuilder;
using sir::InvokeKind;
using sir::Op;
using sir::SirType;

std::optional<SizeClass> parse_size_class(std::string_view s) {
  if (s == "S") return SizeClass::S;
  if (s == "M") return SizeClass::M;
  if (s == "L") return SizeClass::L;
  return std::nullopt;
}

int instruction_limit(SizeClass c) {
  switch (c) {
    case SizeClass::S: return 100;
    case SizeClass::M: return 1000;
    case SizeClass::L: return 5000;
  }
  return 100;
}

std::string_view to_string(LoiKind k) {
  switch (k) {
    case LoiKind::CallArg: return "call-arg";
    case LoiKind::FieldWrite: return "field-write";
    case LoiKind::ArrayStore: return "array-store";
    case LoiKind::Return: return "return";
  }
  return "?";
}

const std::vector<std::u16string>& phrases() {
  static const std::vector<std::u16string> list = [] {
    std::vector<std::u16string> out;
    for (const auto& line : read_lines(data_dir() / "phrases.txt", false)) out.push_back(codec::from_wtf8(line));
    return out;
  }();
  return list;
}

namespace {

const char* const kClassWords[] = {"Ad",      "Banner", "Net",   "Http",   "Config", "User",   "Session", "Cache",
                                   "Tracker", "Video",  "Push",  "Loader", "Util",   "Store",  "Login",   "Media",
                                   "Sync",    "Event",  "Pref",  "Report", "Device", "Geo",    "Offer",   "Reward"};
const char* const kClassSuffix[] = {"Manager", "Helper", "Service", "Client", "Provider", "Activity", "View", "Task"};
const char* const kVerbs[] = {"load",  "init",  "refresh", "show",  "report", "update", "handle", "process",
                              "build", "fetch", "notify",  "track", "open",   "query",  "apply",  "submit"};
const char* const kNouns[] = {"Banner", "Config", "Event", "Data", "Url", "Header", "Item", "View", "State", "Request"};
const char* const kNumeric[] = {"sum", "count", "scale", "mix", "clamp", "pick", "total", "score", "bits", "gcd"};

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  template <class T, std::size_t N>
  const T& one_of(const T (&arr)[N]) {
    return arr[static_cast<std::size_t>(pick(0, static_cast<int>(N) - 1))];
  }
  std::u16string phrase() {
    const auto& p = phrases();
    return p[static_cast<std::size_t>(pick(0, static_cast<int>(p.size()) - 1))];
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

std::string unique_name(Gen& g, std::set<std::string>& used, const std::function<std::string()>& make) {
  for (int attempt = 0;; ++attempt) {
    std::string n = make();
    if (attempt > 4) n += std::to_string(attempt);
    if (used.insert(n).second) return n;
  }
  (void)g;
}

// --- numeric helper bodies ----------------------------------------------------

// Each emitter fills a static method taking `nparams` ints and returning int.
// Default arguments (0) must lead to termination.
void emit_sum_loop(Gen& g, BodyBuilder& b) {
  const int bound = b.reg(), s = b.reg(), i = b.reg(), t = b.reg();
  const int c = b.imm(g.pick(2, 9));
  b.arith(Op::Add, SirType::int_(), bound, 0, c);
  b.const_int(s, SirType::int_(), 0);
  b.const_int(i, SirType::int_(), 0);
  const int one = b.imm(1);
  const int k = b.imm(g.pick(2, 13));
  const int loop = b.label(), done = b.label();
  b.bind(loop);
  b.branch(Op::IfGe, i, bound, done);
  b.arith(g.coin(0.5) ? Op::Mul : Op::Add, SirType::int_(), t, i, k);
  b.arith(Op::Add, SirType::int_(), s, s, t);
  b.arith(Op::Add, SirType::int_(), i, i, one);
  b.go(loop);
  b.bind(done);
  b.ret(s);
}

void emit_gcd(Gen& g, BodyBuilder& b) {
  // params r0, r1
  const int a = b.reg(), c = b.reg(), t = b.reg(), zero = b.imm(0);
  const int ka = b.imm(g.pick(12, 400)), kc = b.imm(g.pick(3, 90));
  b.arith(Op::Add, SirType::int_(), a, 0, ka);
  b.arith(Op::Add, SirType::int_(), c, 1, kc);
  const int loop = b.label(), done = b.label();
  b.bind(loop);
  b.branch(Op::IfEq, c, zero, done);
  b.arith(Op::Rem, SirType::int_(), t, a, c);
  b.move(a, c);
  b.move(c, t);
  b.go(loop);
  b.bind(done);
  b.ret(a);
}

void emit_array_max(Gen& g, BodyBuilder& b) {
  const int n = b.imm(g.pick(3, 8));
  const int arr = b.reg(), i = b.reg(), v = b.reg(), best = b.reg();
  b.new_array(SirType::int_(), arr, n);
  const int one = b.imm(1), k = b.imm(g.pick(3, 31)), m = b.imm(g.pick(1, 255));
  b.const_int(i, SirType::int_(), 0);
  const int fill = b.label(), scan = b.label(), next = b.label(), done = b.label();
  b.bind(fill);
  const int filled = b.label();
  b.branch(Op::IfGe, i, n, filled);
  b.arith(Op::Mul, SirType::int_(), v, i, k);
  b.arith(Op::Xor, SirType::int_(), v, v, m);
  b.arith(Op::Add, SirType::int_(), v, v, 0);
  b.aput(arr, i, v);
  b.arith(Op::Add, SirType::int_(), i, i, one);
  b.go(fill);
  b.bind(filled);
  b.const_int(best, SirType::int_(), -1);
  b.const_int(i, SirType::int_(), 0);
  b.bind(scan);
  b.branch(Op::IfGe, i, n, done);
  b.aget(v, arr, i);
  b.branch(Op::IfLe, v, best, next);
  b.move(best, v);
  b.bind(next);
  b.arith(Op::Add, SirType::int_(), i, i, one);
  b.go(scan);
  b.bind(done);
  b.ret(best);
}

void emit_dispatch(Gen& g, BodyBuilder& b) {
  const int four = b.imm(4), key = b.reg(), r = b.reg();
  b.arith(Op::Rem, SirType::int_(), key, 0, four);
  const int c0 = b.label(), c1 = b.label(), c2 = b.label(), dflt = b.label();
  b.switch_(key, {{0, c0}, {1, c1}, {2, c2}}, dflt);
  for (const int l : {c0, c1, c2, dflt}) {
    b.bind(l);
    b.const_int(r, SirType::int_(), g.pick(-50, 500));
    b.ret(r);
  }
}

void emit_bits(Gen& g, BodyBuilder& b) {
  const int x = b.reg(), cnt = b.reg(), t = b.reg();
  const int k = b.imm(g.pick(1, 1 << 20));
  b.arith(Op::Add, SirType::int_(), x, 0, k);
  const int zero = b.imm(0), one = b.imm(1);
  b.const_int(cnt, SirType::int_(), 0);
  const int loop = b.label(), done = b.label();
  b.bind(loop);
  b.branch(Op::IfEq, x, zero, done);
  b.arith(Op::And, SirType::int_(), t, x, one);
  b.arith(Op::Add, SirType::int_(), cnt, cnt, t);
  b.arith(Op::Ushr, SirType::int_(), x, x, one);
  b.go(loop);
  b.bind(done);
  b.ret(cnt);
}

void emit_clamp(Gen& g, BodyBuilder& b) {
  // params r0, r1
  const int lo = b.imm(g.pick(-10, 0)), hi = b.imm(g.pick(10, 100)), v = b.reg();
  b.arith(Op::Add, SirType::int_(), v, 0, 1);
  const int below = b.label(), above = b.label();
  b.branch(Op::IfLt, v, lo, below);
  b.branch(Op::IfGt, v, hi, above);
  b.ret(v);
  b.bind(below);
  b.ret(lo);
  b.bind(above);
  b.ret(hi);
}

void emit_checksum(Gen& g, BodyBuilder& b) {
  // Byte-array manipulation in ordinary code (a known source of noise for
  // method classification).
  const int n = b.imm(g.pick(4, 12));
  const int arr = b.reg(), i = b.reg(), v = b.reg(), s = b.reg();
  b.new_array(SirType::byte_(), arr, n);
  const int one = b.imm(1), mask = b.imm(255), k = b.imm(g.pick(3, 97));
  b.const_int(i, SirType::int_(), 0);
  const int fill = b.label(), sum = b.label(), done = b.label(), filled = b.label();
  b.bind(fill);
  b.branch(Op::IfGe, i, n, filled);
  b.arith(Op::Mul, SirType::int_(), v, i, k);
  b.conv(SirType::byte_(), v, v);
  b.aput(arr, i, v);
  b.arith(Op::Add, SirType::int_(), i, i, one);
  b.go(fill);
  b.bind(filled);
  b.const_int(s, SirType::int_(), 0);
  b.const_int(i, SirType::int_(), 0);
  b.bind(sum);
  b.branch(Op::IfGe, i, n, done);
  b.aget(v, arr, i);
  b.arith(Op::And, SirType::int_(), v, v, mask);
  b.arith(Op::Add, SirType::int_(), s, s, v);
  b.arith(Op::Add, SirType::int_(), i, i, one);
  b.go(sum);
  b.bind(done);
  b.arith(Op::Add, SirType::int_(), s, s, 0);
  b.ret(s);
}

void emit_long_mix(Gen& g, BodyBuilder& b) {
  const int a = b.reg(), c = b.reg(), r = b.reg();
  b.conv(SirType::long_(), a, 0);
  const int k = b.imm(g.pick(1000, 1 << 30), SirType::long_());
  const int sh = b.imm(g.pick(1, 15));
  b.arith(Op::Mul, SirType::long_(), c, a, k);
  b.arith(Op::Shr, SirType::long_(), c, c, sh);
  b.arith(Op::Xor, SirType::long_(), c, c, k);
  b.conv(SirType::int_(), r, c);
  b.ret(r);
}

struct NumericKind {
  void (*emit)(Gen&, BodyBuilder&);
  int params;
};
constexpr NumericKind kNumericKinds[] = {
    {emit_sum_loop, 1}, {emit_gcd, 2},      {emit_array_max, 1}, {emit_dispatch, 1},
    {emit_bits, 1},     {emit_clamp, 2},    {emit_checksum, 1},  {emit_long_mix, 1},
};

sir::Method numeric_method(Gen& g, const std::string& name) {
  const NumericKind& k = kNumericKinds[static_cast<std::size_t>(g.pick(0, std::size(kNumericKinds) - 1))];
  sir::Method m;
  m.name = name;
  m.is_static = true;
  m.params.assign(static_cast<std::size_t>(k.params), SirType::int_());
  m.return_type = SirType::int_();
  BodyBuilder b(k.params);
  k.emit(g, b);
  m.body = b.finish(0);
  m.register_count = b.next_reg();
  return m;
}

// --- program generator ------------------------------------------------------

struct ClassPlan {
  sir::Class cls;
  std::set<std::string> names;
  std::vector<std::string> numeric;  // helper names callable from sites
  int string_field_count = 0;
  int instance_field_count = 0;
  bool has_use = false;
};

class ProgramGen {
 public:
  ProgramGen(std::uint64_t seed, SizeClass size) : g_(seed), limit_(instruction_limit(size)), size_(size) {}

  PlainProgram run(std::uint64_t seed) {
    PlainProgram out;
    out.id = "p" + std::to_string(seed);
    const int max_classes = size_ == SizeClass::S ? 2 : 8;
    const int want_classes = g_.pick(1, max_classes);
    std::set<std::string> class_names;
    for (int c = 0; c < want_classes; ++c) {
      if (c > 0 && total_ + 40 > limit_) break;
      ClassPlan plan;
      plan.cls.name = unique_name(g_, class_names, [&] {
        return std::string(g_.one_of(kClassWords)) + g_.one_of(kClassSuffix);
      });
      plan.cls.is_abstract = size_ != SizeClass::S && g_.coin(0.15);
      fill_class(plan, out);
      out.program.classes.push_back(std::move(plan.cls));
    }
    for (const auto& e : entries_) out.program.entry_points.push_back(e);
    out.strings = std::move(strings_);
    return out;
  }

 private:
  void add_method(ClassPlan& plan, sir::Method m) {
    total_ += static_cast<int>(m.body.size());
    plan.cls.methods.push_back(std::move(m));
  }

  void fill_class(ClassPlan& plan, PlainProgram& out) {
    (void)out;
    if (plan.cls.is_abstract) {
      sir::Method a;
      a.name = unique_name(g_, plan.names, [&] { return std::string("on") + g_.one_of(kNouns); });
      a.params = {SirType::int_()};
      a.return_type = SirType::int_();
      a.is_abstract = true;
      plan.cls.methods.push_back(std::move(a));
    }
    const int helpers = size_ == SizeClass::S ? g_.pick(0, 1) : g_.pick(1, 3);
    for (int h = 0; h < helpers && total_ + 30 < limit_; ++h) {
      const std::string n = unique_name(g_, plan.names, [&] { return std::string(g_.one_of(kNumeric)) + g_.one_of(kNouns); });
      add_method(plan, numeric_method(g_, n));
      plan.numeric.push_back(n);
    }
    const int max_sites = size_ == SizeClass::S ? 2 : (size_ == SizeClass::M ? 5 : 12);
    const int sites = g_.pick(1, max_sites);
    for (int s = 0; s < sites; ++s) {
      if (s > 0 && total_ + 25 > limit_) break;
      site_method(plan);
    }
  }

  std::string ensure_use(ClassPlan& plan) {
    if (!plan.has_use) {
      sir::Method u;
      u.name = "use";
      plan.names.insert("use");
      u.is_static = true;
      u.params = {SirType::string()};
      u.register_count = 1;
      BodyBuilder b(1);
      b.ret();
      u.body = b.finish(0);
      add_method(plan, std::move(u));
      plan.has_use = true;
    }
    return "use";
  }

  void site_method(ClassPlan& plan) {
    sir::Method m;
    m.name = unique_name(g_, plan.names, [&] { return std::string(g_.one_of(kVerbs)) + g_.one_of(kNouns); });
    m.is_static = plan.cls.is_abstract || g_.coin(0.6);
    const bool int_param = g_.coin(0.6);
    if (int_param) m.params.push_back(SirType::int_());
    const bool returns_string = g_.coin(0.2);
    m.return_type = returns_string ? SirType::string() : SirType::void_();
    const int argc = m.arg_register_count();
    const int pidx = m.is_static ? 0 : 1;
    BodyBuilder b(argc);
    std::vector<EmbeddedString> found;

    // Numeric prelude, sometimes calling a helper.
    const int acc = b.reg();
    b.const_int(acc, SirType::int_(), g_.pick(0, 64));
    if (!plan.numeric.empty() && g_.coin(0.6)) {
      const std::string& h = plan.numeric[static_cast<std::size_t>(g_.pick(0, static_cast<int>(plan.numeric.size()) - 1))];
      const sir::Method* hm = plan.cls.find_method(h);
      std::vector<int> args;
      for (std::size_t k = 0; k < hm->params.size(); ++k) args.push_back(b.imm(g_.pick(0, 20)));
      b.invoke(InvokeKind::Static, plan.cls.name, h, hm->params, args, acc);
    }

    const int sinks = g_.pick(1, size_ == SizeClass::S ? 2 : 3);
    for (int k = 0; k < sinks; ++k) {
      int skip = -1;
      if (int_param && g_.coin(0.3)) {
        skip = b.label();
        const int c = b.imm(g_.pick(1, 9));
        b.branch(Op::IfGe, pidx, c, skip);
      }
      if (g_.coin(0.3)) {
        const int t = b.reg(), c = b.imm(g_.pick(1, 9));
        b.arith(g_.coin(0.5) ? Op::Add : Op::Mul, SirType::int_(), t, acc, c);
        b.move(acc, t);
      }
      EmbeddedString e;
      e.text = g_.phrase();
      e.cls = plan.cls.name;
      e.method = m.name;
      const int rs = b.reg();
      e.const_index = b.size();
      b.const_str(rs, e.text);
      const int choice = g_.pick(0, 9);
      if (choice <= 3) {
        e.kind = LoiKind::CallArg;
        e.loi_index = b.size();
        if (choice == 0) b.intrinsic("Sys.out", {rs});
        else if (choice == 1) {
          const int n = b.reg();
          e.loi_index = b.size();
          b.intrinsic("Str.len", {rs}, n);
          b.arith(Op::Add, SirType::int_(), acc, acc, n);
        } else {
          const std::string u = ensure_use(plan);
          e.loi_index = b.size();
          b.invoke(InvokeKind::Static, plan.cls.name, u, {SirType::string()}, {rs});
        }
      } else if (choice <= 6) {
        e.kind = LoiKind::FieldWrite;
        const std::string f = "s" + std::to_string(plan.string_field_count++);
        if (!m.is_static && g_.coin(0.5)) {
          plan.cls.instance_fields.push_back({f, SirType::string()});
          e.loi_index = b.size();
          e.operand = 1;
          b.iput(0, plan.cls.name, f, rs);
        } else {
          plan.cls.static_fields.push_back({f, SirType::string()});
          e.loi_index = b.size();
          b.sput(plan.cls.name, f, rs);
        }
      } else {
        e.kind = LoiKind::ArrayStore;
        const int n = b.imm(g_.pick(1, 4)), arr = b.reg(), idx = b.imm(0);
        b.new_array(SirType::string(), arr, n);
        e.loi_index = b.size();
        e.operand = 2;
        b.aput(arr, idx, rs);
      }
      found.push_back(std::move(e));
      if (skip >= 0) b.bind(skip);
    }
    if (returns_string) {
      EmbeddedString e;
      e.text = g_.phrase();
      e.cls = plan.cls.name;
      e.method = m.name;
      e.kind = LoiKind::Return;
      const int rs = b.reg();
      e.const_index = b.size();
      b.const_str(rs, e.text);
      e.loi_index = b.size();
      b.ret(rs);
      found.push_back(std::move(e));
    } else {
      b.ret();
    }
    m.body = b.finish(0);
    m.register_count = b.next_reg();
    for (auto& e : found) strings_.push_back(std::move(e));
    entries_.push_back({plan.cls.name, m.name});
    add_method(plan, std::move(m));
  }

  Gen g_;
  int limit_;
  SizeClass size_;
  int total_ = 0;
  std::vector<EmbeddedString> strings_;
  std::vector<sir::EntryPoint> entries_;
};

}  // namespace

PlainProgram generate_plain_program(std::uint64_t seed, SizeClass size) {
  ProgramGen gen(seed * 0x9E3779B97F4A7C15ULL + 1, size);
  return gen.run(seed);
}

std::vector<sir::Method> generate_plain_methods(std::uint64_t seed, int count) {
  Gen g(seed ^ 0x5bd1e995ULL);
  std::vector<sir::Method> out;
  for (int i = 0; i < count; ++i) out.push_back(numeric_method(g, std::string(g.one_of(kNumeric)) + std::to_string(i)));
  return out;
}

}  // namespace strhound::obf
