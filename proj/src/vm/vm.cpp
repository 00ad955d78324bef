#include "strhound/vm/vm.hpp"

#include <algorithm>
#include <limits>

#include "strhound/codec/codec.hpp"
#include "strhound/sir/typecheck.hpp"

namespace strhound::vm {

using sir::Instruction;
using sir::IntrinsicId;
using sir::Op;
using sir::SirType;
using sir::TypeKind;

namespace {

constexpr std::size_t kMaxDepth = 1024;
constexpr std::size_t kMaxLength = std::size_t{1} << 24;
constexpr std::uint64_t kMaxAllocation = std::uint64_t{1} << 30;

std::int32_t wrap32(std::int64_t x) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(x)); }

}  // namespace

Object* Value::as_object() const {
  auto* p = std::get_if<std::shared_ptr<Object>>(&v);
  return p ? p->get() : nullptr;
}

Builder* Value::as_builder() const {
  auto* p = std::get_if<std::shared_ptr<Builder>>(&v);
  return p ? p->get() : nullptr;
}

Value default_value(const SirType& t) {
  if (t.is_primitive()) return Value::of_int(0);
  return Value::null();
}

std::int64_t normalize(const SirType& t, std::int64_t x) {
  if (t.is_array()) return x;
  switch (t.base()) {
    case TypeKind::Int: return wrap32(x);
    case TypeKind::Byte: return static_cast<std::int8_t>(static_cast<std::uint8_t>(x));
    case TypeKind::Char: return static_cast<std::uint16_t>(x);
    case TypeKind::Bool: return x != 0 ? 1 : 0;
    default: return x;
  }
}

Value make_byte_array(const std::vector<std::uint8_t>& b) {
  auto a = std::make_shared<Array>();
  a->elem = SirType::byte_();
  a->items.reserve(b.size());
  for (const auto x : b) a->items.push_back(Value::of_int(static_cast<std::int8_t>(x)));
  return Value::of_array(std::move(a));
}

std::vector<std::uint8_t> byte_array_bytes(const Array& a) {
  std::vector<std::uint8_t> out;
  out.reserve(a.items.size());
  for (const auto& v : a.items) out.push_back(static_cast<std::uint8_t>(v.as_int()));
  return out;
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Completed: return "completed";
    case Status::Fault: return "fault";
    case Status::Timeout: return "timeout";
    case Status::StepBudgetExhausted: return "step-budget-exhausted";
  }
  return "?";
}

std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::DivideByZero: return "divide-by-zero";
    case FaultKind::IndexOutOfBounds: return "index-out-of-bounds";
    case FaultKind::NullPointer: return "null-pointer";
    case FaultKind::NegativeArraySize: return "negative-array-size";
    case FaultKind::Codec: return "codec";
    case FaultKind::Cipher: return "cipher";
    case FaultKind::StackOverflow: return "stack-overflow";
    case FaultKind::OutOfMemory: return "out-of-memory";
    case FaultKind::BadEntry: return "bad-entry";
  }
  return "?";
}

struct Vm::Fault {
  FaultKind kind;
  std::string message;
};

struct Vm::Halt {
  Status status;
};

struct Vm::MethodInfo {
  const sir::Class* cls = nullptr;
  std::vector<int> intrinsic;                 // IntrinsicId or -1
  std::vector<const sir::Method*> target;     // statically resolved callee
  std::vector<const sir::Class*> target_cls;  // its declaring class
  std::vector<SirType> ext_ret;               // return type for external calls
  std::vector<char> watched;
};

Vm::Vm(const sir::Program& p, Limits limits) : program_(p), limits_(limits) {
  for (const auto& c : p.classes) {
    auto& s = statics_[c.name];
    for (const auto& f : c.static_fields) s[f.name] = default_value(f.type);
  }
}

Vm::~Vm() = default;

void Vm::watch(const Site& s) { watched_.push_back(s); }

const Vm::MethodInfo& Vm::info(const sir::Class& c, const sir::Method& m) {
  auto it = infos_.find(&m);
  if (it != infos_.end()) return *it->second;
  auto mi = std::make_unique<MethodInfo>();
  mi->cls = &c;
  const std::size_t n = m.body.size();
  mi->intrinsic.assign(n, -1);
  mi->target.assign(n, nullptr);
  mi->target_cls.assign(n, nullptr);
  mi->ext_ret.assign(n, SirType::void_());
  mi->watched.assign(n, 0);
  sir::MethodTypes types;
  bool have_types = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Instruction& ins = m.body[i];
    if (ins.op != Op::Invoke) continue;
    if (ins.kind == sir::InvokeKind::Intrinsic) {
      if (!have_types) {
        types = sir::infer_types(program_, c, m);
        have_types = true;
      }
      std::vector<std::optional<SirType>> args;
      for (const int r : ins.srcs) {
        const auto& st = types.before[i];
        if (st && r < static_cast<int>(st->size()) && (*st)[r].is_value()) args.push_back((*st)[r].type);
        else args.push_back(std::nullopt);
      }
      const std::string name = ins.method.cls + "." + ins.method.name;
      const sir::IntrinsicSig* sig = sir::resolve_intrinsic(name, args);
      if (!sig)
        for (const auto& s : sir::intrinsic_catalog())
          if (s.qualified_name == name && s.params.size() == ins.srcs.size()) {
            sig = &s;
            break;
          }
      if (sig) mi->intrinsic[i] = static_cast<int>(sig->id);
    } else {
      const sir::Class* owner = nullptr;
      mi->target[i] = sir::resolve_invoke(program_, ins.method, &owner);
      mi->target_cls[i] = owner;
      if (!mi->target[i])
        if (const auto* e = program_.find_external(ins.method)) mi->ext_ret[i] = e->return_type;
    }
  }
  for (const auto& s : watched_)
    if (s.cls == c.name && s.method == m.name && s.params == m.params && s.index >= 0 &&
        s.index < static_cast<int>(n))
      mi->watched[static_cast<std::size_t>(s.index)] = 1;
  return *infos_.emplace(&m, std::move(mi)).first->second;
}

void Vm::tick() {
  ++steps_;
  if (limits_.steps && steps_ > limits_.steps) throw Halt{Status::StepBudgetExhausted};
  if ((steps_ & 1023) == 0) {
    if (stop_.stop_requested()) throw Halt{Status::Timeout};
    if (limits_.wall.count() > 0 && std::chrono::steady_clock::now() >= deadline_) throw Halt{Status::Timeout};
  }
}

void Vm::charge(std::size_t units) {
  if (units > kMaxLength) throw Fault{FaultKind::OutOfMemory, "allocation too large"};
  allocated_ += units;
  if (allocated_ > kMaxAllocation) throw Fault{FaultKind::OutOfMemory, "allocation budget exhausted"};
}

Value Vm::make_string(std::u16string s) {
  charge(s.size());
  return Value::of_string(std::move(s));
}

std::shared_ptr<Object> Vm::new_object(const sir::Class& c) {
  auto o = std::make_shared<Object>();
  o->cls = c.name;
  const sir::Class* k = &c;
  int guard = 0;
  while (k && guard++ < 256) {
    for (const auto& f : k->instance_fields) o->fields.emplace(f.name, default_value(f.type));
    k = k->superclass ? program_.find_class(*k->superclass) : nullptr;
  }
  charge(o->fields.size() + 1);
  return o;
}

void Vm::ensure_initialized(const sir::Class& c) {
  auto [it, fresh] = init_state_.emplace(c.name, 1);
  if (!fresh) return;
  if (c.superclass)
    if (const sir::Class* s = program_.find_class(*c.superclass)) ensure_initialized(*s);
  if (c.static_init) invoke(c, *c.static_init, {});
}

Value Vm::invoke(const sir::Class& c, const sir::Method& m, std::vector<Value> args) {
  if (m.is_abstract || m.body.empty()) return default_value(m.return_type);
  if (stack_.size() >= kMaxDepth) throw Fault{FaultKind::StackOverflow, "call depth limit"};
  const MethodInfo& mi = info(c, m);
  std::vector<Value> regs(static_cast<std::size_t>(m.register_count));
  for (std::size_t k = 0; k < args.size() && k < regs.size(); ++k) regs[k] = std::move(args[k]);
  stack_.push_back({&c, &m});
  struct Pop {
    std::vector<Frame>& s;
    ~Pop() { s.pop_back(); }
  } pop{stack_};

  const auto& body = m.body;
  const int n = static_cast<int>(body.size());
  int pc = 0;
  auto fault = [&](FaultKind k, std::string msg) -> Fault {
    if (out_.fault_site.empty()) out_.fault_site = c.name + "." + m.name + "@" + std::to_string(pc);
    return Fault{k, std::move(msg)};
  };
  auto reg = [&](int r) -> Value& { return regs[static_cast<std::size_t>(r)]; };
  auto ival = [&](int r) { return regs[static_cast<std::size_t>(r)].as_int(); };

  while (true) {
    if (pc < 0 || pc >= n) throw fault(FaultKind::BadEntry, "pc out of range");
    tick();
    if (mi.watched[static_cast<std::size_t>(pc)] && hook_) hook_(Site{c.name, m.name, m.params, pc}, regs);
    const Instruction& ins = body[static_cast<std::size_t>(pc)];
    int next = pc + 1;
    try {
      switch (ins.op) {
        case Op::Const:
          if (ins.is_null) reg(ins.dst) = Value::null();
          else if (ins.type.is(TypeKind::String)) reg(ins.dst) = Value::of_string(ins.str);
          else reg(ins.dst) = Value::of_int(normalize(ins.type, ins.imm));
          break;
        case Op::Move:
          reg(ins.dst) = reg(ins.srcs[0]);
          break;
        case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Rem: case Op::Xor:
        case Op::And: case Op::Or: case Op::Shl: case Op::Shr: case Op::Ushr: {
          const bool is_long = ins.type.is(TypeKind::Long);
          const std::int64_t a = ival(ins.srcs[0]);
          const std::int64_t b = ival(ins.srcs[1]);
          std::int64_t r = 0;
          if (is_long) {
            const auto ua = static_cast<std::uint64_t>(a);
            const auto ub = static_cast<std::uint64_t>(b);
            switch (ins.op) {
              case Op::Add: r = static_cast<std::int64_t>(ua + ub); break;
              case Op::Sub: r = static_cast<std::int64_t>(ua - ub); break;
              case Op::Mul: r = static_cast<std::int64_t>(ua * ub); break;
              case Op::Div:
                if (b == 0) throw fault(FaultKind::DivideByZero, "division by zero");
                r = (a == std::numeric_limits<std::int64_t>::min() && b == -1) ? a : a / b;
                break;
              case Op::Rem:
                if (b == 0) throw fault(FaultKind::DivideByZero, "division by zero");
                r = (b == -1) ? 0 : a % b;
                break;
              case Op::Xor: r = a ^ b; break;
              case Op::And: r = a & b; break;
              case Op::Or: r = a | b; break;
              case Op::Shl: r = static_cast<std::int64_t>(ua << (b & 63)); break;
              case Op::Shr: r = a >> (b & 63); break;
              case Op::Ushr: r = static_cast<std::int64_t>(ua >> (b & 63)); break;
              default: break;
            }
          } else {
            const std::int32_t x = wrap32(a);
            const std::int32_t y = wrap32(b);
            const auto ux = static_cast<std::uint32_t>(x);
            const auto uy = static_cast<std::uint32_t>(y);
            switch (ins.op) {
              case Op::Add: r = wrap32(ux + uy); break;
              case Op::Sub: r = wrap32(ux - uy); break;
              case Op::Mul: r = wrap32(static_cast<std::uint64_t>(ux) * uy); break;
              case Op::Div:
                if (y == 0) throw fault(FaultKind::DivideByZero, "division by zero");
                r = (x == std::numeric_limits<std::int32_t>::min() && y == -1) ? x : x / y;
                break;
              case Op::Rem:
                if (y == 0) throw fault(FaultKind::DivideByZero, "division by zero");
                r = (y == -1) ? 0 : x % y;
                break;
              case Op::Xor: r = x ^ y; break;
              case Op::And: r = x & y; break;
              case Op::Or: r = x | y; break;
              case Op::Shl: r = wrap32(static_cast<std::uint64_t>(ux) << (b & 31)); break;
              case Op::Shr: r = x >> (b & 31); break;
              case Op::Ushr: r = static_cast<std::int32_t>(ux >> (b & 31)); break;
              default: break;
            }
          }
          reg(ins.dst) = Value::of_int(r);
          break;
        }
        case Op::Neg: {
          const std::int64_t a = ival(ins.srcs[0]);
          reg(ins.dst) = Value::of_int(ins.type.is(TypeKind::Long)
                                           ? static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(a))
                                           : wrap32(0 - static_cast<std::uint32_t>(wrap32(a))));
          break;
        }
        case Op::Conv:
          reg(ins.dst) = Value::of_int(normalize(ins.type, ival(ins.srcs[0])));
          break;
        case Op::IfEq: case Op::IfNe: case Op::IfLt: case Op::IfLe: case Op::IfGt: case Op::IfGe: {
          const Value& a = reg(ins.srcs[0]);
          const Value& b = reg(ins.srcs[1]);
          bool taken;
          if (a.is_int() && b.is_int()) {
            const std::int64_t x = a.as_int(), y = b.as_int();
            switch (ins.op) {
              case Op::IfEq: taken = x == y; break;
              case Op::IfNe: taken = x != y; break;
              case Op::IfLt: taken = x < y; break;
              case Op::IfLe: taken = x <= y; break;
              case Op::IfGt: taken = x > y; break;
              default: taken = x >= y; break;
            }
          } else {
            // Reference identity.
            bool same = a.v.index() == b.v.index();
            if (same) {
              same = std::visit(
                  [&](const auto& x) {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, std::monostate>) return true;
                    else if constexpr (std::is_same_v<T, std::int64_t>) return x == std::get<T>(b.v);
                    else return x.get() == std::get<T>(b.v).get();
                  },
                  a.v);
            }
            taken = ins.op == Op::IfEq ? same : (ins.op == Op::IfNe ? !same : false);
          }
          if (taken) next = ins.target;
          break;
        }
        case Op::Goto:
          next = ins.target;
          break;
        case Op::Switch: {
          const std::int64_t k = ival(ins.srcs[0]);
          next = ins.target;
          for (const auto& sc : ins.cases)
            if (sc.key == k) {
              next = sc.target;
              break;
            }
          break;
        }
        case Op::NewArray: {
          const std::int64_t len = ival(ins.srcs[0]);
          if (len < 0) throw fault(FaultKind::NegativeArraySize, "negative array size");
          charge(static_cast<std::size_t>(len));
          auto a = std::make_shared<Array>();
          a->elem = ins.type;
          a->items.assign(static_cast<std::size_t>(len), default_value(ins.type));
          reg(ins.dst) = Value::of_array(std::move(a));
          break;
        }
        case Op::ArrayLoad: {
          Array* a = reg(ins.srcs[0]).as_array();
          if (!a) throw fault(FaultKind::NullPointer, "aget on null");
          const std::int64_t i = ival(ins.srcs[1]);
          if (i < 0 || i >= static_cast<std::int64_t>(a->items.size()))
            throw fault(FaultKind::IndexOutOfBounds, "index " + std::to_string(i));
          reg(ins.dst) = a->items[static_cast<std::size_t>(i)];
          break;
        }
        case Op::ArrayStore: {
          Array* a = reg(ins.srcs[0]).as_array();
          if (!a) throw fault(FaultKind::NullPointer, "aput on null");
          const std::int64_t i = ival(ins.srcs[1]);
          if (i < 0 || i >= static_cast<std::int64_t>(a->items.size()))
            throw fault(FaultKind::IndexOutOfBounds, "index " + std::to_string(i));
          const Value& v = reg(ins.srcs[2]);
          a->items[static_cast<std::size_t>(i)] = v.is_int() ? Value::of_int(normalize(a->elem, v.as_int())) : v;
          break;
        }
        case Op::ArrayLength: {
          Array* a = reg(ins.srcs[0]).as_array();
          if (!a) throw fault(FaultKind::NullPointer, "alen on null");
          reg(ins.dst) = Value::of_int(static_cast<std::int64_t>(a->items.size()));
          break;
        }
        case Op::NewObject: {
          const sir::Class* k = program_.find_class(ins.cls);
          if (!k) throw fault(FaultKind::BadEntry, "unknown class " + ins.cls);
          ensure_initialized(*k);
          Value v;
          v.v = new_object(*k);
          reg(ins.dst) = std::move(v);
          break;
        }
        case Op::GetStatic:
        case Op::PutStatic: {
          // Find the declaring class along the superclass chain.
          const sir::Class* k = program_.find_class(ins.field.cls);
          int guard = 0;
          while (k && !k->find_static_field(ins.field.name) && guard++ < 256)
            k = k->superclass ? program_.find_class(*k->superclass) : nullptr;
          if (!k) throw fault(FaultKind::BadEntry, "unknown static field");
          ensure_initialized(*k);
          Value& slot = statics_[k->name][ins.field.name];
          if (ins.op == Op::GetStatic) {
            reg(ins.dst) = slot;
          } else {
            const Value& v = reg(ins.srcs[0]);
            const sir::Field* f = k->find_static_field(ins.field.name);
            slot = v.is_int() ? Value::of_int(normalize(f->type, v.as_int())) : v;
          }
          break;
        }
        case Op::GetField: {
          Object* o = reg(ins.srcs[0]).as_object();
          if (!o) throw fault(FaultKind::NullPointer, "iget on null");
          auto it = o->fields.find(ins.field.name);
          reg(ins.dst) = it != o->fields.end() ? it->second : Value::null();
          break;
        }
        case Op::PutField: {
          Object* o = reg(ins.srcs[0]).as_object();
          if (!o) throw fault(FaultKind::NullPointer, "iput on null");
          o->fields[ins.field.name] = reg(ins.srcs[1]);
          break;
        }
        case Op::Invoke: {
          std::vector<Value> args;
          args.reserve(ins.srcs.size());
          for (const int r : ins.srcs) args.push_back(reg(r));
          Value result;
          if (ins.kind == sir::InvokeKind::Intrinsic) {
            const int id = mi.intrinsic[static_cast<std::size_t>(pc)];
            if (id < 0) throw fault(FaultKind::BadEntry, "unresolved intrinsic");
            result = call_intrinsic(static_cast<IntrinsicId>(id), args, ins);
          } else {
            const sir::Method* callee = mi.target[static_cast<std::size_t>(pc)];
            const sir::Class* owner = mi.target_cls[static_cast<std::size_t>(pc)];
            if (!callee) {
              result = default_value(mi.ext_ret[static_cast<std::size_t>(pc)]);
            } else {
              if (ins.kind != sir::InvokeKind::Static) {
                Object* recv = args.empty() ? nullptr : args[0].as_object();
                if (!recv) throw fault(FaultKind::NullPointer, "invoke on null receiver");
                if (ins.kind == sir::InvokeKind::Virtual && recv->cls != owner->name) {
                  sir::MethodRef ref = ins.method;
                  ref.cls = recv->cls;
                  const sir::Class* o2 = nullptr;
                  if (const sir::Method* m2 = sir::resolve_invoke(program_, ref, &o2)) {
                    callee = m2;
                    owner = o2;
                  }
                }
              } else {
                ensure_initialized(*owner);
              }
              result = invoke(*owner, *callee, std::move(args));
            }
          }
          if (ins.has_dst()) reg(ins.dst) = std::move(result);
          break;
        }
        case Op::Return:
          if (ins.srcs.empty()) return Value::null();
          return reg(ins.srcs[0]);
      }
    } catch (const Fault&) {
      if (out_.fault_site.empty()) out_.fault_site = c.name + "." + m.name + "@" + std::to_string(pc);
      throw;
    } catch (const codec::CodecError& e) {
      throw fault(FaultKind::Codec, e.what());
    } catch (const codec::CipherError& e) {
      throw fault(FaultKind::Cipher, e.what());
    }
    pc = next;
  }
}

Value Vm::call_intrinsic(IntrinsicId id, const std::vector<Value>& args, const Instruction&) {
  auto str = [&](std::size_t k) -> const std::u16string& {
    const std::u16string* s = args[k].as_string();
    if (!s) throw Fault{FaultKind::NullPointer, "null string argument"};
    return *s;
  };
  auto arr = [&](std::size_t k) -> Array& {
    Array* a = args[k].as_array();
    if (!a) throw Fault{FaultKind::NullPointer, "null array argument"};
    return *a;
  };
  auto bld = [&](std::size_t k) -> Builder& {
    Builder* b = args[k].as_builder();
    if (!b) throw Fault{FaultKind::NullPointer, "null builder"};
    return *b;
  };
  auto ascii = [&](const std::u16string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char16_t c : s) {
      if (c > 0x7F) throw codec::CodecError("non-ASCII input");
      out += static_cast<char>(c);
    }
    return out;
  };
  auto widen = [](std::string_view s) { return std::u16string(s.begin(), s.end()); };
  auto bytes_of = [&](std::size_t k) { return byte_array_bytes(arr(k)); };
  auto bytes_value = [&](const std::vector<std::uint8_t>& b) {
    charge(b.size());
    return make_byte_array(b);
  };

  switch (id) {
    case IntrinsicId::StrLen: return Value::of_int(static_cast<std::int64_t>(str(0).size()));
    case IntrinsicId::StrCharAt: {
      const auto& s = str(0);
      const std::int64_t i = args[1].as_int();
      if (i < 0 || i >= static_cast<std::int64_t>(s.size())) throw Fault{FaultKind::IndexOutOfBounds, "charAt"};
      return Value::of_int(s[static_cast<std::size_t>(i)]);
    }
    case IntrinsicId::StrConcat: return make_string(str(0) + str(1));
    case IntrinsicId::StrSubstring: {
      const auto& s = str(0);
      const std::int64_t b = args[1].as_int(), e = args[2].as_int();
      if (b < 0 || e > static_cast<std::int64_t>(s.size()) || b > e) throw Fault{FaultKind::IndexOutOfBounds, "substring"};
      return make_string(s.substr(static_cast<std::size_t>(b), static_cast<std::size_t>(e - b)));
    }
    case IntrinsicId::StrFromChars: {
      const Array& a = arr(0);
      std::u16string s;
      s.reserve(a.items.size());
      for (const auto& v : a.items) s += static_cast<char16_t>(v.as_int());
      return make_string(std::move(s));
    }
    case IntrinsicId::StrToChars: {
      const auto& s = str(0);
      charge(s.size());
      auto a = std::make_shared<Array>();
      a->elem = SirType::char_();
      for (const char16_t c : s) a->items.push_back(Value::of_int(c));
      return Value::of_array(std::move(a));
    }
    case IntrinsicId::StrIndexOf: {
      const auto pos = str(0).find(str(1));
      return Value::of_int(pos == std::u16string::npos ? -1 : static_cast<std::int64_t>(pos));
    }
    case IntrinsicId::StrEquals: {
      const auto& a = str(0);
      const std::u16string* b = args[1].as_string();
      return Value::of_int(b && *b == a ? 1 : 0);
    }
    case IntrinsicId::StrHash: {
      std::uint32_t h = 0;
      for (const char16_t c : str(0)) h = 31 * h + c;
      return Value::of_int(static_cast<std::int32_t>(h));
    }
    case IntrinsicId::StrToBytes: return bytes_value(codec::utf8_bytes(str(0)));
    case IntrinsicId::BuilderNew: {
      Value v;
      v.v = std::make_shared<Builder>();
      return v;
    }
    case IntrinsicId::BuilderAppendString: {
      Builder& b = bld(0);
      const std::u16string* s = args[1].as_string();
      const std::u16string add = s ? *s : u"null";
      charge(add.size());
      if (b.buf.size() + add.size() > kMaxLength) throw Fault{FaultKind::OutOfMemory, "builder too large"};
      b.buf += add;
      return args[0];
    }
    case IntrinsicId::BuilderAppendChar:
      charge(1);
      bld(0).buf += static_cast<char16_t>(args[1].as_int());
      return args[0];
    case IntrinsicId::BuilderAppendInt: {
      const std::string d = std::to_string(args[1].as_int());
      charge(d.size());
      bld(0).buf += widen(d);
      return args[0];
    }
    case IntrinsicId::BuilderToString: return make_string(bld(0).buf);
    case IntrinsicId::BytesToString: return make_string(codec::utf8_decode(bytes_of(0)));
    case IntrinsicId::B64Encode: return make_string(widen(codec::b64_encode(bytes_of(0))));
    case IntrinsicId::B64Decode: return bytes_value(codec::b64_decode(ascii(str(0))));
    case IntrinsicId::B85Encode: return make_string(widen(codec::b85_encode(bytes_of(0))));
    case IntrinsicId::B85Decode: return bytes_value(codec::b85_decode(ascii(str(0))));
    case IntrinsicId::UrlEncode: return make_string(codec::url_encode(str(0)));
    case IntrinsicId::UrlDecode: return make_string(codec::url_decode(str(0)));
    case IntrinsicId::BigIntEncodeBase:
      return make_string(widen(codec::bigint_encode(bytes_of(0), static_cast<int>(args[1].as_int()))));
    case IntrinsicId::BigIntDecodeBase:
      return bytes_value(codec::bigint_decode(ascii(str(0)), static_cast<int>(args[1].as_int())));
    case IntrinsicId::AesEncrypt: return bytes_value(codec::aes128_ecb_encrypt(bytes_of(0), bytes_of(1)));
    case IntrinsicId::AesDecrypt: return bytes_value(codec::aes128_ecb_decrypt(bytes_of(0), bytes_of(1)));
    case IntrinsicId::StackCallerClass:
    case IntrinsicId::StackCallerMethod: {
      // The frame executing this intrinsic is stack_.back(); its caller is one below.
      const Frame& f = stack_.size() >= 2 ? stack_[stack_.size() - 2] : stack_.back();
      return make_string(widen(id == IntrinsicId::StackCallerClass ? f.cls->name : f.method->name));
    }
    case IntrinsicId::StreamWrite:
      stream_.push_back(bytes_of(0));
      return Value::null();
    case IntrinsicId::StreamRead: {
      if (stream_.empty()) return make_byte_array({});
      auto b = std::move(stream_.front());
      stream_.pop_front();
      return make_byte_array(b);
    }
    case IntrinsicId::LogRecord:
      // A null reference carries no string to record.
      if (const std::u16string* s = args[0].as_string()) out_.logged.push_back(*s);
      return Value::null();
    case IntrinsicId::SysOut:
      if (const std::u16string* s = args[0].as_string()) out_.printed.push_back(*s);
      else out_.printed.push_back(u"null");
      return Value::null();
  }
  return Value::null();
}

Outcome Vm::run(const std::string& cls, const std::string& method, std::vector<Value> args,
                const std::vector<SirType>* params, std::stop_token stop) {
  out_ = Outcome{};
  stop_ = std::move(stop);
  steps_ = 0;
  deadline_ = std::chrono::steady_clock::now() + limits_.wall;
  const sir::Class* c = program_.find_class(cls);
  const sir::Method* m = c ? c->find_method(method, params) : nullptr;
  if (!m) {
    out_.status = Status::Fault;
    out_.fault = FaultKind::BadEntry;
    out_.message = "entry " + cls + "." + method + " does not resolve";
    return std::move(out_);
  }
  try {
    std::vector<Value> full;
    if (!m->is_static) {
      Value self;
      self.v = new_object(*c);
      full.push_back(std::move(self));
    }
    for (std::size_t k = 0; k < m->params.size(); ++k)
      full.push_back(k < args.size() ? std::move(args[k]) : default_value(m->params[k]));
    ensure_initialized(*c);
    const bool is_init = c->static_init && m == &*c->static_init;
    Value rv = is_init ? Value::null() : invoke(*c, *m, std::move(full));
    if (!m->return_type.is_void()) out_.return_value = std::move(rv);
    out_.status = Status::Completed;
  } catch (const Fault& f) {
    out_.status = Status::Fault;
    out_.fault = f.kind;
    out_.message = f.message;
  } catch (const Halt& h) {
    out_.status = h.status;
  } catch (const std::bad_alloc&) {
    out_.status = Status::Fault;
    out_.fault = FaultKind::OutOfMemory;
  }
  out_.steps = steps_;
  return std::move(out_);
}

Outcome execute(const sir::Program& p, const std::string& cls, const std::string& method, std::vector<Value> args,
                Limits limits, std::stop_token stop) {
  Vm vm(p, limits);
  return vm.run(cls, method, std::move(args), nullptr, std::move(stop));
}

}  // namespace strhound::vm
