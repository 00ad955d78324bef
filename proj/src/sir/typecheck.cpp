#include "strhound/sir/typecheck.hpp"

#include <deque>
#include <set>

#include "strhound/sir/intrinsics.hpp"
#include "strhound/sir/text.hpp"

namespace strhound::sir {

namespace {

RegType merge(const RegType& a, const RegType& b) {
  using K = RegType::Kind;
  if (a == b) return a;
  if (a.kind == K::Conflict || b.kind == K::Conflict) return {K::Conflict, {}};
  if (a.kind == K::Null && b.kind == K::Value && b.type.is_reference()) return b;
  if (b.kind == K::Null && a.kind == K::Value && a.type.is_reference()) return a;
  return {K::Conflict, {}};
}

const Field* find_field(const Program& p, const FieldRef& ref, bool is_static, const Class** owner) {
  const Class* c = p.find_class(ref.cls);
  std::set<std::string> seen;
  while (c && seen.insert(c->name).second) {
    const Field* f = is_static ? c->find_static_field(ref.name) : c->find_instance_field(ref.name);
    if (f) {
      if (owner) *owner = c;
      return f;
    }
    c = c->superclass ? p.find_class(*c->superclass) : nullptr;
  }
  return nullptr;
}

class Checker {
 public:
  Checker(const Program& p, const Class& c, const Method& m, bool strict) : p_(p), c_(c), m_(m), strict_(strict) {}

  MethodTypes run() {
    MethodTypes out;
    out.before.assign(m_.body.size(), std::nullopt);
    if (m_.is_abstract) return out;
    if (m_.body.empty()) fail(-1, "method without instructions");
    if (m_.register_count < m_.arg_register_count()) fail(-1, "register count below argument count");

    std::vector<RegType> entry(static_cast<std::size_t>(m_.register_count));
    int r = 0;
    if (!m_.is_static) entry[r++] = RegType::value(SirType::object(c_.name));
    for (const auto& t : m_.params) entry[r++] = RegType::value(t);

    out.before[0] = entry;
    std::deque<int> work{0};
    std::vector<char> queued(m_.body.size(), 0);
    queued[0] = 1;
    while (!work.empty()) {
      const int i = work.front();
      work.pop_front();
      queued[i] = 0;
      std::vector<RegType> regs = *out.before[i];
      step(i, regs);
      for (const int s : successors(i)) {
        auto& slot = out.before[s];
        bool changed = false;
        if (!slot) {
          slot = regs;
          changed = true;
        } else {
          for (std::size_t k = 0; k < regs.size(); ++k) {
            RegType mg = merge((*slot)[k], regs[k]);
            if (mg != (*slot)[k]) {
              (*slot)[k] = std::move(mg);
              changed = true;
            }
          }
        }
        if (changed && !queued[s]) {
          queued[s] = 1;
          work.push_back(s);
        }
      }
    }
    return out;
  }

 private:
  [[noreturn]] void fail(int i, const std::string& msg) const {
    std::string where = c_.name + "." + m_.name;
    if (i >= 0) where += "@" + std::to_string(i) + " (" + serialize_instruction(m_.body[i]) + ")";
    throw TypeError(where + ": " + msg);
  }

  void check(bool ok, int i, const std::string& msg) const {
    if (!ok && strict_) fail(i, msg);
  }

  std::vector<int> successors(int i) const {
    const Instruction& ins = m_.body[i];
    std::vector<int> out;
    const int n = static_cast<int>(m_.body.size());
    auto add = [&](int t) {
      if (t >= 0 && t < n) out.push_back(t);
    };
    switch (ins.op) {
      case Op::Return: break;
      case Op::Goto: add(ins.target); break;
      case Op::Switch:
        for (const auto& c : ins.cases) add(c.target);
        add(ins.target);
        break;
      default:
        if (is_cond_branch(ins.op)) add(ins.target);
        if (i + 1 < n) add(i + 1);
        else check(false, i, "control falls off the end of the method");
    }
    return out;
  }

  const RegType& use(int i, const std::vector<RegType>& regs, int r) const {
    static const RegType unset;
    if (r < 0 || r >= static_cast<int>(regs.size())) {
      check(false, i, "register r" + std::to_string(r) + " out of range");
      return unset;
    }
    const RegType& t = regs[static_cast<std::size_t>(r)];
    if (t.kind == RegType::Kind::Unset) check(false, i, "register r" + std::to_string(r) + " used before assignment");
    if (t.kind == RegType::Kind::Conflict)
      check(false, i, "register r" + std::to_string(r) + " has conflicting types on merging paths");
    return t;
  }

  void def(int i, std::vector<RegType>& regs, int r, RegType t) const {
    if (r < 0 || r >= static_cast<int>(regs.size())) {
      check(false, i, "register r" + std::to_string(r) + " out of range");
      return;
    }
    regs[static_cast<std::size_t>(r)] = std::move(t);
  }

  bool int_like(const RegType& t) const { return t.is_value() && t.type.is_int_like(); }
  bool numeric(const RegType& t) const { return t.is_value() && (t.type.is_int_like() || t.type.is(TypeKind::Long)); }
  bool ref_like(const RegType& t) const { return t.kind == RegType::Kind::Null || (t.is_value() && t.type.is_reference()); }

  void check_target(int i, int t) const {
    check(t >= 0 && t < static_cast<int>(m_.body.size()), i, "branch target " + std::to_string(t) + " out of range");
  }

  void check_args(int i, const std::vector<RegType>& regs, const std::vector<int>& srcs, std::size_t first,
                  const std::vector<SirType>& params) const {
    check(srcs.size() - first == params.size(), i, "argument count mismatch");
    for (std::size_t k = 0; k + first < srcs.size() && k < params.size(); ++k) {
      const RegType& a = use(i, regs, srcs[k + first]);
      check(assignable(p_, a, params[k]), i, "argument " + std::to_string(k) + " not assignable to " + params[k].to_string());
    }
  }

  void step(int i, std::vector<RegType>& regs) const {
    const Instruction& ins = m_.body[i];
    switch (ins.op) {
      case Op::Const:
        if (ins.is_null) {
          def(i, regs, ins.dst, RegType::null());
        } else {
          check(ins.type.is_primitive() || ins.type.is(TypeKind::String), i, "bad constant type");
          def(i, regs, ins.dst, RegType::value(ins.type));
        }
        break;
      case Op::Move: {
        RegType t = use(i, regs, ins.srcs[0]);
        def(i, regs, ins.dst, t);
        break;
      }
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Rem: case Op::Xor:
      case Op::And: case Op::Or: case Op::Shl: case Op::Shr: case Op::Ushr: {
        const bool is_long = ins.type.is(TypeKind::Long);
        check(is_long || ins.type.is(TypeKind::Int), i, "arithmetic type must be int or long");
        const RegType& a = use(i, regs, ins.srcs[0]);
        const RegType& b = use(i, regs, ins.srcs[1]);
        check(is_long ? numeric(a) : int_like(a), i, "bad left operand type");
        const bool shift = ins.op == Op::Shl || ins.op == Op::Shr || ins.op == Op::Ushr;
        check((is_long && !shift) ? numeric(b) : (shift ? numeric(b) : int_like(b)), i, "bad right operand type");
        def(i, regs, ins.dst, RegType::value(ins.type));
        break;
      }
      case Op::Neg: {
        const bool is_long = ins.type.is(TypeKind::Long);
        check(is_long || ins.type.is(TypeKind::Int), i, "neg type must be int or long");
        const RegType& a = use(i, regs, ins.srcs[0]);
        check(is_long ? numeric(a) : int_like(a), i, "bad operand type");
        def(i, regs, ins.dst, RegType::value(ins.type));
        break;
      }
      case Op::Conv: {
        check(ins.type.is_primitive() && !ins.type.is(TypeKind::Bool), i, "conversion target must be numeric");
        const RegType& a = use(i, regs, ins.srcs[0]);
        check(numeric(a), i, "conversion source must be numeric");
        def(i, regs, ins.dst, RegType::value(ins.type));
        break;
      }
      case Op::IfEq: case Op::IfNe: case Op::IfLt: case Op::IfLe: case Op::IfGt: case Op::IfGe: {
        check_target(i, ins.target);
        const RegType& a = use(i, regs, ins.srcs[0]);
        const RegType& b = use(i, regs, ins.srcs[1]);
        const bool eq = ins.op == Op::IfEq || ins.op == Op::IfNe;
        const bool bools = a.is_value() && b.is_value() && a.type.is(TypeKind::Bool) && b.type.is(TypeKind::Bool);
        const bool nums = numeric(a) && numeric(b);
        const bool refs = ref_like(a) && ref_like(b);
        check(nums || (eq && (bools || refs)), i, "incomparable operands");
        break;
      }
      case Op::Goto:
        check_target(i, ins.target);
        break;
      case Op::Switch: {
        check_target(i, ins.target);
        std::set<std::int64_t> keys;
        for (const auto& c : ins.cases) {
          check_target(i, c.target);
          check(keys.insert(c.key).second, i, "duplicate switch key");
        }
        check(int_like(use(i, regs, ins.srcs[0])), i, "switch key must be int");
        break;
      }
      case Op::NewArray:
        check(!ins.type.is_void(), i, "array of void");
        check(int_like(use(i, regs, ins.srcs[0])), i, "array size must be int");
        def(i, regs, ins.dst, RegType::value(SirType::array_of(ins.type)));
        break;
      case Op::ArrayLoad: {
        const RegType a = use(i, regs, ins.srcs[0]);
        check(a.is_value() && a.type.is_array(), i, "aget on non-array");
        check(int_like(use(i, regs, ins.srcs[1])), i, "array index must be int");
        def(i, regs, ins.dst, a.is_value() && a.type.is_array() ? RegType::value(a.type.element()) : RegType{RegType::Kind::Conflict, {}});
        break;
      }
      case Op::ArrayStore: {
        const RegType& a = use(i, regs, ins.srcs[0]);
        check(a.is_value() && a.type.is_array(), i, "aput on non-array");
        check(int_like(use(i, regs, ins.srcs[1])), i, "array index must be int");
        const RegType& v = use(i, regs, ins.srcs[2]);
        if (a.is_value() && a.type.is_array()) {
          const SirType e = a.type.element();
          // Narrow int-like stores into byte/char arrays truncate, as with the JVM's bastore/castore.
          const bool narrow = (e.is(TypeKind::Byte) || e.is(TypeKind::Char)) && int_like(v);
          check(narrow || assignable(p_, v, e), i, "value not assignable to array element");
        }
        break;
      }
      case Op::ArrayLength: {
        const RegType& a = use(i, regs, ins.srcs[0]);
        check(a.is_value() && a.type.is_array(), i, "alen on non-array");
        def(i, regs, ins.dst, RegType::value(SirType::int_()));
        break;
      }
      case Op::NewObject:
        check(p_.find_class(ins.cls) != nullptr, i, "unknown class " + ins.cls);
        def(i, regs, ins.dst, RegType::value(SirType::object(ins.cls)));
        break;
      case Op::GetStatic: {
        const Field* f = find_field(p_, ins.field, true, nullptr);
        check(f != nullptr, i, "unknown static field");
        def(i, regs, ins.dst, f ? RegType::value(f->type) : RegType{RegType::Kind::Conflict, {}});
        break;
      }
      case Op::PutStatic: {
        const Field* f = find_field(p_, ins.field, true, nullptr);
        check(f != nullptr, i, "unknown static field");
        const RegType& v = use(i, regs, ins.srcs[0]);
        if (f) check(assignable(p_, v, f->type), i, "value not assignable to field");
        break;
      }
      case Op::GetField: {
        const Field* f = find_field(p_, ins.field, false, nullptr);
        check(f != nullptr, i, "unknown instance field");
        const RegType& o = use(i, regs, ins.srcs[0]);
        check(assignable(p_, o, SirType::object(ins.field.cls)), i, "receiver type mismatch");
        def(i, regs, ins.dst, f ? RegType::value(f->type) : RegType{RegType::Kind::Conflict, {}});
        break;
      }
      case Op::PutField: {
        const Field* f = find_field(p_, ins.field, false, nullptr);
        check(f != nullptr, i, "unknown instance field");
        const RegType& o = use(i, regs, ins.srcs[0]);
        check(assignable(p_, o, SirType::object(ins.field.cls)), i, "receiver type mismatch");
        const RegType& v = use(i, regs, ins.srcs[1]);
        if (f) check(assignable(p_, v, f->type), i, "value not assignable to field");
        break;
      }
      case Op::Invoke:
        step_invoke(i, ins, regs);
        break;
      case Op::Return:
        if (m_.return_type.is_void()) {
          check(ins.srcs.empty(), i, "void method returns a value");
        } else {
          check(!ins.srcs.empty(), i, "non-void method must return a value");
          if (!ins.srcs.empty())
            check(assignable(p_, use(i, regs, ins.srcs[0]), m_.return_type), i, "return value type mismatch");
        }
        break;
    }
  }

  void step_invoke(int i, const Instruction& ins, std::vector<RegType>& regs) const {
    std::optional<SirType> ret;
    if (ins.kind == InvokeKind::Intrinsic) {
      std::vector<std::optional<SirType>> args;
      for (const int r : ins.srcs) {
        const RegType& t = use(i, regs, r);
        args.push_back(t.is_value() ? std::optional<SirType>(t.type) : std::nullopt);
      }
      const IntrinsicSig* sig = resolve_intrinsic(ins.method.cls + "." + ins.method.name, args);
      check(sig != nullptr, i, "no intrinsic overload matches");
      if (sig) ret = sig->ret;
    } else {
      const Class* owner = nullptr;
      const Method* callee = resolve_invoke(p_, ins.method, &owner);
      if (callee) {
        const bool want_static = ins.kind == InvokeKind::Static;
        check(callee->is_static == want_static, i, want_static ? "static invoke of instance method" : "instance invoke of static method");
        const std::size_t first = callee->is_static ? 0 : 1;
        if (!callee->is_static) {
          check(!ins.srcs.empty(), i, "missing receiver");
          if (!ins.srcs.empty())
            check(assignable(p_, use(i, regs, ins.srcs[0]), SirType::object(ins.method.cls)), i, "receiver type mismatch");
        }
        if (ins.srcs.size() >= first) check_args(i, regs, ins.srcs, first, callee->params);
        ret = callee->return_type;
      } else if (const ExternalMethod* ext = p_.find_external(ins.method)) {
        check(ins.kind == InvokeKind::Static, i, "external methods are invoked statically");
        check_args(i, regs, ins.srcs, 0, ext->params);
        ret = ext->return_type;
      } else {
        check(false, i, "unresolved call target " + ins.method.cls + "." + ins.method.name);
      }
    }
    if (ins.has_dst()) {
      check(ret && !ret->is_void(), i, "result register on void call");
      def(i, regs, ins.dst, ret && !ret->is_void() ? RegType::value(*ret) : RegType{RegType::Kind::Conflict, {}});
    }
  }

  const Program& p_;
  const Class& c_;
  const Method& m_;
  bool strict_;
};

}  // namespace

bool is_subclass(const Program& p, std::string_view sub, std::string_view super) {
  std::set<std::string, std::less<>> seen;
  std::string_view cur = sub;
  while (true) {
    if (cur == super) return true;
    if (!seen.emplace(cur).second) return false;
    const Class* c = p.find_class(cur);
    if (!c || !c->superclass) return false;
    cur = *c->superclass;
  }
}

bool assignable(const Program& p, const RegType& from, const SirType& to) {
  if (from.kind == RegType::Kind::Null) return to.is_reference();
  if (!from.is_value()) return false;
  const SirType& f = from.type;
  if (f == to) return true;
  if (to.is(TypeKind::Int)) return f.is_int_like();
  if (to.is(TypeKind::Long)) return f.is_int_like() || f.is(TypeKind::Long);
  if (f.is(TypeKind::Object) && to.is(TypeKind::Object)) return is_subclass(p, f.class_name(), to.class_name());
  return false;
}

const Method* resolve_invoke(const Program& p, const MethodRef& ref, const Class** owner) {
  const Class* c = p.find_class(ref.cls);
  std::set<std::string> seen;
  while (c && seen.insert(c->name).second) {
    if (const Method* m = c->find_method(ref.name, &ref.params)) {
      if (owner) *owner = c;
      return m;
    }
    c = c->superclass ? p.find_class(*c->superclass) : nullptr;
  }
  return nullptr;
}

std::optional<SirType> invoke_return_type(const Program& p, const Instruction& ins, const std::vector<RegType>* regs) {
  if (ins.op != Op::Invoke) return std::nullopt;
  if (ins.kind == InvokeKind::Intrinsic) {
    std::vector<std::optional<SirType>> args;
    for (const int r : ins.srcs) {
      if (regs && r < static_cast<int>(regs->size()) && (*regs)[r].is_value()) args.push_back((*regs)[r].type);
      else args.push_back(std::nullopt);
    }
    const std::string name = ins.method.cls + "." + ins.method.name;
    if (const IntrinsicSig* sig = resolve_intrinsic(name, args)) return sig->ret;
    for (const auto& s : intrinsic_catalog())
      if (s.qualified_name == name) return s.ret;
    return std::nullopt;
  }
  if (const Method* m = resolve_invoke(p, ins.method)) return m->return_type;
  if (const ExternalMethod* e = p.find_external(ins.method)) return e->return_type;
  return std::nullopt;
}

MethodTypes check_method(const Program& p, const Class& c, const Method& m) { return Checker(p, c, m, true).run(); }

MethodTypes infer_types(const Program& p, const Class& c, const Method& m) { return Checker(p, c, m, false).run(); }

void typecheck(const Program& p) {
  std::set<std::string> class_names;
  for (const auto& c : p.classes) {
    if (!class_names.insert(c.name).second) throw TypeError("duplicate class " + c.name);
    if (c.name == kBuilderClass) throw TypeError("class name " + c.name + " is reserved");
  }
  for (const auto& c : p.classes) {
    if (c.superclass) {
      if (!p.find_class(*c.superclass)) throw TypeError(c.name + ": unknown superclass " + *c.superclass);
      if (is_subclass(p, *c.superclass, c.name)) throw TypeError(c.name + ": cyclic inheritance");
    }
    std::set<std::string> fields;
    for (const auto& f : c.static_fields)
      if (!fields.insert(f.name).second || f.type.is_void()) throw TypeError(c.name + ": bad field " + f.name);
    for (const auto& f : c.instance_fields)
      if (!fields.insert(f.name).second || f.type.is_void()) throw TypeError(c.name + ": bad field " + f.name);
    std::set<std::pair<std::string, std::vector<SirType>>> sigs;
    for (const auto& m : c.methods) {
      if (!sigs.emplace(m.name, m.params).second) throw TypeError(c.name + ": duplicate method " + m.signature());
      if (m.is_abstract != m.body.empty()) throw TypeError(c.name + "." + m.name + ": body must be empty iff abstract");
      if (m.is_abstract && !c.is_abstract) throw TypeError(c.name + "." + m.name + ": abstract method in concrete class");
      if (m.is_abstract && m.is_static) throw TypeError(c.name + "." + m.name + ": static abstract method");
      for (const auto& t : m.params)
        if (t.is_void()) throw TypeError(c.name + "." + m.name + ": void parameter");
    }
    if (c.static_init && (!c.static_init->params.empty() || !c.static_init->return_type.is_void() ||
                          c.static_init->is_abstract))
      throw TypeError(c.name + ": static initializer must be static void with no parameters");
  }
  for (const auto& e : p.entry_points) {
    const Class* c = p.find_class(e.cls);
    if (!c || !c->find_method(e.method)) throw TypeError("entry point " + e.cls + "." + e.method + " does not resolve");
  }
  for (const auto& c : p.classes) {
    if (c.static_init) check_method(p, c, *c.static_init);
    for (const auto& m : c.methods) check_method(p, c, m);
  }
}

}  // namespace strhound::sir
