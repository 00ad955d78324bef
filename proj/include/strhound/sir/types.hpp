#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace strhound::sir {

inline constexpr std::string_view kBuilderClass = "Builder";
inline constexpr std::string_view kStaticInitName = "clinit";

enum class TypeKind : std::uint8_t { Int, Long, Byte, Char, Bool, String, Object, Void };

/// A SIR value type. Arrays are a base type plus a dimension count.
class SirType {
 public:
  SirType() = default;

  static SirType int_() { return SirType(TypeKind::Int); }
  static SirType long_() { return SirType(TypeKind::Long); }
  static SirType byte_() { return SirType(TypeKind::Byte); }
  static SirType char_() { return SirType(TypeKind::Char); }
  static SirType bool_() { return SirType(TypeKind::Bool); }
  static SirType string() { return SirType(TypeKind::String); }
  static SirType void_() { return SirType(TypeKind::Void); }
  static SirType builder() { return object(std::string(kBuilderClass)); }
  static SirType object(std::string class_name) {
    SirType t(TypeKind::Object);
    t.class_name_ = std::move(class_name);
    return t;
  }
  static SirType array_of(SirType elem) {
    elem.dims_ += 1;
    return elem;
  }

  TypeKind base() const { return base_; }
  int dims() const { return dims_; }
  bool is_array() const { return dims_ > 0; }
  const std::string& class_name() const { return class_name_; }

  SirType element() const {
    SirType e = *this;
    if (e.dims_ > 0) e.dims_ -= 1;
    return e;
  }

  bool is(TypeKind k) const { return dims_ == 0 && base_ == k; }
  bool is_void() const { return is(TypeKind::Void); }
  /// int, long, byte, char or bool scalars.
  bool is_primitive() const {
    return dims_ == 0 && base_ != TypeKind::String && base_ != TypeKind::Object && base_ != TypeKind::Void;
  }
  /// Primitive types usable as 32-bit integer operands.
  bool is_int_like() const {
    return dims_ == 0 && (base_ == TypeKind::Int || base_ == TypeKind::Byte || base_ == TypeKind::Char);
  }
  bool is_reference() const { return dims_ > 0 || base_ == TypeKind::String || base_ == TypeKind::Object; }
  bool is_builder() const { return is(TypeKind::Object) && class_name_ == kBuilderClass; }
  bool is_char_sequence() const { return is(TypeKind::String) || is_builder(); }

  std::string to_string() const;

  friend bool operator==(const SirType&, const SirType&) = default;
  friend auto operator<=>(const SirType&, const SirType&) = default;

 private:
  explicit SirType(TypeKind k) : base_(k) {}

  TypeKind base_ = TypeKind::Void;
  std::uint8_t dims_ = 0;
  std::string class_name_;
};

enum class Op : std::uint8_t {
  Const,
  Move,
  Add,
  Sub,
  Mul,
  Div,
  Rem,
  Xor,
  And,
  Or,
  Shl,
  Shr,
  Ushr,
  Neg,
  Conv,
  IfEq,
  IfNe,
  IfLt,
  IfLe,
  IfGt,
  IfGe,
  Goto,
  Switch,
  NewArray,
  ArrayLoad,
  ArrayStore,
  ArrayLength,
  NewObject,
  GetStatic,
  PutStatic,
  GetField,
  PutField,
  Invoke,
  Return,
};

enum class InvokeKind : std::uint8_t { Static, Virtual, Special, Intrinsic };

std::string_view mnemonic(Op op);
std::optional<Op> op_from_mnemonic(std::string_view s);
std::string_view to_string(InvokeKind k);

inline bool is_arith(Op op) { return op >= Op::Add && op <= Op::Ushr; }
inline bool is_cond_branch(Op op) { return op >= Op::IfEq && op <= Op::IfGe; }
/// Instructions that end a basic block.
inline bool is_terminator(Op op) {
  return is_cond_branch(op) || op == Op::Goto || op == Op::Switch || op == Op::Return;
}

struct FieldRef {
  std::string cls;
  std::string name;
  friend bool operator==(const FieldRef&, const FieldRef&) = default;
};

/// Target of an invoke. Intrinsic refs carry no parameter list; they are
/// resolved by name and argument types against the intrinsic catalog.
struct MethodRef {
  std::string cls;
  std::string name;
  std::vector<SirType> params;
  friend bool operator==(const MethodRef&, const MethodRef&) = default;
};

struct SwitchCase {
  std::int64_t key = 0;
  int target = 0;
  friend bool operator==(const SwitchCase&, const SwitchCase&) = default;
};

/// One SIR instruction. Which fields are meaningful depends on `op`:
///   Const      type, dst, imm | str | is_null
///   Move       dst, srcs[0]
///   arith      type (int/long), dst, srcs[0..1]
///   Neg/Conv   type, dst, srcs[0]
///   If*        srcs[0..1], target
///   Goto       target
///   Switch     srcs[0], cases, target (default)
///   NewArray   type (element), dst, srcs[0] (size)
///   ArrayLoad  dst, srcs = {array, index}
///   ArrayStore srcs = {array, index, value}
///   ArrayLength dst, srcs[0]
///   NewObject  dst, cls
///   Get/PutStatic, Get/PutField   field, dst / srcs
///   Invoke     kind, method, srcs (arguments, receiver first), dst (optional)
///   Return     srcs (empty or one value)
struct Instruction {
  Op op = Op::Return;
  SirType type;
  int dst = -1;
  std::vector<int> srcs;
  std::int64_t imm = 0;
  std::u16string str;
  bool is_null = false;
  int target = -1;
  std::vector<SwitchCase> cases;
  std::string cls;
  FieldRef field;
  InvokeKind kind = InvokeKind::Static;
  MethodRef method;

  bool has_dst() const { return dst >= 0; }
  bool is_string_const() const { return op == Op::Const && !is_null && type.is(TypeKind::String); }

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Method {
  std::string name;
  std::vector<SirType> params;
  SirType return_type = SirType::void_();
  bool is_static = false;
  bool is_abstract = false;
  std::vector<Instruction> body;
  int register_count = 0;

  /// Registers holding incoming arguments (receiver included for instance methods).
  int arg_register_count() const { return static_cast<int>(params.size()) + (is_static ? 0 : 1); }
  std::string signature() const;
  bool same_signature(const Method& o) const { return name == o.name && params == o.params; }

  friend bool operator==(const Method&, const Method&) = default;
};

struct Field {
  std::string name;
  SirType type;
  friend bool operator==(const Field&, const Field&) = default;
};

struct Class {
  std::string name;
  std::optional<std::string> superclass;
  std::vector<Field> static_fields;
  std::vector<Field> instance_fields;
  std::optional<Method> static_init;
  std::vector<Method> methods;
  bool is_abstract = false;

  const Method* find_method(std::string_view name, const std::vector<SirType>* params = nullptr) const;
  Method* find_method(std::string_view name, const std::vector<SirType>* params = nullptr);
  const Field* find_static_field(std::string_view name) const;
  const Field* find_instance_field(std::string_view name) const;

  friend bool operator==(const Class&, const Class&) = default;
};

/// Environment method without a body; calls return the declared type's default.
struct ExternalMethod {
  std::string cls;
  std::string name;
  std::vector<SirType> params;
  SirType return_type = SirType::void_();
  friend bool operator==(const ExternalMethod&, const ExternalMethod&) = default;
};

struct EntryPoint {
  std::string cls;
  std::string method;
  friend bool operator==(const EntryPoint&, const EntryPoint&) = default;
};

struct Program {
  std::vector<Class> classes;
  std::vector<EntryPoint> entry_points;
  std::vector<ExternalMethod> externals;

  const Class* find_class(std::string_view name) const;
  Class* find_class(std::string_view name);
  const ExternalMethod* find_external(const MethodRef& ref) const;

  friend bool operator==(const Program&, const Program&) = default;
};

/// Identifies a method inside a program: the static initializer is addressed by
/// the reserved name "clinit".
struct MethodId {
  std::string cls;
  std::string name;
  std::vector<SirType> params;
  friend bool operator==(const MethodId&, const MethodId&) = default;
  friend auto operator<=>(const MethodId&, const MethodId&) = default;
};

const Method* find_method(const Program& p, const MethodId& id);
Method* find_method(Program& p, const MethodId& id);

/// Calls `fn(cls, method)` for every method with a body or declaration,
/// static initializers first within each class.
template <typename Fn>
void for_each_method(const Program& p, Fn&& fn) {
  for (const auto& c : p.classes) {
    if (c.static_init) fn(c, *c.static_init);
    for (const auto& m : c.methods) fn(c, m);
  }
}

}  // namespace strhound::sir
