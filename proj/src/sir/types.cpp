#include "strhound/sir/types.hpp"

#include <array>

namespace strhound::sir {

namespace {

constexpr std::array<std::string_view, 34> kMnemonics = {
    "const", "move",  "add",   "sub",   "mul",  "div",   "rem",       "xor",  "and",  "or",   "shl",  "shr",
    "ushr",  "neg",   "conv",  "if-eq", "if-ne", "if-lt", "if-le",    "if-gt", "if-ge", "goto", "switch",
    "new-array", "aget", "aput", "alen", "new", "sget", "sput", "iget", "iput", "invoke", "return",
};

}  // namespace

std::string SirType::to_string() const {
  std::string s;
  switch (base_) {
    case TypeKind::Int: s = "int"; break;
    case TypeKind::Long: s = "long"; break;
    case TypeKind::Byte: s = "byte"; break;
    case TypeKind::Char: s = "char"; break;
    case TypeKind::Bool: s = "bool"; break;
    case TypeKind::String: s = "string"; break;
    case TypeKind::Object: s = class_name_; break;
    case TypeKind::Void: s = "void"; break;
  }
  for (int i = 0; i < dims_; ++i) s += "[]";
  return s;
}

std::string_view mnemonic(Op op) { return kMnemonics[static_cast<std::size_t>(op)]; }

std::optional<Op> op_from_mnemonic(std::string_view s) {
  for (std::size_t i = 0; i < kMnemonics.size(); ++i)
    if (kMnemonics[i] == s) return static_cast<Op>(i);
  return std::nullopt;
}

std::string_view to_string(InvokeKind k) {
  switch (k) {
    case InvokeKind::Static: return "static";
    case InvokeKind::Virtual: return "virtual";
    case InvokeKind::Special: return "special";
    case InvokeKind::Intrinsic: return "intrinsic";
  }
  return "?";
}

std::string Method::signature() const {
  std::string s = name + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) s += ",";
    s += params[i].to_string();
  }
  s += ")" + return_type.to_string();
  return s;
}

const Method* Class::find_method(std::string_view n, const std::vector<SirType>* params) const {
  if (n == kStaticInitName && static_init && (!params || params->empty())) return &*static_init;
  for (const auto& m : methods)
    if (m.name == n && (!params || m.params == *params)) return &m;
  return nullptr;
}

Method* Class::find_method(std::string_view n, const std::vector<SirType>* params) {
  return const_cast<Method*>(std::as_const(*this).find_method(n, params));
}

const Field* Class::find_static_field(std::string_view n) const {
  for (const auto& f : static_fields)
    if (f.name == n) return &f;
  return nullptr;
}

const Field* Class::find_instance_field(std::string_view n) const {
  for (const auto& f : instance_fields)
    if (f.name == n) return &f;
  return nullptr;
}

const Class* Program::find_class(std::string_view n) const {
  for (const auto& c : classes)
    if (c.name == n) return &c;
  return nullptr;
}

Class* Program::find_class(std::string_view n) { return const_cast<Class*>(std::as_const(*this).find_class(n)); }

const ExternalMethod* Program::find_external(const MethodRef& ref) const {
  for (const auto& e : externals)
    if (e.cls == ref.cls && e.name == ref.name && e.params == ref.params) return &e;
  return nullptr;
}

const Method* find_method(const Program& p, const MethodId& id) {
  const Class* c = p.find_class(id.cls);
  return c ? c->find_method(id.name, &id.params) : nullptr;
}

Method* find_method(Program& p, const MethodId& id) {
  Class* c = p.find_class(id.cls);
  return c ? c->find_method(id.name, &id.params) : nullptr;
}

}  // namespace strhound::sir
