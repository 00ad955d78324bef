#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strhound/sir/types.hpp"

namespace strhound::sir {

struct TypeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Abstract register state at one program point.
struct RegType {
  enum class Kind : std::uint8_t { Unset, Conflict, Null, Value };
  Kind kind = Kind::Unset;
  SirType type;

  static RegType unset() { return {}; }
  static RegType null() { return {Kind::Null, {}}; }
  static RegType value(SirType t) { return {Kind::Value, std::move(t)}; }
  bool is_value() const { return kind == Kind::Value; }
  bool usable() const { return kind == Kind::Value || kind == Kind::Null; }
  friend bool operator==(const RegType&, const RegType&) = default;
};

/// Register types before each instruction; nullopt for unreachable instructions.
struct MethodTypes {
  std::vector<std::optional<std::vector<RegType>>> before;
};

bool is_subclass(const Program& p, std::string_view sub, std::string_view super);
/// True if a value of `from` may be stored where `to` is declared.
bool assignable(const Program& p, const RegType& from, const SirType& to);

/// Checks one method body; throws TypeError naming the offending instruction.
MethodTypes check_method(const Program& p, const Class& c, const Method& m);
/// Computes register types without throwing; instructions where the check
/// would fail still get a best-effort state.
MethodTypes infer_types(const Program& p, const Class& c, const Method& m);

/// Structural checks (unique names, hierarchy, entries) plus check_method on every body.
void typecheck(const Program& p);

/// Resolves the method a static/special/virtual invoke dispatches to statically,
/// searching superclasses. Returns nullptr when not declared.
const Method* resolve_invoke(const Program& p, const MethodRef& ref, const Class** owner = nullptr);

/// Return type of an invoke instruction, or nullopt if it cannot be resolved.
std::optional<SirType> invoke_return_type(const Program& p, const Instruction& ins,
                                          const std::vector<RegType>* regs = nullptr);

}  // namespace strhound::sir
