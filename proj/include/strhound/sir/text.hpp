#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "strhound/sir/types.hpp"

namespace strhound::sir {

struct SyntaxError : std::runtime_error {
  SyntaxError(int line, int column, const std::string& msg);
  int line;
  int column;
};

/// Parses SIR text and runs the type checker (throws TypeError on failure).
Program parse_program(std::string_view text);
/// Parses without type checking; used by tools that repair programs.
Program parse_program_unchecked(std::string_view text);

std::string serialize(const Program& p);
std::string serialize_method(const Method& m);
std::string serialize_instruction(const Instruction& ins);

/// Quotes a string literal using the SIR escaping rules.
std::string quote_literal(std::u16string_view s);

}  // namespace strhound::sir
