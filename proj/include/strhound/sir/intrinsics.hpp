#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strhound/sir/types.hpp"

namespace strhound::sir {

enum class IntrinsicId {
  StrLen,
  StrCharAt,
  StrConcat,
  StrSubstring,
  StrFromChars,
  StrToChars,
  StrIndexOf,
  StrEquals,
  StrHash,
  StrToBytes,
  BuilderNew,
  BuilderAppendString,
  BuilderAppendChar,
  BuilderAppendInt,
  BuilderToString,
  BytesToString,
  B64Encode,
  B64Decode,
  B85Encode,
  B85Decode,
  UrlEncode,
  UrlDecode,
  BigIntEncodeBase,
  BigIntDecodeBase,
  AesEncrypt,
  AesDecrypt,
  StackCallerClass,
  StackCallerMethod,
  StreamWrite,
  StreamRead,
  LogRecord,
  SysOut,
};

struct IntrinsicSig {
  IntrinsicId id;
  std::string_view qualified_name;  // e.g. "B64.decode"
  std::vector<SirType> params;
  SirType ret;
};

/// All intrinsic overloads, in catalog order.
const std::vector<IntrinsicSig>& intrinsic_catalog();

/// True if some intrinsic carries this qualified name ("Str.len").
bool is_intrinsic_name(std::string_view qualified_name);

/// Argument-type predicate used during overload resolution: returns true when
/// a value of type `arg` may be passed where `param` is expected. `arg` may be
/// nullopt for the null literal.
bool assignable(const std::optional<SirType>& arg, const SirType& param);

/// Picks the overload for `qualified_name` matching `args`; exact matches win
/// over widening matches.
const IntrinsicSig* resolve_intrinsic(std::string_view qualified_name,
                                      std::span<const std::optional<SirType>> args);

const IntrinsicSig& intrinsic_sig(IntrinsicId id);

/// Intrinsics that read or write the VM's stream channel.
inline bool touches_stream(IntrinsicId id) { return id == IntrinsicId::StreamWrite || id == IntrinsicId::StreamRead; }

}  // namespace strhound::sir
