#include "strhound/sir/intrinsics.hpp"

namespace strhound::sir {

namespace {

std::vector<IntrinsicSig> build_catalog() {
  const auto I = SirType::int_();
  const auto C = SirType::char_();
  const auto Z = SirType::bool_();
  const auto S = SirType::string();
  const auto V = SirType::void_();
  const auto SB = SirType::builder();
  const auto BA = SirType::array_of(SirType::byte_());
  const auto CA = SirType::array_of(SirType::char_());
  using enum IntrinsicId;
  return {
      {StrLen, "Str.len", {S}, I},
      {StrCharAt, "Str.charAt", {S, I}, C},
      {StrConcat, "Str.concat", {S, S}, S},
      {StrSubstring, "Str.substring", {S, I, I}, S},
      {StrFromChars, "Str.fromChars", {CA}, S},
      {StrToChars, "Str.toChars", {S}, CA},
      {StrIndexOf, "Str.indexOf", {S, S}, I},
      {StrEquals, "Str.equals", {S, S}, Z},
      {StrHash, "Str.hash", {S}, I},
      {StrToBytes, "Str.toBytes", {S}, BA},
      {BuilderNew, "Builder.new", {}, SB},
      {BuilderAppendString, "Builder.append", {SB, S}, SB},
      {BuilderAppendChar, "Builder.append", {SB, C}, SB},
      {BuilderAppendInt, "Builder.append", {SB, I}, SB},
      {BuilderToString, "Builder.toString", {SB}, S},
      {BytesToString, "Bytes.toString", {BA}, S},
      {B64Encode, "B64.encode", {BA}, S},
      {B64Decode, "B64.decode", {S}, BA},
      {B85Encode, "B85.encode", {BA}, S},
      {B85Decode, "B85.decode", {S}, BA},
      {UrlEncode, "Url.encode", {S}, S},
      {UrlDecode, "Url.decode", {S}, S},
      {BigIntEncodeBase, "BigInt.encodeBase", {BA, I}, S},
      {BigIntDecodeBase, "BigInt.decodeBase", {S, I}, BA},
      {AesEncrypt, "Aes128Ecb.encrypt", {BA, BA}, BA},
      {AesDecrypt, "Aes128Ecb.decrypt", {BA, BA}, BA},
      {StackCallerClass, "Stack.callerClass", {}, S},
      {StackCallerMethod, "Stack.callerMethod", {}, S},
      {StreamWrite, "Stream.write", {BA}, V},
      {StreamRead, "Stream.read", {}, BA},
      {LogRecord, "Log.record", {S}, V},
      {SysOut, "Sys.out", {S}, V},
  };
}

}  // namespace

const std::vector<IntrinsicSig>& intrinsic_catalog() {
  static const std::vector<IntrinsicSig> catalog = build_catalog();
  return catalog;
}

bool is_intrinsic_name(std::string_view qualified_name) {
  for (const auto& s : intrinsic_catalog())
    if (s.qualified_name == qualified_name) return true;
  return false;
}

bool assignable(const std::optional<SirType>& arg, const SirType& param) {
  if (!arg) return param.is_reference();
  if (*arg == param) return true;
  if (param.is(TypeKind::Int)) return arg->is_int_like();
  if (param.is(TypeKind::Long)) return arg->is_int_like() || arg->is(TypeKind::Long);
  return false;
}

const IntrinsicSig* resolve_intrinsic(std::string_view qualified_name, std::span<const std::optional<SirType>> args) {
  const IntrinsicSig* widening = nullptr;
  for (const auto& s : intrinsic_catalog()) {
    if (s.qualified_name != qualified_name || s.params.size() != args.size()) continue;
    bool exact = true;
    bool ok = true;
    for (std::size_t i = 0; i < args.size() && ok; ++i) {
      if (!assignable(args[i], s.params[i])) ok = false;
      else if (!args[i] || *args[i] != s.params[i]) exact = false;
    }
    if (!ok) continue;
    if (exact) return &s;
    if (!widening) widening = &s;
  }
  return widening;
}

const IntrinsicSig& intrinsic_sig(IntrinsicId id) {
  for (const auto& s : intrinsic_catalog())
    if (s.id == id) return s;
  return intrinsic_catalog().front();
}

}  // namespace strhound::sir
