#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "strhound/obf/obf.hpp"
#include "strhound/sir/types.hpp"

namespace strhound::methclf {

/// One token per instruction: the upper-cased opcode mnemonic, except that
/// invokes become the intrinsic's qualified name or CALL for program methods.
std::vector<std::string> spr_tokens(const sir::Method& m);

struct Correlation {
  double rho = 0;
  bool degenerate = false;  // one side constant; rho reported as 0
};

/// Spearman's rank correlation with average ranks for ties.
Correlation spearman(std::span<const double> x, std::span<const double> y);

struct Signature {
  std::string id;  // "<scheme>/extracted-<k>" or "<scheme>/inline"
  std::vector<double> counts;  // over the set's alphabet
};

struct SignatureSet {
  int version = 1;
  double threshold = 0.85;
  std::vector<std::string> alphabet;  // sorted; tokens of known deobfuscation code
  std::vector<Signature> signatures;

  std::vector<double> project(const std::vector<std::string>& tokens) const;
  nlohmann::json to_json() const;
  static SignatureSet from_json(const nlohmann::json& j);
};

struct MethodMatch {
  bool match = false;
  std::string best;  // signature id, empty if nothing compared
  double rho = 0;
};

MethodMatch classify_method(const sir::Method& m, const SignatureSet& sigs);
MethodMatch classify_tokens(const std::vector<std::string>& tokens, const SignatureSet& sigs);

/// Deobfuscation code emitted by a scheme, as signature material.
struct DeobSample {
  std::string signature_id;
  std::vector<std::string> tokens;  // for inline variants: only the inserted code
  std::string cls;
  std::string method;  // extracted helper, or the host that holds inline code
  bool inlined = false;
};

/// Emitted methods (new, non-void, outside static initializers) and inline
/// host methods of one obfuscated variant.
std::vector<DeobSample> deobfuscation_samples(const obf::PlainProgram& plain, const obf::Obfuscated& obf);

SignatureSet build_signatures(const std::vector<DeobSample>& samples, double threshold = 0.85);

}  // namespace strhound::methclf
