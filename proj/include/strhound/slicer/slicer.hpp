#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "strhound/methclf/methclf.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/sir/dataflow.hpp"
#include "strhound/sir/types.hpp"
#include "strhound/strclf/strclf.hpp"

namespace strhound::slicer {

enum Reason : unsigned {
  kObfuscatedString = 1,   // (i) a literal in the method looks obfuscated
  kCallsDeobfuscator = 2,  // (ii) calls a method the method classifier flags
  kIsDeobfuscator = 4,     // (iii) the method itself is flagged
};
std::string reasons_to_string(unsigned reasons);  // e.g. "i,iii"

struct Models {
  const strclf::DecisionTree* tree = nullptr;
  const strclf::FeatureExtractor* features = nullptr;  // null uses the standard extractor
  const methclf::SignatureSet* signatures = nullptr;
};

struct Candidate {
  sir::MethodId id;
  unsigned reasons = 0;
  std::vector<std::u16string> flagged;  // literals classified obfuscated
  std::vector<std::string> deobfuscators;  // callees flagged by the method classifier, "Cls.name"
};

/// Methods (static initializers included) with at least one LoI for which
/// some reason fires, in program order. A missing model disables the
/// reasons that need it.
std::vector<Candidate> find_candidate_methods(const sir::Program& p, const Models& models);

struct Loi {
  int index = 0;
  obf::LoiKind kind = obf::LoiKind::CallArg;
  std::vector<int> operands;  // registers carrying char sequences into the instruction
};

/// Instructions consuming a char sequence as a parameter, a stored field or
/// array value, or a return value. Builder receivers do not count; string
/// receivers do.
std::vector<Loi> find_lois(const sir::Program& p, const sir::Class& c, const sir::Method& m);

struct Criterion {
  int index = 0;  // the instruction producing the string
  int loi = 0;
};

/// Definition sites of the LoI's char-sequence operands, constants excluded;
/// one criterion per distinct site, ascending.
std::vector<Criterion> find_criteria(const sir::Method& m, const sir::DataflowIndex& dfi, const Loi& loi);

/// Worklist slice from `s_crit`: definitions of used variables, control
/// dependences except those of the criterion, and uses of defined variables
/// that can still reach the LoI. The LoI is never part of the slice.
std::set<int> slice(const sir::Method& m, const sir::DataflowIndex& dfi, int loi, int s_crit);

/// Text dump of a slice: kept instructions, plus the criterion's guards
/// marked as cut.
std::string dump_slice(const sir::Method& m, const sir::DataflowIndex& dfi, const std::set<int>& n_slice, int loi,
                       int s_crit);

}  // namespace strhound::slicer
