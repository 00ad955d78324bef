#pragma once

#include <functional>
#include <set>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "strhound/sir/cfg.hpp"
#include "strhound/sir/types.hpp"

namespace strhound::sir {

/// Methods whose execution may read or write the VM stream channel, directly
/// or through callees. Used to thread a pseudo-variable through def/use.
class StreamSummary {
 public:
  StreamSummary() = default;
  explicit StreamSummary(const Program& p);
  bool touches(const Instruction& ins) const;

 private:
  std::set<std::pair<std::string, std::string>> methods_;  // (class, name) of user methods
};

/// Def/use chains, transitive control dependence and reachability for one
/// method. Variables are registers 0..register_count-1 plus one pseudo
/// variable (`stream_var()`) standing for the stream channel state.
class DataflowIndex {
 public:
  DataflowIndex(const Method& m, const Cfg& g, const StreamSummary* streams = nullptr);

  int var_count() const { return var_count_; }
  int stream_var() const { return var_count_ - 1; }
  int instruction_count() const { return static_cast<int>(defs_.size()); }

  const std::vector<int>& def(int i) const { return defs_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& use(int i) const { return uses_[static_cast<std::size_t>(i)]; }
  /// Definitions of `var` reaching its use at `i` (sorted). Empty when `i`
  /// does not use `var` or only parameters reach it.
  const std::vector<int>& ud(int var, int i) const;
  /// Uses of the definition of `var` at `i` (sorted).
  const std::vector<int>& du(int var, int i) const;
  /// Transitive control dependences of `i`: branch/switch instructions, sorted.
  const std::vector<int>& cd(int i) const;
  /// True when a CFG path of length >= 1 leads from `from` to `to`, i.e. from ∈ br(to).
  bool reaches(int from, int to) const;
  /// All instructions backwards reachable from `j`.
  std::vector<int> br(int j) const;
  /// True if some definition of `var` at an entry parameter may reach `i`.
  bool param_reaches(int var, int i) const;

  const Cfg& cfg() const { return *cfg_; }

 private:
  using Chains = std::vector<std::pair<int, std::vector<int>>>;
  static const std::vector<int>& lookup(const Chains& c, int var);

  const Cfg* cfg_;
  int var_count_ = 0;
  std::vector<std::vector<int>> defs_;
  std::vector<std::vector<int>> uses_;
  std::vector<Chains> ud_;
  std::vector<Chains> du_;
  std::vector<std::vector<int>> param_reach_;  // per instruction: used vars reachable from entry values
  std::vector<std::vector<int>> block_cd_;     // per block, transitive
  std::vector<boost::dynamic_bitset<>> block_reach_;
};

}  // namespace strhound::sir
