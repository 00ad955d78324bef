#pragma once

#include <vector>

#include "strhound/sir/types.hpp"

namespace strhound::sir {

struct BasicBlock {
  int first = 0;  // instruction range [first, last]
  int last = 0;
  std::vector<int> succs;  // block ids; the synthetic exit is id == block count
  std::vector<int> preds;
};

/// Control-flow graph over basic blocks. Blocks are numbered by ascending
/// first instruction; block 0 is the entry. The synthetic exit node has id
/// `exit()` and is the successor of every return and of every block that
/// would otherwise have no path to a return.
class Cfg {
 public:
  explicit Cfg(const Method& m);

  int block_count() const { return static_cast<int>(blocks_.size()); }
  int exit() const { return block_count(); }
  const std::vector<BasicBlock>& blocks() const { return blocks_; }
  const BasicBlock& block(int b) const { return blocks_[static_cast<std::size_t>(b)]; }
  int block_of(int instr) const { return block_of_[static_cast<std::size_t>(instr)]; }
  int instruction_count() const { return static_cast<int>(block_of_.size()); }

  /// Predecessors of the synthetic exit.
  const std::vector<int>& exit_preds() const { return exit_preds_; }
  /// Blocks that received an artificial edge to the exit (no path to a return).
  const std::vector<int>& synthetic_exit_blocks() const { return synthetic_; }

  /// Immediate post-dominator per block (exit() for blocks post-dominated only by the exit).
  const std::vector<int>& ipdom() const { return ipdom_; }

  /// Successor instructions of an instruction (within the method; no exit).
  std::vector<int> instruction_succs(int instr) const;

 private:
  void compute_post_dominators();

  const Method* method_;
  std::vector<BasicBlock> blocks_;
  std::vector<int> block_of_;
  std::vector<int> exit_preds_;
  std::vector<int> synthetic_;
  std::vector<int> ipdom_;
};

}  // namespace strhound::sir
