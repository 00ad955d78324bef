#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "strhound/sir/types.hpp"

namespace strhound::sir {

/// Emits instruction sequences with symbolic branch labels. Registers are
/// handed out upward from `first_reg`; `finish` resolves labels relative to
/// the position the fragment will occupy.
class BodyBuilder {
 public:
  explicit BodyBuilder(int first_reg = 0) : next_reg_(first_reg) {}

  int reg() { return next_reg_++; }
  int next_reg() const { return next_reg_; }
  int label() { return static_cast<int>(labels_.emplace_back(-1), labels_.size() - 1); }
  void bind(int l) { labels_[static_cast<std::size_t>(l)] = static_cast<int>(body_.size()); }
  int size() const { return static_cast<int>(body_.size()); }

  void const_int(int dst, SirType t, std::int64_t v);
  void const_str(int dst, std::u16string s);
  void const_null(int dst);
  void move(int dst, int src);
  void arith(Op op, SirType t, int dst, int a, int b);
  void neg(SirType t, int dst, int a);
  void conv(SirType t, int dst, int a);
  void branch(Op op, int a, int b, int target_label);
  void go(int target_label);
  void switch_(int key, const std::vector<std::pair<std::int64_t, int>>& cases, int default_label);
  void new_array(SirType elem, int dst, int size);
  void aget(int dst, int arr, int idx);
  void aput(int arr, int idx, int val);
  void alen(int dst, int arr);
  void new_object(int dst, std::string cls);
  void sget(int dst, std::string cls, std::string field);
  void sput(std::string cls, std::string field, int src);
  void iget(int dst, int obj, std::string cls, std::string field);
  void iput(int obj, std::string cls, std::string field, int src);
  void invoke(InvokeKind kind, std::string cls, std::string name, std::vector<SirType> params, std::vector<int> args,
              int dst = -1);
  /// `qualified` is "Ns.name".
  void intrinsic(const std::string& qualified, std::vector<int> args, int dst = -1);
  void ret();
  void ret(int src);

  /// Convenience: fresh register holding an int constant.
  int imm(std::int64_t v, SirType t = SirType::int_());
  /// Byte array filled from `data`.
  int byte_array(const std::vector<std::uint8_t>& data);

  std::vector<Instruction> finish(int base) const;

 private:
  struct Fix {
    int at;
    int case_index;  // -1 for the main target
  };
  Instruction& push(Op op);
  std::vector<Instruction> body_;
  std::vector<int> labels_;
  std::vector<Fix> fixes_;
  int next_reg_;
};

/// Replaces instruction `k` of `m` by `fragments[k]` for every key, keeping
/// branch targets that point at a replaced instruction pointed at the start
/// of its fragment. Fragments must have been finished with base 0; their
/// internal targets are shifted into place. Returns the new index of every
/// old instruction (start of its fragment), plus one past the end.
std::vector<int> splice(Method& m, const std::map<int, std::vector<Instruction>>& fragments);

/// Inserts `fragment` (finished with base 0) before instruction `k`; branches
/// that targeted `k` now target the fragment start.
void insert_before(Method& m, int k, const std::vector<Instruction>& fragment);

}  // namespace strhound::sir
