#pragma once

// Brute-force reference checks shared by the unit tests and the acceptance run.

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "strhound/sir/cfg.hpp"
#include "strhound/sir/dataflow.hpp"
#include "strhound/sir/types.hpp"

namespace oracle {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

// i2 ∈ du(x, i1)  <=>  i1 ∈ ud(x, i2), over every (variable, instruction) pair.
inline std::optional<std::string> du_ud_duality(const strhound::sir::DataflowIndex& d) {
  const int n = d.instruction_count();
  for (int x = 0; x < d.var_count(); ++x)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) {
        const bool a = contains(d.du(x, i1), i2);
        const bool b = contains(d.ud(x, i2), i1);
        if (a != b)
          return "duality broken for r" + std::to_string(x) + " def@" + std::to_string(i1) + " use@" + std::to_string(i2);
      }
  return std::nullopt;
}

// j ∈ cd(i) ∧ k ∈ cd(j) ⟹ k ∈ cd(i); and cd only holds branches/switches.
inline std::optional<std::string> cd_closed(const strhound::sir::Method& m, const strhound::sir::DataflowIndex& d) {
  using strhound::sir::Op;
  const int n = d.instruction_count();
  for (int i = 0; i < n; ++i)
    for (const int j : d.cd(i)) {
      const Op op = m.body[static_cast<std::size_t>(j)].op;
      if (!strhound::sir::is_cond_branch(op) && op != Op::Switch)
        return "cd(" + std::to_string(i) + ") holds non-branch " + std::to_string(j);
      for (const int k : d.cd(j))
        if (!contains(d.cd(i), k))
          return "cd not transitive: " + std::to_string(k) + " in cd(" + std::to_string(j) + ") but not cd(" +
                 std::to_string(i) + ")";
    }
  return std::nullopt;
}

// Instruction-level DFS: i ∈ br(j) iff a path of >= 1 edge leads from i to j.
inline std::optional<std::string> br_matches_dfs(const strhound::sir::Method& m, const strhound::sir::Cfg& g,
                                                 const strhound::sir::DataflowIndex& d) {
  const int n = static_cast<int>(m.body.size());
  for (int i = 0; i < n; ++i) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack = g.instruction_succs(i);
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (seen[static_cast<std::size_t>(x)]) continue;
      seen[static_cast<std::size_t>(x)] = 1;
      for (const int y : g.instruction_succs(x)) stack.push_back(y);
    }
    for (int j = 0; j < n; ++j)
      if (static_cast<bool>(seen[static_cast<std::size_t>(j)]) != d.reaches(i, j))
        return "br mismatch for " + std::to_string(i) + " -> " + std::to_string(j);
  }
  return std::nullopt;
}

}  // namespace oracle
