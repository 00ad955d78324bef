#include "strhound/sir/cfg.hpp"

#include <algorithm>
#include <set>

namespace strhound::sir {

namespace {

// Raw successor instructions, ignoring out-of-range targets.
std::vector<int> raw_succs(const Method& m, int i) {
  const Instruction& ins = m.body[static_cast<std::size_t>(i)];
  const int n = static_cast<int>(m.body.size());
  std::vector<int> out;
  auto add = [&](int t) {
    if (t >= 0 && t < n && std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  switch (ins.op) {
    case Op::Return: break;
    case Op::Goto: add(ins.target); break;
    case Op::Switch:
      for (const auto& c : ins.cases) add(c.target);
      add(ins.target);
      break;
    default:
      if (i + 1 < n) add(i + 1);
      if (is_cond_branch(ins.op)) add(ins.target);
  }
  return out;
}

}  // namespace

Cfg::Cfg(const Method& m) : method_(&m) {
  const int n = static_cast<int>(m.body.size());
  std::vector<char> leader(static_cast<std::size_t>(n), 0);
  if (n > 0) leader[0] = 1;
  for (int i = 0; i < n; ++i) {
    const Instruction& ins = m.body[static_cast<std::size_t>(i)];
    if (!is_terminator(ins.op)) continue;
    if (i + 1 < n) leader[static_cast<std::size_t>(i + 1)] = 1;
    for (const int t : raw_succs(m, i)) leader[static_cast<std::size_t>(t)] = 1;
  }
  block_of_.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (leader[static_cast<std::size_t>(i)]) blocks_.push_back({i, i, {}, {}});
    blocks_.back().last = i;
    block_of_[static_cast<std::size_t>(i)] = static_cast<int>(blocks_.size()) - 1;
  }
  const int exit_id = block_count();
  for (int b = 0; b < block_count(); ++b) {
    BasicBlock& bb = blocks_[static_cast<std::size_t>(b)];
    const Instruction& last = m.body[static_cast<std::size_t>(bb.last)];
    for (const int t : raw_succs(m, bb.last)) {
      const int tb = block_of(t);
      if (std::find(bb.succs.begin(), bb.succs.end(), tb) == bb.succs.end()) bb.succs.push_back(tb);
    }
    if (last.op == Op::Return || (bb.succs.empty() && bb.last + 1 >= n)) {
      bb.succs.push_back(exit_id);
    }
  }

  // Blocks with no path to the exit get an artificial exit edge. Candidates
  // are visited in block order and reachability is refreshed after each edge.
  auto reaching_exit = [&] {
    std::vector<char> seen(static_cast<std::size_t>(exit_id + 1), 0);
    std::vector<std::vector<int>> rev(static_cast<std::size_t>(exit_id + 1));
    for (int b = 0; b < block_count(); ++b)
      for (const int s : blocks_[static_cast<std::size_t>(b)].succs) rev[static_cast<std::size_t>(s)].push_back(b);
    std::vector<int> stack{exit_id};
    seen[static_cast<std::size_t>(exit_id)] = 1;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (const int p : rev[static_cast<std::size_t>(x)])
        if (!seen[static_cast<std::size_t>(p)]) {
          seen[static_cast<std::size_t>(p)] = 1;
          stack.push_back(p);
        }
    }
    return seen;
  };
  auto seen = reaching_exit();
  for (int b = 0; b < block_count(); ++b) {
    if (seen[static_cast<std::size_t>(b)]) continue;
    blocks_[static_cast<std::size_t>(b)].succs.push_back(exit_id);
    synthetic_.push_back(b);
    seen = reaching_exit();
  }

  for (int b = 0; b < block_count(); ++b)
    for (const int s : blocks_[static_cast<std::size_t>(b)].succs) {
      if (s == exit_id) exit_preds_.push_back(b);
      else blocks_[static_cast<std::size_t>(s)].preds.push_back(b);
    }
  compute_post_dominators();
}

std::vector<int> Cfg::instruction_succs(int instr) const { return raw_succs(*method_, instr); }

void Cfg::compute_post_dominators() {
  // Cooper-Harvey-Kennedy iteration on the reverse graph rooted at the exit.
  const int nb = block_count();
  const int root = exit();
  auto rsuccs = [&](int x) -> const std::vector<int>& {
    return x == root ? exit_preds_ : blocks_[static_cast<std::size_t>(x)].preds;
  };
  auto rpreds = [&](int x) -> const std::vector<int>& {
    static const std::vector<int> none;
    return x == root ? none : blocks_[static_cast<std::size_t>(x)].succs;
  };

  std::vector<int> order;  // postorder of reverse graph
  std::vector<char> visited(static_cast<std::size_t>(nb + 1), 0);
  std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
  visited[static_cast<std::size_t>(root)] = 1;
  while (!stack.empty()) {
    auto& [x, k] = stack.back();
    const auto& ss = rsuccs(x);
    if (k < ss.size()) {
      const int y = ss[k++];
      if (!visited[static_cast<std::size_t>(y)]) {
        visited[static_cast<std::size_t>(y)] = 1;
        stack.push_back({y, 0});
      }
    } else {
      order.push_back(x);
      stack.pop_back();
    }
  }
  std::vector<int> po_num(static_cast<std::size_t>(nb + 1), -1);
  for (std::size_t k = 0; k < order.size(); ++k) po_num[static_cast<std::size_t>(order[k])] = static_cast<int>(k);

  std::vector<int> idom(static_cast<std::size_t>(nb + 1), -1);
  idom[static_cast<std::size_t>(root)] = root;
  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (po_num[static_cast<std::size_t>(a)] < po_num[static_cast<std::size_t>(b)]) a = idom[static_cast<std::size_t>(a)];
      while (po_num[static_cast<std::size_t>(b)] < po_num[static_cast<std::size_t>(a)]) b = idom[static_cast<std::size_t>(b)];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int x = *it;
      if (x == root) continue;
      int nd = -1;
      for (const int p : rpreds(x)) {
        if (idom[static_cast<std::size_t>(p)] < 0) continue;
        nd = nd < 0 ? p : intersect(p, nd);
      }
      if (nd >= 0 && idom[static_cast<std::size_t>(x)] != nd) {
        idom[static_cast<std::size_t>(x)] = nd;
        changed = true;
      }
    }
  }
  ipdom_.assign(idom.begin(), idom.begin() + nb);
}

}  // namespace strhound::sir
