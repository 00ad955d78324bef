#include "strhound/sir/dataflow.hpp"

#include <algorithm>

#include "strhound/sir/intrinsics.hpp"

namespace strhound::sir {

namespace {

bool is_stream_intrinsic(const Instruction& ins) {
  if (ins.op != Op::Invoke || ins.kind != InvokeKind::Intrinsic) return false;
  return ins.method.cls == "Stream";
}

}  // namespace

StreamSummary::StreamSummary(const Program& p) {
  bool changed = true;
  auto calls_touching = [&](const Instruction& ins) {
    if (ins.op != Op::Invoke || ins.kind == InvokeKind::Intrinsic) return false;
    if (methods_.count({ins.method.cls, ins.method.name})) return true;
    if (ins.kind == InvokeKind::Virtual)
      for (const auto& [c, n] : methods_)
        if (n == ins.method.name) return true;
    return false;
  };
  while (changed) {
    changed = false;
    for_each_method(p, [&](const Class& c, const Method& m) {
      if (methods_.count({c.name, m.name})) return;
      for (const auto& ins : m.body)
        if (is_stream_intrinsic(ins) || calls_touching(ins)) {
          methods_.insert({c.name, m.name});
          changed = true;
          return;
        }
    });
  }
}

bool StreamSummary::touches(const Instruction& ins) const {
  if (is_stream_intrinsic(ins)) return true;
  if (ins.op != Op::Invoke || ins.kind == InvokeKind::Intrinsic) return false;
  if (methods_.count({ins.method.cls, ins.method.name})) return true;
  if (ins.kind == InvokeKind::Virtual)
    for (const auto& [c, n] : methods_)
      if (n == ins.method.name) return true;
  return false;
}

const std::vector<int>& DataflowIndex::lookup(const Chains& c, int var) {
  static const std::vector<int> empty;
  for (const auto& [v, list] : c)
    if (v == var) return list;
  return empty;
}

const std::vector<int>& DataflowIndex::ud(int var, int i) const { return lookup(ud_[static_cast<std::size_t>(i)], var); }
const std::vector<int>& DataflowIndex::du(int var, int i) const { return lookup(du_[static_cast<std::size_t>(i)], var); }

const std::vector<int>& DataflowIndex::cd(int i) const {
  return block_cd_[static_cast<std::size_t>(cfg_->block_of(i))];
}

bool DataflowIndex::reaches(int from, int to) const {
  const int bf = cfg_->block_of(from);
  const int bt = cfg_->block_of(to);
  if (bf == bt && from < to) return true;
  return block_reach_[static_cast<std::size_t>(bf)][static_cast<std::size_t>(bt)];
}

std::vector<int> DataflowIndex::br(int j) const {
  std::vector<int> out;
  for (int i = 0; i < instruction_count(); ++i)
    if (reaches(i, j)) out.push_back(i);
  return out;
}

bool DataflowIndex::param_reaches(int var, int i) const {
  const auto& v = param_reach_[static_cast<std::size_t>(i)];
  return std::find(v.begin(), v.end(), var) != v.end();
}

DataflowIndex::DataflowIndex(const Method& m, const Cfg& g, const StreamSummary* streams) : cfg_(&g) {
  const int n = static_cast<int>(m.body.size());
  const int nregs = m.register_count;
  var_count_ = nregs + 1;
  const int svar = nregs;
  defs_.resize(static_cast<std::size_t>(n));
  uses_.resize(static_cast<std::size_t>(n));
  ud_.resize(static_cast<std::size_t>(n));
  du_.resize(static_cast<std::size_t>(n));
  param_reach_.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    const Instruction& ins = m.body[static_cast<std::size_t>(i)];
    auto& u = uses_[static_cast<std::size_t>(i)];
    for (const int r : ins.srcs)
      if (r >= 0 && r < nregs && std::find(u.begin(), u.end(), r) == u.end()) u.push_back(r);
    auto& d = defs_[static_cast<std::size_t>(i)];
    if (ins.has_dst() && ins.dst < nregs) d.push_back(ins.dst);
    const bool st = streams ? streams->touches(ins) : is_stream_intrinsic(ins);
    if (st) {
      u.push_back(svar);
      d.push_back(svar);
    }
    std::sort(u.begin(), u.end());
  }

  // Reaching definitions. Definition ids: one per (instruction, var) def, plus
  // one entry definition per variable (parameters and unassigned registers).
  std::vector<std::pair<int, int>> def_sites;  // (instr or -1, var)
  std::vector<std::vector<int>> defs_of_var(static_cast<std::size_t>(var_count_));
  for (int v = 0; v < var_count_; ++v) {
    defs_of_var[static_cast<std::size_t>(v)].push_back(static_cast<int>(def_sites.size()));
    def_sites.push_back({-1, v});
  }
  std::vector<std::vector<int>> def_ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (const int v : defs_[static_cast<std::size_t>(i)]) {
      def_ids[static_cast<std::size_t>(i)].push_back(static_cast<int>(def_sites.size()));
      defs_of_var[static_cast<std::size_t>(v)].push_back(static_cast<int>(def_sites.size()));
      def_sites.push_back({i, v});
    }
  const std::size_t nd = def_sites.size();
  const int nb = g.block_count();

  std::vector<boost::dynamic_bitset<>> gen(static_cast<std::size_t>(nb), boost::dynamic_bitset<>(nd));
  std::vector<boost::dynamic_bitset<>> kill(static_cast<std::size_t>(nb), boost::dynamic_bitset<>(nd));
  for (int b = 0; b < nb; ++b) {
    const auto& bb = g.block(b);
    auto& gb = gen[static_cast<std::size_t>(b)];
    auto& kb = kill[static_cast<std::size_t>(b)];
    for (int i = bb.first; i <= bb.last; ++i) {
      for (std::size_t k = 0; k < def_ids[static_cast<std::size_t>(i)].size(); ++k) {
        const int id = def_ids[static_cast<std::size_t>(i)][k];
        const int v = def_sites[static_cast<std::size_t>(id)].second;
        for (const int other : defs_of_var[static_cast<std::size_t>(v)]) {
          gb.reset(static_cast<std::size_t>(other));
          kb.set(static_cast<std::size_t>(other));
        }
        gb.set(static_cast<std::size_t>(id));
      }
    }
  }
  std::vector<boost::dynamic_bitset<>> in(static_cast<std::size_t>(nb), boost::dynamic_bitset<>(nd));
  std::vector<boost::dynamic_bitset<>> out(static_cast<std::size_t>(nb), boost::dynamic_bitset<>(nd));
  boost::dynamic_bitset<> entry_defs(nd);
  for (int v = 0; v < var_count_; ++v) entry_defs.set(static_cast<std::size_t>(v));
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b = 0; b < nb; ++b) {
      boost::dynamic_bitset<> inb(nd);
      if (b == 0) inb = entry_defs;
      for (const int p : g.block(b).preds) inb |= out[static_cast<std::size_t>(p)];
      boost::dynamic_bitset<> outb = gen[static_cast<std::size_t>(b)] | (inb - kill[static_cast<std::size_t>(b)]);
      if (inb != in[static_cast<std::size_t>(b)] || outb != out[static_cast<std::size_t>(b)]) {
        in[static_cast<std::size_t>(b)] = std::move(inb);
        out[static_cast<std::size_t>(b)] = std::move(outb);
        changed = true;
      }
    }
  }

  for (int b = 0; b < nb; ++b) {
    const auto& bb = g.block(b);
    boost::dynamic_bitset<> cur = in[static_cast<std::size_t>(b)];
    for (int i = bb.first; i <= bb.last; ++i) {
      for (const int v : uses_[static_cast<std::size_t>(i)]) {
        std::vector<int> list;
        for (const int id : defs_of_var[static_cast<std::size_t>(v)]) {
          if (!cur.test(static_cast<std::size_t>(id))) continue;
          const int site = def_sites[static_cast<std::size_t>(id)].first;
          if (site < 0) param_reach_[static_cast<std::size_t>(i)].push_back(v);
          else list.push_back(site);
        }
        std::sort(list.begin(), list.end());
        for (const int d : list) {
          auto& chains = du_[static_cast<std::size_t>(d)];
          auto it = std::find_if(chains.begin(), chains.end(), [&](const auto& c) { return c.first == v; });
          if (it == chains.end()) chains.push_back({v, {i}});
          else it->second.push_back(i);
        }
        ud_[static_cast<std::size_t>(i)].push_back({v, std::move(list)});
      }
      for (const int id : def_ids[static_cast<std::size_t>(i)]) {
        const int v = def_sites[static_cast<std::size_t>(id)].second;
        for (const int other : defs_of_var[static_cast<std::size_t>(v)]) cur.reset(static_cast<std::size_t>(other));
        cur.set(static_cast<std::size_t>(id));
      }
    }
  }
  for (auto& chains : du_)
    for (auto& [v, list] : chains) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
  // Every defining instruction gets an entry, even without uses.
  for (int i = 0; i < n; ++i)
    for (const int v : defs_[static_cast<std::size_t>(i)]) {
      auto& chains = du_[static_cast<std::size_t>(i)];
      if (std::none_of(chains.begin(), chains.end(), [&](const auto& c) { return c.first == v; })) chains.push_back({v, {}});
    }

  // Control dependence from the post-dominator tree: for each edge A->B,
  // every node on the ipdom chain from B up to (excluding) ipdom(A) depends on A.
  const auto& ipdom = g.ipdom();
  const int exit_id = g.exit();
  std::vector<std::vector<int>> direct(static_cast<std::size_t>(nb));
  for (int a = 0; a < nb; ++a) {
    const auto& ba = g.block(a);
    const Op term = m.body[static_cast<std::size_t>(ba.last)].op;
    if (!is_cond_branch(term) && term != Op::Switch) continue;
    for (const int s : ba.succs) {
      int runner = s;
      while (runner != exit_id && runner != ipdom[static_cast<std::size_t>(a)]) {
        auto& dl = direct[static_cast<std::size_t>(runner)];
        if (std::find(dl.begin(), dl.end(), a) == dl.end()) dl.push_back(a);
        runner = ipdom[static_cast<std::size_t>(runner)];
      }
    }
  }
  block_cd_.resize(static_cast<std::size_t>(nb));
  for (int b = 0; b < nb; ++b) {
    std::vector<char> seen(static_cast<std::size_t>(nb), 0);
    std::vector<int> stack = direct[static_cast<std::size_t>(b)];
    std::vector<int> result;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      if (seen[static_cast<std::size_t>(a)]) continue;
      seen[static_cast<std::size_t>(a)] = 1;
      result.push_back(g.block(a).last);
      for (const int x : direct[static_cast<std::size_t>(a)]) stack.push_back(x);
    }
    std::sort(result.begin(), result.end());
    block_cd_[static_cast<std::size_t>(b)] = std::move(result);
  }

  // Block reachability over paths of length >= 1.
  block_reach_.assign(static_cast<std::size_t>(nb), boost::dynamic_bitset<>(static_cast<std::size_t>(nb)));
  for (int b = 0; b < nb; ++b) {
    auto& r = block_reach_[static_cast<std::size_t>(b)];
    std::vector<int> stack;
    for (const int s : g.block(b).succs)
      if (s != exit_id) stack.push_back(s);
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (r.test(static_cast<std::size_t>(x))) continue;
      r.set(static_cast<std::size_t>(x));
      for (const int s : g.block(x).succs)
        if (s != exit_id) stack.push_back(s);
    }
  }
}

}  // namespace strhound::sir
