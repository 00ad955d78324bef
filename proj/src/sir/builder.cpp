#include "strhound/sir/builder.hpp"

#include <stdexcept>

#include "strhound/sir/intrinsics.hpp"

namespace strhound::sir {

Instruction& BodyBuilder::push(Op op) {
  Instruction& i = body_.emplace_back();
  i.op = op;
  return i;
}

void BodyBuilder::const_int(int dst, SirType t, std::int64_t v) {
  auto& i = push(Op::Const);
  i.type = std::move(t);
  i.dst = dst;
  i.imm = v;
}

void BodyBuilder::const_str(int dst, std::u16string s) {
  auto& i = push(Op::Const);
  i.type = SirType::string();
  i.dst = dst;
  i.str = std::move(s);
}

void BodyBuilder::const_null(int dst) {
  auto& i = push(Op::Const);
  i.dst = dst;
  i.is_null = true;
}

void BodyBuilder::move(int dst, int src) {
  auto& i = push(Op::Move);
  i.dst = dst;
  i.srcs = {src};
}

void BodyBuilder::arith(Op op, SirType t, int dst, int a, int b) {
  auto& i = push(op);
  i.type = std::move(t);
  i.dst = dst;
  i.srcs = {a, b};
}

void BodyBuilder::neg(SirType t, int dst, int a) {
  auto& i = push(Op::Neg);
  i.type = std::move(t);
  i.dst = dst;
  i.srcs = {a};
}

void BodyBuilder::conv(SirType t, int dst, int a) {
  auto& i = push(Op::Conv);
  i.type = std::move(t);
  i.dst = dst;
  i.srcs = {a};
}

void BodyBuilder::branch(Op op, int a, int b, int target_label) {
  auto& i = push(op);
  i.srcs = {a, b};
  i.target = target_label;
  fixes_.push_back({size() - 1, -1});
}

void BodyBuilder::go(int target_label) {
  push(Op::Goto).target = target_label;
  fixes_.push_back({size() - 1, -1});
}

void BodyBuilder::switch_(int key, const std::vector<std::pair<std::int64_t, int>>& cases, int default_label) {
  auto& i = push(Op::Switch);
  i.srcs = {key};
  i.target = default_label;
  for (const auto& [k, l] : cases) i.cases.push_back({k, l});
  fixes_.push_back({size() - 1, -1});
  for (std::size_t c = 0; c < cases.size(); ++c) fixes_.push_back({size() - 1, static_cast<int>(c)});
}

void BodyBuilder::new_array(SirType elem, int dst, int size) {
  auto& i = push(Op::NewArray);
  i.type = std::move(elem);
  i.dst = dst;
  i.srcs = {size};
}

void BodyBuilder::aget(int dst, int arr, int idx) {
  auto& i = push(Op::ArrayLoad);
  i.dst = dst;
  i.srcs = {arr, idx};
}

void BodyBuilder::aput(int arr, int idx, int val) { push(Op::ArrayStore).srcs = {arr, idx, val}; }

void BodyBuilder::alen(int dst, int arr) {
  auto& i = push(Op::ArrayLength);
  i.dst = dst;
  i.srcs = {arr};
}

void BodyBuilder::new_object(int dst, std::string cls) {
  auto& i = push(Op::NewObject);
  i.dst = dst;
  i.cls = std::move(cls);
}

void BodyBuilder::sget(int dst, std::string cls, std::string field) {
  auto& i = push(Op::GetStatic);
  i.dst = dst;
  i.field = {std::move(cls), std::move(field)};
}

void BodyBuilder::sput(std::string cls, std::string field, int src) {
  auto& i = push(Op::PutStatic);
  i.srcs = {src};
  i.field = {std::move(cls), std::move(field)};
}

void BodyBuilder::iget(int dst, int obj, std::string cls, std::string field) {
  auto& i = push(Op::GetField);
  i.dst = dst;
  i.srcs = {obj};
  i.field = {std::move(cls), std::move(field)};
}

void BodyBuilder::iput(int obj, std::string cls, std::string field, int src) {
  auto& i = push(Op::PutField);
  i.srcs = {obj, src};
  i.field = {std::move(cls), std::move(field)};
}

void BodyBuilder::invoke(InvokeKind kind, std::string cls, std::string name, std::vector<SirType> params,
                         std::vector<int> args, int dst) {
  auto& i = push(Op::Invoke);
  i.kind = kind;
  i.method = {std::move(cls), std::move(name), std::move(params)};
  i.srcs = std::move(args);
  i.dst = dst;
}

void BodyBuilder::intrinsic(const std::string& qualified, std::vector<int> args, int dst) {
  const auto dot = qualified.find('.');
  invoke(InvokeKind::Intrinsic, qualified.substr(0, dot), qualified.substr(dot + 1), {}, std::move(args), dst);
}

void BodyBuilder::ret() { push(Op::Return); }
void BodyBuilder::ret(int src) { push(Op::Return).srcs = {src}; }

int BodyBuilder::imm(std::int64_t v, SirType t) {
  const int r = reg();
  const_int(r, std::move(t), v);
  return r;
}

int BodyBuilder::byte_array(const std::vector<std::uint8_t>& data) {
  const int n = imm(static_cast<std::int64_t>(data.size()));
  const int arr = reg();
  new_array(SirType::byte_(), arr, n);
  const int idx = reg();
  const int val = reg();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const_int(idx, SirType::int_(), static_cast<std::int64_t>(k));
    const_int(val, SirType::byte_(), static_cast<std::int8_t>(data[k]));
    aput(arr, idx, val);
  }
  return arr;
}

std::vector<Instruction> BodyBuilder::finish(int base) const {
  std::vector<Instruction> out = body_;
  auto resolve = [&](int l) {
    const int pos = labels_.at(static_cast<std::size_t>(l));
    if (pos < 0) throw std::logic_error("unbound label");
    return base + pos;
  };
  for (const auto& f : fixes_) {
    auto& ins = out[static_cast<std::size_t>(f.at)];
    if (f.case_index < 0) ins.target = resolve(ins.target);
    else {
      auto& c = ins.cases[static_cast<std::size_t>(f.case_index)];
      c.target = resolve(c.target);
    }
  }
  return out;
}

namespace {

void shift_targets(Instruction& ins, int delta) {
  if (is_cond_branch(ins.op) || ins.op == Op::Goto || ins.op == Op::Switch) ins.target += delta;
  for (auto& c : ins.cases) c.target += delta;
}

void remap_targets(Instruction& ins, const std::vector<int>& map) {
  if (is_cond_branch(ins.op) || ins.op == Op::Goto || ins.op == Op::Switch)
    ins.target = map[static_cast<std::size_t>(ins.target)];
  for (auto& c : ins.cases) c.target = map[static_cast<std::size_t>(c.target)];
}

}  // namespace

std::vector<int> splice(Method& m, const std::map<int, std::vector<Instruction>>& fragments) {
  const int n = static_cast<int>(m.body.size());
  std::vector<int> start(static_cast<std::size_t>(n) + 1);
  int pos = 0;
  for (int k = 0; k < n; ++k) {
    start[static_cast<std::size_t>(k)] = pos;
    auto it = fragments.find(k);
    pos += it == fragments.end() ? 1 : static_cast<int>(it->second.size());
  }
  start[static_cast<std::size_t>(n)] = pos;
  std::vector<Instruction> body;
  body.reserve(static_cast<std::size_t>(pos));
  for (int k = 0; k < n; ++k) {
    auto it = fragments.find(k);
    if (it == fragments.end()) {
      Instruction ins = m.body[static_cast<std::size_t>(k)];
      remap_targets(ins, start);
      body.push_back(std::move(ins));
      continue;
    }
    for (Instruction ins : it->second) {
      shift_targets(ins, start[static_cast<std::size_t>(k)]);
      body.push_back(std::move(ins));
    }
  }
  m.body = std::move(body);
  return start;
}

void insert_before(Method& m, int k, const std::vector<Instruction>& fragment) {
  const std::vector<Instruction>& frag = fragment;
  const int n = static_cast<int>(m.body.size());
  std::vector<int> start(static_cast<std::size_t>(n) + 1);
  const int extra = static_cast<int>(frag.size());
  for (int i = 0; i <= n; ++i) start[static_cast<std::size_t>(i)] = i <= k ? i : i + extra;
  // Branches to k land on the fragment start, which sits at old position k.
  std::vector<Instruction> body;
  body.reserve(static_cast<std::size_t>(n + extra));
  for (int i = 0; i < n; ++i) {
    if (i == k)
      for (Instruction f : frag) {
        shift_targets(f, k);
        body.push_back(std::move(f));
      }
    Instruction ins = m.body[static_cast<std::size_t>(i)];
    remap_targets(ins, start);
    body.push_back(std::move(ins));
  }
  m.body = std::move(body);
}

}  // namespace strhound::sir
