#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

#include "strhound/strclf/strclf.hpp"

namespace strhound::strclf {

namespace {

double entropy2(double a, double b) {
  const double n = a + b;
  double h = 0;
  if (a > 0) h -= a / n * std::log2(a / n);
  if (b > 0) h -= b / n * std::log2(b / n);
  return h;
}

class Grower {
 public:
  Grower(const std::vector<Sample>& d, const TreeOptions& o, std::vector<DecisionTree::Node>& nodes)
      : d_(d), o_(o), nodes_(nodes), left_side_(d.size(), 0) {}

  // `sorted[f]` lists the node's samples ordered by feature f.
  int build(std::vector<std::vector<int>> sorted, int depth) {
    const auto& any = sorted[0];
    const int n = static_cast<int>(any.size());
    int n_obf = 0;
    for (const int i : any) n_obf += d_[static_cast<std::size_t>(i)].y == Label::Obfuscated;
    const int n_plain = n - n_obf;
    const int id = static_cast<int>(nodes_.size());
    DecisionTree::Node leaf;
    leaf.label = n_obf > n_plain ? Label::Obfuscated : Label::Plain;
    leaf.n_plain = n_plain;
    leaf.n_obfuscated = n_obf;
    nodes_.push_back(leaf);
    if (n_obf == 0 || n_plain == 0 || n < 2 * o_.min_leaf || depth >= o_.max_depth) return id;

    const double parent = entropy2(n_plain, n_obf);
    double best_gain = 1e-12;
    int best_f = -1;
    double best_thr = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto& order = sorted[f];
      int l_obf = 0;
      for (int k = 0; k + 1 < n; ++k) {
        const Sample& s = d_[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        l_obf += s.y == Label::Obfuscated;
        const double v = s.x[f];
        const double next = d_[static_cast<std::size_t>(order[static_cast<std::size_t>(k + 1)])].x[f];
        if (v == next) continue;
        const int nl = k + 1, nr = n - nl;
        if (nl < o_.min_leaf || nr < o_.min_leaf) continue;
        const int r_obf = n_obf - l_obf;
        const double gain = parent - (nl * entropy2(nl - l_obf, l_obf) + nr * entropy2(nr - r_obf, r_obf)) / n;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_thr = v + (next - v) / 2;
        }
      }
    }
    if (best_f < 0) return id;

    for (const int i : any) left_side_[static_cast<std::size_t>(i)] = d_[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(best_f)] <= best_thr;
    std::vector<std::vector<int>> left(kFeatureCount), right(kFeatureCount);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      for (const int i : sorted[f]) (left_side_[static_cast<std::size_t>(i)] ? left[f] : right[f]).push_back(i);
      std::vector<int>().swap(sorted[f]);
    }
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_f;
    node.threshold = best_thr;
    node.left = l;
    node.right = r;
    return id;
  }

 private:
  const std::vector<Sample>& d_;
  TreeOptions o_;
  std::vector<DecisionTree::Node>& nodes_;
  std::vector<char> left_side_;
};

}  // namespace

void Confusion::add(Label truth, Label predicted) {
  if (truth == Label::Obfuscated) (predicted == Label::Obfuscated ? tp : fn) += 1;
  else (predicted == Label::Obfuscated ? fp : tn) += 1;
}

DecisionTree DecisionTree::grow(const std::vector<Sample>& train, const TreeOptions& opts) {
  DecisionTree t;
  if (train.empty()) {
    t.nodes_.push_back({});
    return t;
  }
  std::vector<std::vector<int>> sorted(kFeatureCount);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    auto& v = sorted[f];
    v.resize(train.size());
    std::iota(v.begin(), v.end(), 0);
    std::stable_sort(v.begin(), v.end(), [&](int a, int b) {
      return train[static_cast<std::size_t>(a)].x[f] < train[static_cast<std::size_t>(b)].x[f];
    });
  }
  Grower(train, opts, t.nodes_).build(std::move(sorted), 0);
  return t;
}

int DecisionTree::prune(const std::vector<Sample>& prune_set) {
  int removed = 0;
  std::function<int(int, const std::vector<int>&)> rep = [&](int id, const std::vector<int>& samples) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    int leaf_err = 0;
    for (const int i : samples) leaf_err += prune_set[static_cast<std::size_t>(i)].y != node.label;
    if (node.feature < 0) return leaf_err;
    std::vector<int> l, r;
    for (const int i : samples)
      (prune_set[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(node.feature)] <= node.threshold ? l : r).push_back(i);
    const int left = node.left, right = node.right;
    const int sub = rep(left, l) + rep(right, r);
    Node& again = nodes_[static_cast<std::size_t>(id)];
    if (leaf_err <= sub) {
      again.feature = -1;
      again.left = again.right = -1;
      ++removed;
      return leaf_err;
    }
    return sub;
  };
  std::vector<int> all(prune_set.size());
  std::iota(all.begin(), all.end(), 0);
  rep(0, all);

  // Drop unreachable nodes, keeping preorder numbering.
  std::vector<Node> kept;
  std::function<int(int)> copy = [&](int id) {
    const int at = static_cast<int>(kept.size());
    kept.push_back(nodes_[static_cast<std::size_t>(id)]);
    if (kept.back().feature >= 0) {
      const int l = copy(nodes_[static_cast<std::size_t>(id)].left);
      const int r = copy(nodes_[static_cast<std::size_t>(id)].right);
      kept[static_cast<std::size_t>(at)].left = l;
      kept[static_cast<std::size_t>(at)].right = r;
    }
    return at;
  };
  copy(0);
  nodes_ = std::move(kept);
  return removed;
}

Label DecisionTree::classify(const FeatureVector& x) const {
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(id)].label;
}

int DecisionTree::depth() const {
  std::function<int(int)> d = [&](int id) -> int {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.feature < 0 ? 0 : 1 + std::max(d(n.left), d(n.right));
  };
  return nodes_.empty() ? 0 : d(0);
}

int DecisionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : nodes_) {
    if (n.feature < 0)
      nodes.push_back({{"leaf", to_string(n.label)}, {"plain", n.n_plain}, {"obfuscated", n.n_obfuscated}});
    else
      nodes.push_back({{"feature", n.feature},
                       {"name", feature_names()[static_cast<std::size_t>(n.feature)]},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"plain", n.n_plain},
                       {"obfuscated", n.n_obfuscated}});
  }
  std::vector<std::string> names(feature_names().begin(), feature_names().end());
  return {{"model", "reptree"}, {"version", 1}, {"features", names}, {"nodes", std::move(nodes)}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  if (j.value("model", "") != "reptree") throw std::runtime_error("not a string classifier model");
  if (j.at("features").size() != kFeatureCount) throw std::runtime_error("model feature count mismatch");
  DecisionTree t;
  for (const auto& n : j.at("nodes")) {
    Node node;
    node.n_plain = n.value("plain", 0);
    node.n_obfuscated = n.value("obfuscated", 0);
    if (n.contains("leaf")) {
      node.label = n.at("leaf").get<std::string>() == "obfuscated" ? Label::Obfuscated : Label::Plain;
    } else {
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
    }
    t.nodes_.push_back(node);
  }
  const int count = static_cast<int>(t.nodes_.size());
  if (count == 0) throw std::runtime_error("model has no nodes");
  for (const Node& n : t.nodes_)
    if (n.feature >= 0 && (n.feature >= static_cast<int>(kFeatureCount) || n.left <= 0 || n.left >= count ||
                           n.right <= 0 || n.right >= count))
      throw std::runtime_error("model node out of range");
  return t;
}

TrainResult train_tree(const std::vector<Sample>& dataset, const Split& split, std::uint64_t seed,
                       const TreeOptions& opts) {
  if (std::abs(split.train + split.prune + split.holdout - 1.0) > 1e-9 || split.train <= 0 || split.prune < 0 ||
      split.holdout < 0)
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<double>(dataset.size());
  const auto n_train = static_cast<std::size_t>(std::llround(split.train * n));
  const auto n_prune = std::min(dataset.size() - n_train, static_cast<std::size_t>(std::llround(split.prune * n)));
  std::vector<Sample> train, prune;
  TrainResult r;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k < n_train) train.push_back(dataset[order[k]]);
    else if (k < n_train + n_prune) prune.push_back(dataset[order[k]]);
    else r.holdout_indices.push_back(order[k]);
  }
  r.tree = DecisionTree::grow(train, opts);
  if (!prune.empty()) r.pruned = r.tree.prune(prune);
  for (const std::size_t i : r.holdout_indices) r.holdout.add(dataset[i].y, r.tree.classify(dataset[i].x));
  return r;
}

}  // namespace strhound::strclf
