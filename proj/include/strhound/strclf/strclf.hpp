#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace strhound::strclf {

inline constexpr std::size_t kFeatureCount = 49;
using FeatureVector = std::array<double, kFeatureCount>;

const std::array<std::string_view, kFeatureCount>& feature_names();
int feature_index(std::string_view name);  // -1 if unknown

struct FeatureContext {
  std::string class_name;
  /// Package prefixes of crypto libraries; null uses the extractor's list.
  const std::vector<std::string>* crypto_packages = nullptr;
};

// Standalone numeric kernels.

/// χ² of the UTF-8 byte histogram against a uniform distribution over 96
/// cells (printable ASCII 0x20..0x7E, plus one cell for every other byte).
double chi_squared_uniform(std::u16string_view s);
/// Shannon entropy over code units divided by log2(distinct symbols); 0 for
/// fewer than two distinct symbols.
double normalized_entropy(std::u16string_view s);
/// zlib-deflated size over original UTF-8 size; 1 for the empty string.
double compression_ratio(std::u16string_view s);
double compression_ratio(std::span<const std::uint8_t> raw);

/// Loads the format patterns, wordlist and crypto package list, and derives
/// the reference character distribution from the phrase list.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const std::filesystem::path& data_dir);
  ~FeatureExtractor();
  /// Shared instance over the default data directory.
  static const FeatureExtractor& standard();

  FeatureVector extract(std::u16string_view s, const FeatureContext& ctx = {}) const;

  /// Dictionary words found in `s` (lowercased), in order of appearance.
  std::vector<std::u16string> dictionary_words(std::u16string_view s) const;
  std::vector<std::string> matching_formats(std::u16string_view s) const;
  double deviation_from_average(std::u16string_view s) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class Label : std::uint8_t { Plain = 0, Obfuscated = 1 };
std::string_view to_string(Label l);

struct Sample {
  FeatureVector x;
  Label y;
};

struct TreeOptions {
  int max_depth = 30;
  int min_leaf = 2;
};

/// Binary decision tree; internal nodes test `x[feature] <= threshold`
/// (left) versus greater (right).
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    Label label = Label::Plain;
    int n_plain = 0;
    int n_obfuscated = 0;
  };

  /// Greedy induction maximizing information gain.
  static DecisionTree grow(const std::vector<Sample>& train, const TreeOptions& opts = {});
  /// Reduced-error pruning: replaces a subtree by a leaf whenever that does
  /// not increase errors on `prune`. Returns the number of subtrees removed.
  int prune(const std::vector<Sample>& prune_set);

  Label classify(const FeatureVector& x) const;
  int depth() const;
  int leaf_count() const;
  const std::vector<Node>& nodes() const { return nodes_; }

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

 private:
  std::vector<Node> nodes_;  // root at 0
};

struct Split {
  double train = 0.6;
  double prune = 0.2;
  double holdout = 0.2;
};

struct Confusion {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  double precision() const { return tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0; }
  double recall() const { return tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0; }
  void add(Label truth, Label predicted);
};

struct TrainResult {
  DecisionTree tree;
  Confusion holdout;
  std::vector<std::size_t> holdout_indices;  // into the input dataset
  int pruned = 0;
};

/// Shuffles with `seed`, splits by `split`, grows on the train part, prunes
/// on the prune part and evaluates on the holdout part. The obfuscated label
/// is the positive class.
TrainResult train_tree(const std::vector<Sample>& dataset, const Split& split, std::uint64_t seed,
                       const TreeOptions& opts = {});

// --- labeled string corpora ---------------------------------------------------

struct LabeledString {
  std::u16string text;
  Label label;
  std::string source;  // phrase, composed, or the scheme id
};

/// Balanced synthetic corpus: plain strings from the phrase list plus
/// compositions of phrases, obfuscated strings from the literal forms the
/// string-literal schemes emit. `per_side` strings of each label.
std::vector<LabeledString> synthesize_string_corpus(std::uint64_t seed, std::size_t per_side);

std::vector<Sample> featurize(const std::vector<LabeledString>& strings, const FeatureExtractor& fx);

bool is_digit_only(std::u16string_view s);

}  // namespace strhound::strclf
