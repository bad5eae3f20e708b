#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvrf/dataset.hpp"

namespace mvrf {

/// Growth parameters shared by every tree of a forest.
struct ForestConfig {
  std::size_t n_trees = 500;
  /// Candidate features per split; unset means floor(sqrt(d)), at least 1.
  std::optional<std::size_t> max_features;
  std::size_t min_samples_split = 2;
  /// Unset means unbounded.
  std::optional<std::size_t> max_depth;
  std::uint64_t seed = 0;

  std::size_t resolved_max_features(std::size_t n_features) const;
  void validate(std::size_t n_features) const;

  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

/// Binary classification tree with axis-aligned splits. Samples with
/// x[feature] <= threshold go left. Leaves carry class-count histograms of
/// the bootstrap samples that reached them; leaf ids are dense in [0, L).
class DecisionTree {
 public:
  static constexpr std::int32_t kLeaf = -1;

  struct Node {
    std::int32_t feature = kLeaf;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    /// Leaf id; meaningful only when feature == kLeaf.
    std::uint32_t leaf = 0;

    bool is_leaf() const noexcept { return feature == kLeaf; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree() = default;

  /// Assembles a tree from raw parts and checks structural invariants:
  /// node 0 is the root, children come after their parent, every node but
  /// the root has exactly one parent, leaf ids are a permutation of [0, L),
  /// histograms have n_classes entries and are nonzero.
  static DecisionTree from_parts(std::vector<Node> nodes,
                                 std::vector<std::vector<std::uint32_t>> leaf_counts,
                                 std::size_t n_classes, std::size_t n_features);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const noexcept { return leaf_counts_.size(); }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t n_features() const noexcept { return n_features_; }

  std::span<const std::uint32_t> leaf_histogram(std::size_t leaf) const {
    return leaf_counts_.at(leaf);
  }
  const std::vector<std::vector<std::uint32_t>>& leaf_histograms() const noexcept {
    return leaf_counts_;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  friend class TreeBuilder;

  std::vector<Node> nodes_;
  std::vector<std::vector<std::uint32_t>> leaf_counts_;
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
};

/// M trees plus the bootstrap membership ledger used for OOB estimates.
class RandomForest {
 public:
  RandomForest() = default;

  /// `inbag[k][i]` is true when training sample i was drawn into tree k's
  /// bootstrap.
  static RandomForest from_parts(std::vector<DecisionTree> trees,
                                 std::vector<std::vector<bool>> inbag, std::size_t n_classes);

  std::size_t size() const noexcept { return trees_.size(); }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t n_train() const noexcept { return n_train_; }
  std::size_t n_features() const noexcept {
    return trees_.empty() ? 0 : trees_.front().n_features();
  }

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const DecisionTree& tree(std::size_t k) const { return trees_.at(k); }

  bool in_bag(std::size_t k, std::size_t i) const { return inbag_[k * n_train_ + i] != 0; }

  friend bool operator==(const RandomForest&, const RandomForest&) = default;

 private:
  friend RandomForest train_forest(const Dataset&, const ForestConfig&, unsigned);

  std::vector<DecisionTree> trees_;
  std::vector<std::uint8_t> inbag_;  // row-major M x N
  std::size_t n_classes_ = 0;
  std::size_t n_train_ = 0;
};

/// Grows one CART tree on the given bootstrap (a multiset of row indices).
/// Each node draws `max_features` candidate features without replacement
/// and takes the (feature, midpoint threshold) pair with lowest weighted
/// Gini impurity. Growth stops at pure nodes, nodes smaller than
/// `min_samples_split`, the depth bound, or when no candidate split lowers
/// impurity.
DecisionTree train_tree(const Dataset& data, std::span<const std::size_t> bootstrap,
                        const ForestConfig& config, std::uint64_t tree_seed);

/// Bagged forest. Tree k draws its N-sample bootstrap from a stream seeded
/// by (config.seed, k), so the result is identical for any `threads` value
/// (0 = hardware concurrency).
RandomForest train_forest(const Dataset& data, const ForestConfig& config, unsigned threads = 1);

std::size_t leaf_id(const DecisionTree& tree, std::span<const double> x);

/// Mean over trees of the normalized leaf histogram reached by x.
std::vector<double> predict_proba(const RandomForest& forest, std::span<const double> x);

/// Index of the largest entry; ties go to the smallest index.
ClassId argmax(std::span<const double> values);

ClassId predict_label(const RandomForest& forest, std::span<const double> x);

/// Vote of the trees for which training sample i is out-of-bag, or nullopt
/// when i was in-bag for every tree. `data` must be the forest's training set.
std::optional<ClassId> oob_subforest_predict(const RandomForest& forest, const Dataset& data,
                                             std::size_t i);

enum class OobOutcome : std::uint8_t { kNoSubforest, kCorrect, kWrong };

/// Per-sample OOB outcomes of a trained forest. Computing these once lets
/// many subset queries (local weights) run without re-traversing trees.
class OobLedger {
 public:
  OobLedger() = default;
  OobLedger(const RandomForest& forest, const Dataset& data);
  explicit OobLedger(std::vector<OobOutcome> outcomes) : outcomes_(std::move(outcomes)) {}

  const std::vector<OobOutcome>& outcomes() const noexcept { return outcomes_; }

  /// Fraction correct among samples that have a sub-forest.
  /// Throws UndefinedAccuracy if none has one.
  double accuracy() const;

  /// Same rule restricted to `subset`. Members without a sub-forest are
  /// skipped; if all are skipped the forest-wide accuracy is returned.
  double accuracy(std::span<const std::size_t> subset) const;

 private:
  std::vector<OobOutcome> outcomes_;
};

double oob_accuracy(const RandomForest& forest, const Dataset& data);

double oob_accuracy_subset(const RandomForest& forest, const Dataset& data,
                           std::span<const std::size_t> subset);

}  // namespace mvrf
