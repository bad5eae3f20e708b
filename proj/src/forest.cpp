#include "mvrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fmt/format.h>

#include "mvrf/errors.hpp"
#include "mvrf/parallel.hpp"
#include "mvrf/random.hpp"

namespace mvrf {

std::size_t ForestConfig::resolved_max_features(std::size_t n_features) const {
  if (max_features) return *max_features;
  const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features))));
  return std::max<std::size_t>(1, root);
}

void ForestConfig::validate(std::size_t n_features) const {
  if (n_trees < 1) throw InvalidInput("n_trees must be at least 1");
  const std::size_t mtry = resolved_max_features(n_features);
  if (mtry < 1 || mtry > n_features) {
    throw InvalidInput(fmt::format("max_features={} outside [1, {}]", mtry, n_features));
  }
  if (max_depth && *max_depth < 1) throw InvalidInput("max_depth must be at least 1");
}

DecisionTree DecisionTree::from_parts(std::vector<Node> nodes,
                                      std::vector<std::vector<std::uint32_t>> leaf_counts,
                                      std::size_t n_classes, std::size_t n_features) {
  if (nodes.empty()) throw InvalidInput("tree has no nodes");
  if (n_classes < 1 || n_features < 1) throw InvalidInput("tree needs classes and features");
  std::vector<std::uint8_t> has_parent(nodes.size(), 0);
  std::vector<std::uint8_t> leaf_seen(leaf_counts.size(), 0);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const Node& node = nodes[n];
    if (node.is_leaf()) {
      if (node.leaf >= leaf_counts.size() || leaf_seen[node.leaf]) {
        throw InvalidInput(fmt::format("node {} has invalid or repeated leaf id {}", n, node.leaf));
      }
      leaf_seen[node.leaf] = 1;
      continue;
    }
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
      throw InvalidInput(fmt::format("node {} splits on invalid feature {}", n, node.feature));
    }
    if (!std::isfinite(node.threshold)) {
      throw InvalidInput(fmt::format("node {} has non-finite threshold", n));
    }
    for (std::uint32_t child : {node.left, node.right}) {
      if (child <= n || child >= nodes.size() || has_parent[child]) {
        throw InvalidInput(fmt::format("node {} has invalid child {}", n, child));
      }
      has_parent[child] = 1;
    }
  }
  for (std::size_t n = 1; n < nodes.size(); ++n) {
    if (!has_parent[n]) throw InvalidInput(fmt::format("node {} is unreachable", n));
  }
  if (std::find(leaf_seen.begin(), leaf_seen.end(), 0) != leaf_seen.end()) {
    throw InvalidInput("leaf histogram without a leaf node");
  }
  for (const auto& counts : leaf_counts) {
    if (counts.size() != n_classes) throw InvalidInput("leaf histogram has wrong class count");
    if (std::all_of(counts.begin(), counts.end(), [](std::uint32_t c) { return c == 0; })) {
      throw InvalidInput("leaf histogram is empty");
    }
  }
  DecisionTree tree;
  tree.nodes_ = std::move(nodes);
  tree.leaf_counts_ = std::move(leaf_counts);
  tree.n_classes_ = n_classes;
  tree.n_features_ = n_features;
  return tree;
}

RandomForest RandomForest::from_parts(std::vector<DecisionTree> trees,
                                      std::vector<std::vector<bool>> inbag,
                                      std::size_t n_classes) {
  if (trees.empty()) throw InvalidInput("forest has no trees");
  if (inbag.size() != trees.size()) throw InvalidInput("inbag rows must match tree count");
  const std::size_t n = inbag.front().size();
  RandomForest forest;
  forest.inbag_.reserve(trees.size() * n);
  for (std::size_t k = 0; k < trees.size(); ++k) {
    if (trees[k].n_classes() != n_classes) throw InvalidInput("tree class count mismatch");
    if (trees[k].n_features() != trees.front().n_features()) {
      throw InvalidInput("trees disagree on feature count");
    }
    if (inbag[k].size() != n) throw InvalidInput("inbag rows have unequal length");
    for (bool b : inbag[k]) forest.inbag_.push_back(b ? 1 : 0);
  }
  forest.trees_ = std::move(trees);
  forest.n_classes_ = n_classes;
  forest.n_train_ = n;
  return forest;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestConfig& config, std::uint64_t seed)
      : data_(data),
        config_(config),
        mtry_(config.resolved_max_features(data.dims())),
        rng_(seed),
        feature_pool_(data.dims()) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), std::size_t{0});
    tree_.n_classes_ = data.n_classes;
    tree_.n_features_ = data.dims();
  }

  DecisionTree build(std::vector<std::size_t> samples) {
    samples_ = std::move(samples);
    grow(0, samples_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0;
  };

  // n * weighted Gini impurity of a partition given its class counts.
  static double scaled_gini(std::span<const std::uint32_t> counts, std::size_t n) {
    if (n == 0) return 0.0;
    double sq = 0.0;
    for (std::uint32_t c : counts) sq += static_cast<double>(c) * c;
    return static_cast<double>(n) - sq / static_cast<double>(n);
  }

  std::uint32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto index = static_cast<std::uint32_t>(tree_.nodes_.size());
    tree_.nodes_.emplace_back();

    std::vector<std::uint32_t> counts(data_.n_classes, 0);
    for (std::size_t p = begin; p < end; ++p) ++counts[data_.labels[samples_[p]]];
    const std::size_t n = end - begin;
    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](std::uint32_t c) { return c > 0; }) <= 1;
    const bool depth_reached = config_.max_depth && depth >= *config_.max_depth;

    std::optional<Split> split;
    if (!pure && n >= config_.min_samples_split && !depth_reached) {
      split = best_split(begin, end, scaled_gini(counts, n));
    }
    if (!split) {
      tree_.nodes_[index].leaf = static_cast<std::uint32_t>(tree_.leaf_counts_.size());
      tree_.leaf_counts_.push_back(std::move(counts));
      return index;
    }

    const auto mid = std::stable_partition(
        samples_.begin() + static_cast<std::ptrdiff_t>(begin),
        samples_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t s) {
          return data_.features(s, split->feature) <= split->threshold;
        });
    const auto split_at = static_cast<std::size_t>(mid - samples_.begin());

    const std::uint32_t left = grow(begin, split_at, depth + 1);
    const std::uint32_t right = grow(split_at, end, depth + 1);
    auto& node = tree_.nodes_[index];
    node.feature = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  std::optional<Split> best_split(std::size_t begin, std::size_t end, double parent_score) {
    const std::size_t n = end - begin;
    // Partial Fisher-Yates: the first mtry_ pool entries become the candidates.
    for (std::size_t j = 0; j < mtry_; ++j) {
      std::swap(feature_pool_[j], feature_pool_[j + uniform_index(rng_, feature_pool_.size() - j)]);
    }

    std::optional<Split> best;
    std::vector<std::pair<double, ClassId>> column(n);
    std::vector<std::uint32_t> left(data_.n_classes);
    std::vector<std::uint32_t> right(data_.n_classes);
    for (std::size_t j = 0; j < mtry_; ++j) {
      const std::size_t f = feature_pool_[j];
      for (std::size_t p = 0; p < n; ++p) {
        const std::size_t s = samples_[begin + p];
        column[p] = {data_.features(s, f), data_.labels[s]};
      }
      std::sort(column.begin(), column.end());
      std::fill(left.begin(), left.end(), 0);
      std::fill(right.begin(), right.end(), 0);
      for (const auto& [v, y] : column) ++right[y];

      for (std::size_t p = 0; p + 1 < n; ++p) {
        const ClassId y = column[p].second;
        ++left[y];
        --right[y];
        const double lo = column[p].first;
        const double hi = column[p + 1].first;
        if (!(lo < hi)) continue;
        const double score = scaled_gini(left, p + 1) + scaled_gini(right, n - p - 1);
        if (!best || score < best->score) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = Split{f, threshold, score};
        }
      }
    }
    // Tolerance absorbs rounding in the integer-count arithmetic.
    if (!best || !(best->score < parent_score - 1e-12 * static_cast<double>(n))) {
      return std::nullopt;
    }
    return best;
  }

  const Dataset& data_;
  const ForestConfig& config_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::size_t> feature_pool_;
  std::vector<std::size_t> samples_;
  DecisionTree tree_;
};

DecisionTree train_tree(const Dataset& data, std::span<const std::size_t> bootstrap,
                        const ForestConfig& config, std::uint64_t tree_seed) {
  if (bootstrap.empty()) throw InvalidInput("bootstrap is empty");
  config.validate(data.dims());
  for (std::size_t s : bootstrap) {
    if (s >= data.size()) {
      throw InvalidInput(fmt::format("bootstrap index {} out of range ({} samples)", s, data.size()));
    }
  }
  TreeBuilder builder(data, config, tree_seed);
  return builder.build({bootstrap.begin(), bootstrap.end()});
}

RandomForest train_forest(const Dataset& data, const ForestConfig& config, unsigned threads) {
  data.validate();
  config.validate(data.dims());
  const std::size_t n = data.size();
  const std::size_t m = config.n_trees;

  RandomForest forest;
  forest.trees_.resize(m);
  forest.inbag_.assign(m * n, 0);
  forest.n_classes_ = data.n_classes;
  forest.n_train_ = n;

  parallel_for(m, threads, [&](std::size_t k) {
    const std::uint64_t stream = derive_seed(config.seed, k);
    Rng rng(stream);
    std::vector<std::size_t> bootstrap(n);
    for (auto& s : bootstrap) {
      s = uniform_index(rng, n);
      forest.inbag_[k * n + s] = 1;
    }
    forest.trees_[k] = train_tree(data, bootstrap, config, derive_seed(stream, 1));
  });
  return forest;
}

std::size_t leaf_id(const DecisionTree& tree, std::span<const double> x) {
  if (x.size() != tree.n_features()) {
    throw DimensionMismatch(
        fmt::format("feature vector has {} values, tree expects {}", x.size(), tree.n_features()));
  }
  const auto& nodes = tree.nodes();
  std::size_t n = 0;
  while (!nodes[n].is_leaf()) {
    const auto& node = nodes[n];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[n].leaf;
}

namespace {

void add_leaf_fractions(const DecisionTree& tree, std::size_t leaf, std::vector<double>& acc) {
  const auto counts = tree.leaf_histogram(leaf);
  double total = 0.0;
  for (std::uint32_t c : counts) total += c;
  for (std::size_t j = 0; j < counts.size(); ++j) acc[j] += counts[j] / total;
}

void check_dims(const RandomForest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features()) {
    throw DimensionMismatch(fmt::format("feature vector has {} values, forest expects {}",
                                        x.size(), forest.n_features()));
  }
}

}  // namespace

std::vector<double> predict_proba(const RandomForest& forest, std::span<const double> x) {
  check_dims(forest, x);
  std::vector<double> proba(forest.n_classes(), 0.0);
  for (const auto& tree : forest.trees()) add_leaf_fractions(tree, leaf_id(tree, x), proba);
  const double m = static_cast<double>(forest.size());
  for (double& p : proba) p /= m;
  return proba;
}

ClassId argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return static_cast<ClassId>(best);
}

ClassId predict_label(const RandomForest& forest, std::span<const double> x) {
  return argmax(predict_proba(forest, x));
}

std::optional<ClassId> oob_subforest_predict(const RandomForest& forest, const Dataset& data,
                                             std::size_t i) {
  if (i >= forest.n_train() || i >= data.size()) {
    throw InvalidInput(fmt::format("training index {} out of range", i));
  }
  const auto x = data.features.row(i);
  check_dims(forest, x);
  std::vector<double> proba(forest.n_classes(), 0.0);
  std::size_t voters = 0;
  for (std::size_t k = 0; k < forest.size(); ++k) {
    if (forest.in_bag(k, i)) continue;
    add_leaf_fractions(forest.tree(k), leaf_id(forest.tree(k), x), proba);
    ++voters;
  }
  if (voters == 0) return std::nullopt;
  // Dividing by the voter count does not move the argmax.
  return argmax(proba);
}

OobLedger::OobLedger(const RandomForest& forest, const Dataset& data) {
  if (data.size() != forest.n_train()) {
    throw InvalidInput(fmt::format("forest was trained on {} samples, dataset has {}",
                                   forest.n_train(), data.size()));
  }
  outcomes_.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto label = oob_subforest_predict(forest, data, i);
    outcomes_[i] = !label                     ? OobOutcome::kNoSubforest
                   : *label == data.labels[i] ? OobOutcome::kCorrect
                                              : OobOutcome::kWrong;
  }
}

double OobLedger::accuracy() const {
  std::size_t seen = 0;
  std::size_t correct = 0;
  for (OobOutcome o : outcomes_) {
    if (o == OobOutcome::kNoSubforest) continue;
    ++seen;
    if (o == OobOutcome::kCorrect) ++correct;
  }
  if (seen == 0) throw UndefinedAccuracy("no training sample has an out-of-bag sub-forest");
  return static_cast<double>(correct) / static_cast<double>(seen);
}

double OobLedger::accuracy(std::span<const std::size_t> subset) const {
  if (subset.empty()) throw InvalidInput("OOB accuracy over an empty subset");
  std::size_t seen = 0;
  std::size_t correct = 0;
  for (std::size_t i : subset) {
    if (i >= outcomes_.size()) {
      throw InvalidInput(fmt::format("subset index {} out of range", i));
    }
    const OobOutcome o = outcomes_[i];
    if (o == OobOutcome::kNoSubforest) continue;
    ++seen;
    if (o == OobOutcome::kCorrect) ++correct;
  }
  if (seen == 0) return accuracy();
  return static_cast<double>(correct) / static_cast<double>(seen);
}

double oob_accuracy(const RandomForest& forest, const Dataset& data) {
  return OobLedger(forest, data).accuracy();
}

double oob_accuracy_subset(const RandomForest& forest, const Dataset& data,
                           std::span<const std::size_t> subset) {
  if (subset.empty()) throw InvalidInput("OOB accuracy over an empty subset");
  return OobLedger(forest, data).accuracy(subset);
}

}  // namespace mvrf
