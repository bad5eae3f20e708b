#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mvrf/errors.hpp"
#include "mvrf/forest.hpp"
#include "mvrf/random.hpp"
#include "oracles.hpp"

using namespace mvrf;
using Node = DecisionTree::Node;

namespace {

Node leaf(std::uint32_t id) { return Node{DecisionTree::kLeaf, 0.0, 0, 0, id}; }
Node split(std::int32_t f, double t, std::uint32_t l, std::uint32_t r) { return Node{f, t, l, r, 0}; }

DecisionTree stump(double threshold, std::vector<std::uint32_t> left, std::vector<std::uint32_t> right) {
  return DecisionTree::from_parts({split(0, threshold, 1, 2), leaf(0), leaf(1)},
                                  {std::move(left), std::move(right)}, 2, 1);
}

DecisionTree root_leaf(std::vector<std::uint32_t> counts, std::size_t d = 1) {
  const auto j = counts.size();
  return DecisionTree::from_parts({leaf(0)}, {std::move(counts)}, j, d);
}

Dataset one_feature(std::vector<double> x, std::vector<ClassId> y, std::size_t j = 2) {
  Dataset d;
  const auto n = x.size();
  d.features = Matrix(n, 1, std::move(x));
  d.labels = std::move(y);
  d.n_classes = j;
  return d;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Three hand-built trees over x = 0,1,2,3 with labels 0,0,1,1:
//   A: x <= 1.5 -> (3,0) else (0,3)
//   B: leaf (1,2)
//   C: x <= 0.5 -> (2,0) else (1,1)
// Sub-forests: sample 0 -> {B}, 1 -> {A,C}, 2 -> {A,B}, 3 -> {B}.
// Votes: 1 (wrong), 0, 1, 1 -> 3 of 4 correct.
struct HandFixture {
  Dataset data = one_feature({0, 1, 2, 3}, {0, 0, 1, 1});
  RandomForest forest = RandomForest::from_parts(
      {stump(1.5, {3, 0}, {0, 3}), root_leaf({1, 2}), stump(0.5, {2, 0}, {1, 1})},
      {{true, false, false, true}, {false, true, false, false}, {true, false, true, true}}, 2);
};

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d, std::size_t j) {
  Dataset data;
  data.features = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) data.features(i, f) = uniform_unit(rng);
    data.labels.push_back(static_cast<ClassId>(uniform_index(rng, j)));
  }
  data.n_classes = j;
  return data;
}

}  // namespace

TEST_CASE("train_tree splits perfectly separable data once") {
  const auto data = one_feature({1, 2, 8, 9}, {0, 0, 1, 1});
  ForestConfig cfg;
  const auto tree = train_tree(data, all_rows(4), cfg, 1);
  REQUIRE(tree.nodes().size() == 3);
  const auto& root = tree.nodes()[0];
  CHECK(root.feature == 0);
  CHECK(root.threshold > 2.0);
  CHECK(root.threshold < 8.0);
  CHECK(root.threshold == doctest::Approx(5.0));
  CHECK(tree.leaf_histogram(tree.nodes()[root.left].leaf)[0] == 2);
  CHECK(tree.leaf_histogram(tree.nodes()[root.left].leaf)[1] == 0);
  CHECK(tree.leaf_histogram(tree.nodes()[root.right].leaf)[1] == 2);
}

TEST_CASE("train_tree makes a pure node a leaf") {
  const auto data = one_feature({1, 5, 3}, {1, 1, 1});
  const auto tree = train_tree(data, all_rows(3), ForestConfig{}, 1);
  CHECK(tree.nodes().size() == 1);
  CHECK(tree.leaf_count() == 1);
  CHECK(tree.leaf_histogram(0)[1] == 3);
}

TEST_CASE("train_tree keeps conflicting duplicates in one mixed leaf") {
  const auto data = one_feature({4, 4, 4, 9}, {0, 1, 1, 0});
  const auto tree = train_tree(data, all_rows(4), ForestConfig{}, 1);
  bool mixed = false;
  for (const auto& h : tree.leaf_histograms()) mixed = mixed || (h[0] == 1 && h[1] == 2);
  CHECK(mixed);
}

TEST_CASE("train_tree counts bootstrap multiplicity in leaves") {
  const auto data = one_feature({1, 2, 8, 9}, {0, 0, 1, 1});
  const std::vector<std::size_t> boot = {0, 0, 0, 3};
  const auto tree = train_tree(data, boot, ForestConfig{}, 1);
  std::uint32_t total = 0;
  for (const auto& h : tree.leaf_histograms()) total += h[0] + h[1];
  CHECK(total == 4);
  CHECK(tree.leaf_histogram(leaf_id(tree, data.features.row(0)))[0] == 3);
}

TEST_CASE("train_tree rejects an empty bootstrap") {
  const auto data = one_feature({1, 2}, {0, 1});
  CHECK_THROWS_AS(train_tree(data, std::vector<std::size_t>{}, ForestConfig{}, 1), InvalidInput);
}

TEST_CASE("train_tree matches the exhaustive 1-D oracle on random tiny datasets") {
  Rng rng(2024);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + uniform_index(rng, 12);
    std::vector<double> x;
    std::vector<ClassId> y;
    for (std::size_t i = 0; i < n; ++i) {
      // Few distinct values so duplicates with conflicting labels are common.
      x.push_back(static_cast<double>(uniform_index(rng, 5)));
      y.push_back(static_cast<ClassId>(uniform_index(rng, 3)));
    }
    const auto data = one_feature(x, y, 3);
    std::vector<std::size_t> boot(n);
    for (auto& b : boot) b = uniform_index(rng, n);

    std::vector<std::vector<std::uint32_t>> expected;
    oracle::grow_1d(x, y, boot, 3, expected);
    const auto tree = train_tree(data, boot, ForestConfig{}, rep);
    CHECK(tree.leaf_histograms() == expected);
  }
}

TEST_CASE("train_forest with one tree") {
  Rng rng(5);
  const auto data = random_dataset(rng, 20, 3, 2);
  ForestConfig cfg;
  cfg.n_trees = 1;
  const auto f = train_forest(data, cfg);
  CHECK(f.size() == 1);
  CHECK(f.n_train() == 20);
}

TEST_CASE("train_forest is deterministic across seeds and thread counts") {
  Rng rng(9);
  const auto data = random_dataset(rng, 60, 5, 3);
  ForestConfig cfg;
  cfg.n_trees = 40;
  cfg.seed = 77;
  const auto a = train_forest(data, cfg, 1);
  const auto b = train_forest(data, cfg, 1);
  const auto c = train_forest(data, cfg, 4);
  CHECK(a == b);
  CHECK(a == c);
  cfg.seed = 78;
  CHECK_FALSE(a == train_forest(data, cfg, 1));
}

TEST_CASE("train_forest leaves every sample out-of-bag somewhere at N=100, M=500") {
  // P(sample in-bag in all 500 trees) = (1 - 0.366)^500, far below 1e-90.
  Rng rng(31);
  const auto data = random_dataset(rng, 100, 1, 2);
  ForestConfig cfg;
  cfg.n_trees = 500;
  cfg.max_depth = 1;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    cfg.seed = seed;
    const auto f = train_forest(data, cfg);
    for (std::size_t i = 0; i < 100; ++i) {
      bool oob = false;
      for (std::size_t k = 0; k < f.size() && !oob; ++k) oob = !f.in_bag(k, i);
      REQUIRE(oob);
    }
  }
}

TEST_CASE("train_forest tree histograms sum to the bootstrap size") {
  Rng rng(12);
  const auto data = random_dataset(rng, 40, 4, 2);
  ForestConfig cfg;
  cfg.n_trees = 20;
  const auto f = train_forest(data, cfg);
  for (const auto& t : f.trees()) {
    std::uint64_t total = 0;
    for (const auto& h : t.leaf_histograms()) {
      std::uint64_t leaf_total = 0;
      for (auto c : h) leaf_total += c;
      CHECK(leaf_total > 0);
      total += leaf_total;
    }
    CHECK(total == 40);
  }
}

TEST_CASE("forest config validation") {
  ForestConfig cfg;
  CHECK(cfg.resolved_max_features(1) == 1);
  CHECK(cfg.resolved_max_features(10) == 3);
  CHECK(cfg.resolved_max_features(6746) == 82);
  cfg.n_trees = 0;
  CHECK_THROWS_AS(cfg.validate(4), InvalidInput);
  cfg.n_trees = 1;
  cfg.max_features = 5;
  CHECK_THROWS_AS(cfg.validate(4), InvalidInput);
}

TEST_CASE("predict_proba averages normalized leaf histograms") {
  const auto f = RandomForest::from_parts({root_leaf({4, 0}), root_leaf({2, 2})},
                                          {{true, true}, {true, true}}, 2);
  const std::vector<double> x = {0.3};
  const auto p = predict_proba(f, x);
  CHECK(p[0] == 0.75);
  CHECK(p[1] == 0.25);
  CHECK(predict_label(f, x) == 0);

  const auto pure = RandomForest::from_parts({root_leaf({0, 3}), root_leaf({0, 1})},
                                             {{true, true}, {true, true}}, 2);
  CHECK(predict_proba(pure, x) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("predict_label breaks ties toward the smallest class") {
  const auto f = RandomForest::from_parts({root_leaf({1, 1})}, {{true, true}}, 2);
  const std::vector<double> x = {0.0};
  CHECK(predict_proba(f, x) == std::vector<double>{0.5, 0.5});
  CHECK(predict_label(f, x) == 0);
  const std::vector<double> v = {0.2, 0.4, 0.4};
  CHECK(argmax(v) == 1);
}

TEST_CASE("single-tree forest predicts its leaf majority") {
  const auto f = RandomForest::from_parts({stump(0.0, {1, 5}, {7, 2})}, {{true}}, 2);
  CHECK(predict_label(f, std::vector<double>{-1.0}) == 1);
  CHECK(predict_label(f, std::vector<double>{1.0}) == 0);
}

TEST_CASE("predict_proba matches the per-tree traversal oracle and stays on the simplex") {
  Rng rng(3);
  const auto data = random_dataset(rng, 80, 6, 3);
  ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.seed = 4;
  const auto f = train_forest(data, cfg);
  for (int q = 0; q < 200; ++q) {
    std::vector<double> x(6);
    for (auto& v : x) v = uniform_unit(rng) * 1.4 - 0.2;
    const auto p = predict_proba(f, x);
    const auto o = oracle::proba(f, x);
    REQUIRE(p.size() == 3);
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(p[j] == doctest::Approx(o[j]).epsilon(1e-14));
      CHECK(p[j] >= 0.0);
      sum += p[j];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  const auto f = RandomForest::from_parts({root_leaf({1, 1}, 3)}, {{true}}, 2);
  const std::vector<double> x = {1.0, 2.0};
  CHECK_THROWS_AS(predict_proba(f, x), DimensionMismatch);
  CHECK_THROWS_AS(predict_label(f, x), DimensionMismatch);
  CHECK_THROWS_AS(leaf_id(f.tree(0), x), DimensionMismatch);
}

TEST_CASE("leaf_id of a root-leaf tree is 0") {
  const auto t = root_leaf({2, 1}, 2);
  CHECK(leaf_id(t, std::vector<double>{5.0, -3.0}) == 0);
  CHECK(leaf_id(t, std::vector<double>{0.0, 0.0}) == 0);
}

TEST_CASE("leaf_id of a training sample lands in a leaf holding its class") {
  Rng rng(8);
  const auto data = random_dataset(rng, 50, 3, 2);
  const auto tree = train_tree(data, all_rows(50), ForestConfig{}, 3);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(tree.leaf_histogram(leaf_id(tree, data.features.row(i)))[data.labels[i]] > 0);
  }
}

TEST_CASE("leaf_id matches the recursive oracle on 1000 random points") {
  Rng rng(10);
  const auto data = random_dataset(rng, 120, 4, 2);
  const auto tree = train_tree(data, all_rows(120), ForestConfig{}, 11);
  REQUIRE(tree.leaf_count() > 4);
  for (int q = 0; q < 1000; ++q) {
    std::vector<double> x(4);
    for (auto& v : x) v = uniform_unit(rng);
    CHECK(leaf_id(tree, x) == oracle::leaf(tree, x));
  }
}

TEST_CASE("perturbing a feature no tree splits on never changes leaf_id") {
  Rng rng(14);
  auto data = random_dataset(rng, 60, 3, 2);
  for (std::size_t i = 0; i < 60; ++i) data.features(i, 2) = 0.5;  // constant: never split
  ForestConfig cfg;
  cfg.n_trees = 15;
  cfg.max_features = 3;
  const auto f = train_forest(data, cfg);
  for (int q = 0; q < 100; ++q) {
    std::vector<double> x = {uniform_unit(rng), uniform_unit(rng), 0.5};
    auto y = x;
    y[2] = uniform_unit(rng) * 100.0 - 50.0;
    for (const auto& t : f.trees()) CHECK(leaf_id(t, x) == leaf_id(t, y));
  }
}

TEST_CASE("oob_subforest_predict on hand-built in-bag masks") {
  HandFixture fx;
  CHECK(oob_subforest_predict(fx.forest, fx.data, 0) == std::optional<ClassId>{1});
  CHECK(oob_subforest_predict(fx.forest, fx.data, 1) == std::optional<ClassId>{0});
  CHECK(oob_subforest_predict(fx.forest, fx.data, 2) == std::optional<ClassId>{1});
  CHECK(oob_subforest_predict(fx.forest, fx.data, 3) == std::optional<ClassId>{1});
}

TEST_CASE("oob_subforest_predict with a single out-of-bag tree uses that tree") {
  const auto data = one_feature({0, 1}, {0, 1});
  const auto f = RandomForest::from_parts({root_leaf({5, 1}), root_leaf({0, 2})},
                                          {{true, true}, {false, true}}, 2);
  CHECK(oob_subforest_predict(f, data, 0) == std::optional<ClassId>{1});
  CHECK_FALSE(oob_subforest_predict(f, data, 1).has_value());
}

TEST_CASE("oob_accuracy of the hand fixture is 0.75") {
  HandFixture fx;
  CHECK(oob_accuracy(fx.forest, fx.data) == 0.75);
  CHECK(oracle::oob_accuracy(fx.forest, fx.data) == std::optional<double>{0.75});
}

TEST_CASE("oob_accuracy is 1 when every OOB prediction is right") {
  const auto data = one_feature({0, 1, 2, 3}, {0, 0, 1, 1});
  const auto f = RandomForest::from_parts({stump(1.5, {2, 0}, {0, 2})},
                                          {{true, false, false, true}}, 2);
  CHECK(oob_accuracy(f, data) == 1.0);
}

TEST_CASE("oob_accuracy without any sub-forest is undefined") {
  const auto data = one_feature({0, 1}, {0, 1});
  const auto f = RandomForest::from_parts({root_leaf({1, 1})}, {{true, true}}, 2);
  CHECK_THROWS_AS(oob_accuracy(f, data), UndefinedAccuracy);
}

TEST_CASE("oob_accuracy on noise labels is near the majority prior") {
  Rng rng(21);
  const std::size_t n = 600;
  Dataset data;
  data.features = Matrix(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < 4; ++f) data.features(i, f) = uniform_unit(rng);
    data.labels.push_back(uniform_unit(rng) < 0.7 ? 0 : 1);
  }
  data.n_classes = 2;
  const double prior =
      static_cast<double>(std::count(data.labels.begin(), data.labels.end(), 0)) / n;
  ForestConfig cfg;
  cfg.n_trees = 100;
  cfg.seed = 2;
  const double acc = oob_accuracy(train_forest(data, cfg), data);
  CHECK(std::abs(acc - prior) <= 0.1);
}

TEST_CASE("oob_accuracy_subset") {
  HandFixture fx;
  const auto f = [&](std::vector<std::size_t> s) { return oob_accuracy_subset(fx.forest, fx.data, s); };
  CHECK(f({0, 1, 2, 3}) == oob_accuracy(fx.forest, fx.data));
  CHECK(f({1}) == 1.0);
  CHECK(f({0}) == 0.0);
  CHECK(f({0, 3}) == 0.5);
  CHECK_THROWS_AS(f({}), InvalidInput);
  CHECK_THROWS_AS(f({4}), InvalidInput);

  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < 4; ++i) {
      if (uniform_index(rng, 2) == 1) subset.push_back(i);
    }
    if (subset.empty()) subset.push_back(uniform_index(rng, 4));
    CHECK(f(subset) == *oracle::oob_accuracy(fx.forest, fx.data, subset));
  }
}

TEST_CASE("oob_accuracy_subset skips members without a sub-forest and falls back when all lack one") {
  // Sample 2 is in-bag everywhere.
  const auto data = one_feature({0, 1, 2, 3}, {0, 0, 1, 1});
  const auto f = RandomForest::from_parts({root_leaf({3, 1}), root_leaf({2, 1})},
                                          {{false, true, true, false}, {true, false, true, true}}, 2);
  // OOB votes: 0 -> 0 (right), 1 -> 0 (right), 2 -> none, 3 -> 0 (wrong).
  CHECK(oob_accuracy(f, data) == doctest::Approx(2.0 / 3.0));
  CHECK(oob_accuracy_subset(f, data, std::vector<std::size_t>{2, 3}) == 0.0);
  CHECK(oob_accuracy_subset(f, data, std::vector<std::size_t>{2}) == oob_accuracy(f, data));
}

TEST_CASE("OOB ledger equals the brute-force oracle on random fixtures") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto fx = oracle::random_fixture(seed);
    const auto expected = oracle::oob_accuracy(fx.forest, fx.data);
    if (!expected) {
      CHECK_THROWS_AS(oob_accuracy(fx.forest, fx.data), UndefinedAccuracy);
      continue;
    }
    CHECK(oob_accuracy(fx.forest, fx.data) == *expected);
  }
}

TEST_CASE("mean per-tree out-of-bag fraction is about 37%") {
  Rng rng(44);
  const auto data = random_dataset(rng, 80, 1, 2);
  ForestConfig cfg;
  cfg.n_trees = 50;
  cfg.max_depth = 1;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const auto f = train_forest(data, cfg);
    std::size_t oob = 0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      for (std::size_t i = 0; i < 80; ++i) oob += f.in_bag(k, i) ? 0 : 1;
    }
    total += static_cast<double>(oob) / (80.0 * 50.0);
  }
  const double mean = total / 20.0;
  CHECK(mean >= 0.34);
  CHECK(mean <= 0.40);
}

TEST_CASE("DecisionTree::from_parts rejects malformed structures") {
  CHECK_THROWS_AS(DecisionTree::from_parts({}, {}, 2, 1), InvalidInput);
  // child pointing backwards
  CHECK_THROWS_AS(DecisionTree::from_parts({split(0, 0.0, 0, 1), leaf(0)}, {{1, 0}}, 2, 1),
                  InvalidInput);
  // empty leaf histogram
  CHECK_THROWS_AS(DecisionTree::from_parts({leaf(0)}, {{0, 0}}, 2, 1), InvalidInput);
  // feature out of range
  CHECK_THROWS_AS(
      DecisionTree::from_parts({split(3, 0.0, 1, 2), leaf(0), leaf(1)}, {{1, 0}, {0, 1}}, 2, 1),
      InvalidInput);
  // unreachable node
  CHECK_THROWS_AS(DecisionTree::from_parts({leaf(0), leaf(1)}, {{1, 0}, {0, 1}}, 2, 1),
                  InvalidInput);
}
