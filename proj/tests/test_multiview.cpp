#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mvrf/data_io.hpp"
#include "mvrf/errors.hpp"
#include "mvrf/multiview.hpp"
#include "mvrf/random.hpp"

using namespace mvrf;
using Node = DecisionTree::Node;

namespace {

DecisionTree root_leaf(std::vector<std::uint32_t> counts) {
  const auto j = counts.size();
  return DecisionTree::from_parts({Node{DecisionTree::kLeaf, 0.0, 0, 0, 0}}, {std::move(counts)}, j, 1);
}

const std::vector<Combiner> kAll = {Combiner::majority(), Combiner::static_oob(),
                                    Combiner::global(),   Combiner::local(),
                                    Combiner::global_local(), Combiner::blend(0.5)};

// Five single-tree views that reproduce the worked example: labels
// (0,1,0,1,1), globals (0.75,0.63,0.82,0.66,0.67) from the leaf histograms,
// and locals (0.7,0.5,0.8,0.6,0.6) from which of the 20 training rows are
// out-of-bag. Rows 0-9 are class 0, rows 10-19 class 1; n_neighbor = 20
// puts every row in the neighborhood.
ViewEnsemble worked_ensemble() {
  const std::vector<std::vector<std::uint32_t>> hist = {{75, 25}, {37, 63}, {82, 18}, {34, 66}, {33, 67}};
  // {class-0 rows out-of-bag, class-1 rows out-of-bag}
  const std::vector<std::pair<std::size_t, std::size_t>> oob = {{7, 3}, {1, 1}, {8, 2}, {2, 3}, {2, 3}};
  std::vector<RandomForest> forests;
  std::vector<Dataset> train;
  std::vector<std::string> names;
  for (std::size_t q = 0; q < 5; ++q) {
    Dataset d;
    d.features = Matrix(20, 1);
    for (std::size_t i = 0; i < 20; ++i) {
      d.features(i, 0) = static_cast<double>(i);
      d.labels.push_back(i < 10 ? 0 : 1);
    }
    d.n_classes = 2;
    std::vector<bool> inbag(20, true);
    for (std::size_t i = 0; i < oob[q].first; ++i) inbag[i] = false;
    for (std::size_t i = 0; i < oob[q].second; ++i) inbag[10 + i] = false;
    forests.push_back(RandomForest::from_parts({root_leaf(hist[q])}, {inbag}, 2));
    train.push_back(std::move(d));
    names.push_back("v" + std::to_string(q));
  }
  EnsembleConfig cfg;
  cfg.n_neighbor = 20;
  return ViewEnsemble::from_forests(std::move(forests), std::move(train), names, {"neg", "pos"}, cfg);
}

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.n_samples = 120;
  s.n_views = 3;
  s.view_dims = {4};
  s.regions = 2;
  s.informative_views = {0, 1};
  s.separation = 1.0;
  s.seed = seed;
  return s;
}

EnsembleConfig small_config(std::size_t trees = 30, std::uint64_t seed = 5) {
  EnsembleConfig c;
  c.forest.n_trees = trees;
  c.forest.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("worked example through the full ensemble") {
  const auto e = worked_ensemble();
  std::vector<std::vector<double>> x(5, std::vector<double>{0.0});
  const auto s = score_views(e, x, true);
  CHECK(s.labels == std::vector<ClassId>{0, 1, 0, 1, 1});
  const std::vector<double> g = {0.75, 0.63, 0.82, 0.66, 0.67};
  const std::vector<double> l = {0.7, 0.5, 0.8, 0.6, 0.6};
  for (std::size_t q = 0; q < 5; ++q) {
    CHECK(std::abs(s.global[q] - g[q]) <= 1e-12);
    CHECK(std::abs(s.local[q] - l[q]) <= 1e-12);
  }
  CHECK(predict(e, x, Combiner::majority()).final_label == 1);
  CHECK(predict(e, x, Combiner::global()).final_label == 1);
  CHECK(predict(e, x, Combiner::local()).final_label == 1);
  const auto gldv = predict(e, x, Combiner::global_local());
  CHECK(gldv.final_label == 0);
  CHECK(std::abs(gldv.class_sums[0] - 1.181) <= 1e-9);
  CHECK(std::abs(gldv.class_sums[1] - 1.113) <= 1e-9);
  // Static weights equal the local ones here: every row is a neighbor.
  CHECK(static_weights(e).weights == s.local);
}

TEST_CASE("check_sample names the offending view") {
  const auto e = worked_ensemble();
  std::vector<std::vector<double>> x(5, std::vector<double>{0.0});
  x[3] = {0.0, 1.0};
  try {
    predict(e, x, Combiner::majority());
    FAIL("expected a dimension error");
  } catch (const DimensionMismatch& err) {
    CHECK(std::string(err.what()).find("v3") != std::string::npos);
  }
  x.pop_back();
  CHECK_THROWS_AS(predict(e, x, Combiner::majority()), InvalidInput);
}

TEST_CASE("single-view ensemble behaves as its forest under every combiner") {
  auto spec = small_spec(3);
  spec.n_views = 1;
  spec.informative_views = {0, 0};
  const auto syn = generate_synthetic(spec);
  const auto e = train_multiview(syn.data, small_config());
  ForestConfig fc = small_config().forest;
  fc.seed = view_seed(fc.seed, 0);
  const auto solo = train_forest(syn.data.view(0), fc);
  CHECK(e.forest(0) == solo);
  Rng rng(1);
  for (int t = 0; t < 40; ++t) {
    std::vector<std::vector<double>> x(1, std::vector<double>(4));
    for (auto& v : x[0]) v = uniform_unit(rng) * 4.0 - 2.0;
    const auto expected = predict_label(solo, x[0]);
    for (const auto& c : kAll) CHECK(predict(e, x, c).final_label == expected);
  }
}

TEST_CASE("identical views get distinct derived seeds") {
  CHECK(view_seed(9, 0) != view_seed(9, 1));
  auto spec = small_spec(4);
  spec.n_views = 2;
  auto syn = generate_synthetic(spec);
  syn.data.views[1] = syn.data.views[0];
  const auto e = train_multiview(syn.data, small_config());
  CHECK_FALSE(e.forest(0) == e.forest(1));
}

TEST_CASE("five-view synthetic ensemble caches static weights") {
  SynthSpec spec;
  spec.n_samples = 100;
  spec.seed = 8;
  const auto syn = generate_synthetic(spec);
  const auto e = train_multiview(syn.data, small_config(40));
  REQUIRE(e.n_views() == 5);
  REQUIRE(e.static_weights().size() == 5);
  for (std::size_t q = 0; q < 5; ++q) {
    CHECK(e.static_weights()[q] >= 0.0);
    CHECK(e.static_weights()[q] <= 1.0);
    CHECK(e.static_weights()[q] == oob_accuracy(e.forest(q), syn.data.view(q)));
  }
}

TEST_CASE("identical forests on identical data get identical static weights") {
  const auto syn = generate_synthetic(small_spec(5));
  ForestConfig fc = small_config().forest;
  const auto d = syn.data.view(0);
  const auto f = train_forest(d, fc);
  const auto e = ViewEnsemble::from_forests({f, f}, {d, d}, {"a", "b"}, syn.data.class_names,
                                            small_config());
  CHECK(e.static_weights()[0] == e.static_weights()[1]);
}

TEST_CASE("a noise view gets lower static weight than a separable view") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    MultiViewDataset data;
    data.view_names = {"signal", "noise"};
    data.class_names = {"a", "b"};
    Matrix signal(80, 3);
    Matrix noise(80, 3);
    for (std::size_t i = 0; i < 80; ++i) {
      const ClassId y = i % 2;
      data.labels.push_back(y);
      for (std::size_t f = 0; f < 3; ++f) {
        signal(i, f) = (y == 0 ? -2.0 : 2.0) + uniform_unit(rng);
        noise(i, f) = uniform_unit(rng);
      }
    }
    data.views = {signal, noise};
    const auto e = train_multiview(data, small_config(50, seed));
    CHECK(e.static_weights()[1] < e.static_weights()[0]);
  }
}

TEST_CASE("unanimous views decide under every combiner") {
  const auto syn = generate_synthetic(small_spec(6));
  const auto e = train_multiview(syn.data, small_config());
  Rng rng(2);
  int unanimous = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::vector<double>> x(3, std::vector<double>(4));
    for (auto& v : x) {
      for (auto& c : v) c = uniform_unit(rng) * 6.0 - 3.0;
    }
    const auto s = score_views(e, x, true);
    if (s.labels[0] != s.labels[1] || s.labels[1] != s.labels[2]) continue;
    ++unanimous;
    for (const auto& c : kAll) CHECK(predict(e, x, c).final_label == s.labels[0]);
  }
  CHECK(unanimous > 0);
}

TEST_CASE("training is independent of the thread count") {
  const auto syn = generate_synthetic(small_spec(7));
  const auto a = train_multiview(syn.data, small_config(), 1);
  const auto b = train_multiview(syn.data, small_config(), 3);
  for (std::size_t q = 0; q < 3; ++q) CHECK(a.forest(q) == b.forest(q));
  CHECK(a.static_weights() == b.static_weights());
}

TEST_CASE("model round trip preserves predictions exactly") {
  const auto syn = generate_synthetic(small_spec(9));
  const auto e = train_multiview(syn.data, small_config());
  std::stringstream buf;
  save_model(e, buf);
  const auto back = load_model(buf);
  CHECK(back.view_names() == e.view_names());
  CHECK(back.class_names() == e.class_names());
  CHECK(back.config() == e.config());
  CHECK(back.static_weights() == e.static_weights());
  const auto probe = generate_synthetic([] {
    auto s = small_spec(99);
    s.n_samples = 50;
    return s;
  }());
  for (std::size_t i = 0; i < probe.data.size(); ++i) {
    const auto x = sample_at(probe.data, i);
    for (const auto& c : kAll) {
      const auto a = predict(e, x, c);
      const auto b = predict(back, x, c);
      CHECK(a.final_label == b.final_label);
      CHECK(a.weights.weights == b.weights.weights);
      CHECK(a.class_sums == b.class_sums);
    }
  }
}

TEST_CASE("from_forests validates its parts") {
  const auto syn = generate_synthetic(small_spec(10));
  const auto d = syn.data.view(0);
  const auto f = train_forest(d, small_config().forest);
  CHECK_THROWS_AS(ViewEnsemble::from_forests({}, {}, {}, {"a", "b"}, small_config()), InvalidInput);
  CHECK_THROWS_AS(ViewEnsemble::from_forests({f}, {d, d}, {"a"}, {"a", "b"}, small_config()),
                  InvalidInput);
  auto other = d;
  other.labels[0] = 1 - other.labels[0];
  CHECK_THROWS_AS(ViewEnsemble::from_forests({f, f}, {d, other}, {"a", "b"}, {"a", "b"}, small_config()),
                  InvalidInput);
  auto cfg = small_config();
  cfg.n_neighbor = 0;
  CHECK_THROWS_AS(ViewEnsemble::from_forests({f}, {d}, {"a"}, {"a", "b"}, cfg), InvalidInput);
}
