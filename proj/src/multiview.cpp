#include "mvrf/multiview.hpp"

#include <fmt/format.h>

#include "mvrf/errors.hpp"
#include "mvrf/random.hpp"

namespace mvrf {

ViewEnsemble ViewEnsemble::from_forests(std::vector<RandomForest> forests,
                                        std::vector<Dataset> train,
                                        std::vector<std::string> view_names,
                                        std::vector<std::string> class_names,
                                        EnsembleConfig config) {
  if (forests.empty()) throw InvalidInput("ensemble needs at least one view");
  if (train.size() != forests.size() || view_names.size() != forests.size()) {
    throw InvalidInput("forests, training sets and view names must have equal counts");
  }
  if (config.n_neighbor < 1) throw InvalidInput("n_neighbor must be at least 1");
  ViewEnsemble e;
  for (std::size_t q = 0; q < forests.size(); ++q) {
    const auto& f = forests[q];
    const auto& t = train[q];
    if (f.n_train() != t.size() || f.n_features() != t.dims() || f.n_classes() != t.n_classes ||
        t.n_classes != class_names.size()) {
      throw InvalidInput(fmt::format("forest of view '{}' does not match its training data",
                                     view_names[q]));
    }
    if (t.labels != train.front().labels) {
      throw InvalidInput(fmt::format("view '{}' labels differ from view '{}'", view_names[q],
                                     view_names.front()));
    }
    e.leaf_tables_.emplace_back(f, t.features);
    e.ledgers_.emplace_back(f, t);
    e.static_weights_.push_back(e.ledgers_.back().accuracy());
  }
  e.forests_ = std::move(forests);
  e.train_ = std::move(train);
  e.view_names_ = std::move(view_names);
  e.class_names_ = std::move(class_names);
  e.config_ = config;
  return e;
}

void ViewEnsemble::check_sample(std::span<const std::vector<double>> x) const {
  if (x.size() != n_views()) {
    throw InvalidInput(fmt::format("sample has {} views, model has {}", x.size(), n_views()));
  }
  for (std::size_t q = 0; q < n_views(); ++q) {
    if (x[q].size() != forests_[q].n_features()) {
      throw DimensionMismatch(fmt::format("view '{}' has {} features, model expects {}",
                                          view_names_[q], x[q].size(),
                                          forests_[q].n_features()));
    }
  }
}

std::uint64_t view_seed(std::uint64_t master, std::size_t q) { return derive_seed(master, q); }

ViewEnsemble train_multiview(const MultiViewDataset& data, const EnsembleConfig& config,
                             unsigned threads) {
  data.validate();
  std::vector<RandomForest> forests;
  std::vector<Dataset> train;
  for (std::size_t q = 0; q < data.n_views(); ++q) {
    train.push_back(data.view(q));
    ForestConfig fc = config.forest;
    fc.seed = view_seed(config.forest.seed, q);
    forests.push_back(train_forest(train.back(), fc, threads));
  }
  return ViewEnsemble::from_forests(std::move(forests), std::move(train), data.view_names,
                                    data.class_names, config);
}

VoteRecord predict(const ViewEnsemble& ensemble, std::span<const std::vector<double>> x,
                   const Combiner& combiner) {
  return dynamic_vote(ensemble, x, combiner);
}

std::vector<std::vector<double>> sample_at(const MultiViewDataset& data, std::size_t i) {
  std::vector<std::vector<double>> x;
  x.reserve(data.n_views());
  for (const auto& view : data.views) {
    const auto row = view.row(i);
    x.emplace_back(row.begin(), row.end());
  }
  return x;
}

}  // namespace mvrf
