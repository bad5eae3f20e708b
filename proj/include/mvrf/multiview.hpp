#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mvrf/dataset.hpp"
#include "mvrf/dissimilarity.hpp"
#include "mvrf/forest.hpp"
#include "mvrf/voting.hpp"

namespace mvrf {

struct EnsembleConfig {
  ForestConfig forest;
  std::size_t n_neighbor = 7;

  friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

/// One random forest per view plus what dynamic weighting needs at
/// prediction time: the per-view training data, training leaf table, OOB
/// ledger and static weights. Immutable once built.
class ViewEnsemble {
 public:
  ViewEnsemble() = default;

  /// Binds already-trained forests; derived caches are recomputed here.
  static ViewEnsemble from_forests(std::vector<RandomForest> forests, std::vector<Dataset> train,
                                   std::vector<std::string> view_names,
                                   std::vector<std::string> class_names, EnsembleConfig config);

  std::size_t n_views() const noexcept { return forests_.size(); }
  std::size_t n_classes() const noexcept { return class_names_.size(); }

  const RandomForest& forest(std::size_t q) const { return forests_.at(q); }
  const Dataset& train(std::size_t q) const { return train_.at(q); }
  const LeafTable& leaf_table(std::size_t q) const { return leaf_tables_.at(q); }
  const OobLedger& ledger(std::size_t q) const { return ledgers_.at(q); }
  const std::vector<double>& static_weights() const noexcept { return static_weights_; }

  const std::vector<std::string>& view_names() const noexcept { return view_names_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  const EnsembleConfig& config() const noexcept { return config_; }

  /// Throws InvalidInput/DimensionMismatch naming the view when x does not
  /// supply one correctly sized vector per view.
  void check_sample(std::span<const std::vector<double>> x) const;

 private:
  std::vector<RandomForest> forests_;
  std::vector<Dataset> train_;
  std::vector<LeafTable> leaf_tables_;
  std::vector<OobLedger> ledgers_;
  std::vector<double> static_weights_;
  std::vector<std::string> view_names_;
  std::vector<std::string> class_names_;
  EnsembleConfig config_;
};

/// Seed used for the forest of view q.
std::uint64_t view_seed(std::uint64_t master, std::size_t q);

/// Trains one forest per view; view q uses seed view_seed(config.forest.seed, q).
ViewEnsemble train_multiview(const MultiViewDataset& data, const EnsembleConfig& config,
                             unsigned threads = 1);

VoteRecord predict(const ViewEnsemble& ensemble, std::span<const std::vector<double>> x,
                   const Combiner& combiner);

/// Row i of every view of `data`, as one multi-view sample.
std::vector<std::vector<double>> sample_at(const MultiViewDataset& data, std::size_t i);

}  // namespace mvrf
