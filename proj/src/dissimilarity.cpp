#include "mvrf/dissimilarity.hpp"

#include <algorithm>
#include <numeric>
#include <fmt/format.h>

#include "mvrf/errors.hpp"

namespace mvrf {

double rfd(const RandomForest& forest, std::span<const double> x_a,
           std::span<const double> x_b) {
  if (forest.size() == 0) throw InvalidInput("rfd on an empty forest");
  std::size_t differ = 0;
  for (const auto& tree : forest.trees()) {
    if (leaf_id(tree, x_a) != leaf_id(tree, x_b)) ++differ;
  }
  return static_cast<double>(differ) / static_cast<double>(forest.size());
}

LeafTable::LeafTable(const RandomForest& forest, const Matrix& train)
    : leaves_(forest.size() * train.rows()), n_trees_(forest.size()), n_samples_(train.rows()) {
  for (std::size_t k = 0; k < n_trees_; ++k) {
    const auto& tree = forest.tree(k);
    for (std::size_t i = 0; i < n_samples_; ++i) {
      leaves_[k * n_samples_ + i] = static_cast<std::uint32_t>(leaf_id(tree, train.row(i)));
    }
  }
}

std::vector<std::uint32_t> LeafTable::disagreement_counts(const RandomForest& forest,
                                                          std::span<const double> x) const {
  if (forest.size() != n_trees_) throw InvalidInput("leaf table built for a different forest");
  std::vector<std::uint32_t> counts(n_samples_, 0);
  for (std::size_t k = 0; k < n_trees_; ++k) {
    const auto target = static_cast<std::uint32_t>(leaf_id(forest.tree(k), x));
    const std::uint32_t* row = leaves_.data() + k * n_samples_;
    for (std::size_t i = 0; i < n_samples_; ++i) counts[i] += row[i] != target ? 1u : 0u;
  }
  return counts;
}

std::vector<double> rfd_to_training(const RandomForest& forest, const LeafTable& table,
                                    std::span<const double> x) {
  const auto counts = table.disagreement_counts(forest, x);
  std::vector<double> out(counts.size());
  const double m = static_cast<double>(forest.size());
  std::transform(counts.begin(), counts.end(), out.begin(),
                 [m](std::uint32_t c) { return static_cast<double>(c) / m; });
  return out;
}

std::vector<double> rfd_to_training(const RandomForest& forest, const Dataset& train,
                                    std::span<const double> x) {
  return rfd_to_training(forest, LeafTable(forest, train.features), x);
}

Neighborhood neighborhood(const RandomForest& forest, const LeafTable& table,
                          std::span<const double> x, std::size_t n_neighbor, std::size_t view) {
  if (n_neighbor < 1) throw InvalidInput("n_neighbor must be at least 1");
  // Integer disagreement counts order exactly like rfd without rounding ties.
  const auto counts = table.disagreement_counts(forest, x);
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(n_neighbor, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return counts[a] != counts[b] ? counts[a] < counts[b] : a < b;
                    });
  order.resize(k);
  return Neighborhood{std::move(order), view};
}

Neighborhood neighborhood(const RandomForest& forest, const Dataset& train,
                          std::span<const double> x, std::size_t n_neighbor, std::size_t view) {
  if (n_neighbor < 1) throw InvalidInput("n_neighbor must be at least 1");
  return neighborhood(forest, LeafTable(forest, train.features), x, n_neighbor, view);
}

}  // namespace mvrf
