#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mvrf/dataset.hpp"
#include "mvrf/forest.hpp"

namespace mvrf {

/// Fraction of trees in which x_a and x_b reach different leaves.
double rfd(const RandomForest& forest, std::span<const double> x_a, std::span<const double> x_b);

/// Leaf reached by every training sample in every tree, stored tree-major.
/// Built by routing the rows through the final trees.
class LeafTable {
 public:
  LeafTable() = default;
  LeafTable(const RandomForest& forest, const Matrix& train);

  std::size_t n_trees() const noexcept { return n_trees_; }
  std::size_t n_samples() const noexcept { return n_samples_; }
  std::uint32_t leaf(std::size_t k, std::size_t i) const { return leaves_[k * n_samples_ + i]; }

  /// Per training sample, the number of trees in which x lands in a
  /// different leaf. rfd = count / M.
  std::vector<std::uint32_t> disagreement_counts(const RandomForest& forest,
                                                 std::span<const double> x) const;

 private:
  std::vector<std::uint32_t> leaves_;
  std::size_t n_trees_ = 0;
  std::size_t n_samples_ = 0;
};

/// Element i is rfd(forest, x, train row i).
std::vector<double> rfd_to_training(const RandomForest& forest, const Dataset& train,
                                    std::span<const double> x);
std::vector<double> rfd_to_training(const RandomForest& forest, const LeafTable& table,
                                    std::span<const double> x);

struct Neighborhood {
  /// Training indices ordered by ascending (rfd, index).
  std::vector<std::size_t> indices;
  std::size_t view = 0;
};

/// The min(n_neighbor, N) training samples closest to x under rfd.
Neighborhood neighborhood(const RandomForest& forest, const Dataset& train,
                          std::span<const double> x, std::size_t n_neighbor,
                          std::size_t view = 0);
Neighborhood neighborhood(const RandomForest& forest, const LeafTable& table,
                          std::span<const double> x, std::size_t n_neighbor,
                          std::size_t view = 0);

}  // namespace mvrf
