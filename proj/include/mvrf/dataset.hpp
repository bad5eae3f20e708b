#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mvrf {

using ClassId = std::uint32_t;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return values_; }

  /// New matrix holding the given rows, in order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Labelled single-view training data. Labels are contiguous ids in
/// [0, n_classes).
struct Dataset {
  Matrix features;
  std::vector<ClassId> labels;
  std::size_t n_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dims() const noexcept { return features.cols(); }

  /// Throws InvalidInput unless N >= 2, d >= 1, rows match labels, every
  /// label < n_classes and every value is finite.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Q aligned views over the same samples, sharing one label vector.
struct MultiViewDataset {
  std::string name;
  std::vector<std::string> view_names;
  std::vector<Matrix> views;
  std::vector<ClassId> labels;
  /// Original label text per class id, in first-appearance order.
  std::vector<std::string> class_names;

  std::size_t n_views() const noexcept { return views.size(); }
  std::size_t size() const noexcept { return labels.size(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }

  Dataset view(std::size_t q) const;

  void validate() const;

  MultiViewDataset subset(std::span<const std::size_t> indices) const;
};

}  // namespace mvrf
