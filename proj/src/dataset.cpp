#include "mvrf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "mvrf/errors.hpp"

namespace mvrf {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw InvalidInput(fmt::format("matrix of {}x{} given {} values", rows, cols, values_.size()));
  }
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw InvalidInput(fmt::format("row index {} out of range ({} rows)", indices[i], rows_));
    }
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw InvalidInput(
        fmt::format("{} feature rows but {} labels", features.rows(), labels.size()));
  }
  if (labels.size() < 2) throw InvalidInput("dataset needs at least 2 samples");
  if (features.cols() < 1) throw InvalidInput("dataset needs at least 1 feature");
  if (n_classes < 1) throw InvalidInput("dataset needs at least 1 class");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) {
      throw InvalidInput(
          fmt::format("label {} of sample {} not below n_classes={}", labels[i], i, n_classes));
    }
  }
  for (double v : features.values()) {
    if (!std::isfinite(v)) throw InvalidInput("dataset contains a non-finite feature value");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  out.n_classes = n_classes;
  return out;
}

Dataset MultiViewDataset::view(std::size_t q) const {
  return Dataset{views.at(q), labels, n_classes()};
}

void MultiViewDataset::validate() const {
  if (views.empty()) throw InvalidInput("multi-view dataset needs at least one view");
  if (view_names.size() != views.size()) {
    throw InvalidInput("view name count does not match view count");
  }
  for (std::size_t q = 0; q < views.size(); ++q) {
    if (views[q].rows() != labels.size()) {
      throw InvalidInput(fmt::format("view '{}' has {} rows, expected {}", view_names[q],
                                     views[q].rows(), labels.size()));
    }
    view(q).validate();
  }
}

MultiViewDataset MultiViewDataset::subset(std::span<const std::size_t> indices) const {
  MultiViewDataset out;
  out.name = name;
  out.view_names = view_names;
  out.class_names = class_names;
  out.views.reserve(views.size());
  for (const auto& v : views) out.views.push_back(v.select_rows(indices));
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  return out;
}

}  // namespace mvrf
