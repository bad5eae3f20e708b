#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvrf/dataset.hpp"
#include "mvrf/multiview.hpp"
#include "mvrf/random.hpp"
#include "mvrf/voting.hpp"

namespace mvrf {

/// Repeated stratified random splitting.
struct SplitPlan {
  std::size_t repeats = 10;
  double train_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class with n_c members, round-half-to-even(fraction * n_c) members
/// (clamped to [1, n_c - 1]) go to train, drawn without replacement; the
/// rest go to test. Both index lists are sorted.
Split stratified_split(std::span<const ClassId> labels, double fraction, Rng& rng);

/// Mean and population standard deviation.
struct Summary {
  double mean = 0.0;
  double std = 0.0;
};
Summary summarize(std::span<const double> values);

struct MethodResult {
  std::string method;
  std::vector<double> accuracies;  // one per repeat
  Summary summary;
};

/// Outcome of the protocol on one dataset.
struct DatasetResult {
  std::string dataset;
  std::vector<std::uint64_t> repeat_seeds;
  std::vector<std::size_t> test_sizes;
  std::vector<MethodResult> methods;
  /// Test samples whose dynamic weights were all zero, per repeat and method.
  std::vector<std::vector<std::size_t>> majority_fallbacks;

  const MethodResult& method(const std::string& name) const;
};

/// For each repeat r: split with a stream derived from (plan.seed, r), train
/// one ViewEnsemble on the train part with a forest seed derived from the
/// same repeat, and score every method on the test part with those shared
/// forests. config.forest.seed is ignored in favor of the derived seeds.
DatasetResult run_protocol(const MultiViewDataset& data, std::span<const Combiner> methods,
                           const SplitPlan& plan, const EnsembleConfig& config,
                           unsigned threads = 1);

/// Mean (and optionally std) accuracy per dataset and method.
struct AccuracyTable {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  std::vector<std::vector<double>> mean;  // [dataset][method]
  std::vector<std::vector<double>> std;   // same shape, NaN when unknown

  void validate() const;
  std::optional<std::size_t> method_index(const std::string& name) const;
};

/// Per dataset, rank methods by accuracy descending with tied methods
/// sharing the average of their ranks; returns the mean rank per method.
std::vector<double> average_rank(const AccuracyTable& table);

struct SignTest {
  std::size_t n = 0;
  double effective_wins = 0.0;
  double critical = 0.0;
  double alpha = 0.0;
  bool significant = false;
};

/// One-sided z for the supported levels (0.10, 0.05, 0.01).
double sign_test_z(double alpha);

/// Ties count half a win. Critical count n/2 + z_alpha * sqrt(n) / 2;
/// significant when effective wins reach it.
SignTest sign_test(std::size_t wins, std::size_t ties, std::size_t losses, double alpha);

struct PairwiseComparison {
  std::string method;
  std::string reference;
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  std::vector<SignTest> tests;  // one per alpha
};

/// Win/tie/loss counts over datasets of every other method against
/// `reference`, each run through the sign test at every alpha.
std::vector<PairwiseComparison> compare_against(const AccuracyTable& table,
                                                const std::string& reference,
                                                std::span<const double> alphas);

inline constexpr double kDefaultAlphas[] = {0.10, 0.05};

/// Everything a run reports: per-dataset results (when computed here), the
/// accuracy table they feed, average ranks and sign tests.
struct EvalReport {
  std::vector<DatasetResult> results;
  AccuracyTable table;
  std::vector<double> ranks;
  std::string reference;
  std::vector<PairwiseComparison> comparisons;
};

/// Adds a column per external method (e.g. a baseline computed elsewhere).
/// External rows are matched by dataset name; a missing dataset is an error.
/// External columns are placed first.
AccuracyTable merge_external(const AccuracyTable& computed, const AccuracyTable& external);

AccuracyTable table_from_results(std::span<const DatasetResult> results);

/// Fills ranks and sign tests. `reference` defaults to the first column.
EvalReport build_report(std::vector<DatasetResult> results, AccuracyTable table,
                        std::optional<std::string> reference = std::nullopt);

}  // namespace mvrf
