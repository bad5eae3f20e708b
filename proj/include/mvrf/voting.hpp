#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvrf/dataset.hpp"
#include "mvrf/dissimilarity.hpp"
#include "mvrf/forest.hpp"

namespace mvrf {

class ViewEnsemble;

enum class CombinerKind {
  kMajority,     // MVRF: every view weighs 1
  kStatic,       // WRF: per-view OOB accuracy
  kGlobal,       // GDV: forest confidence for x
  kLocal,        // LDV: OOB accuracy over the RFD neighborhood of x
  kGlobalLocal,  // GLDV: global * local
  kBlend,        // GLnew(a): global^(1-a) * local^a
};

struct Combiner {
  CombinerKind kind = CombinerKind::kMajority;
  /// Exponent of the local term; used by kBlend only.
  double a = 0.0;

  static Combiner majority() { return {CombinerKind::kMajority}; }
  static Combiner static_oob() { return {CombinerKind::kStatic}; }
  static Combiner global() { return {CombinerKind::kGlobal}; }
  static Combiner local() { return {CombinerKind::kLocal}; }
  static Combiner global_local() { return {CombinerKind::kGlobalLocal}; }
  static Combiner blend(double a);

  /// Accepts MV, MVRF, WRF, GDV, LDV, GLDV and GLnew(a) / GLNEW:a,
  /// case-insensitively.
  static Combiner parse(std::string_view text);

  /// Display name: MVRF, WRF, GDV, LDV, GLDV or GLnew(a).
  std::string name() const;

  bool needs_local() const noexcept {
    return kind == CombinerKind::kLocal || kind == CombinerKind::kGlobalLocal ||
           kind == CombinerKind::kBlend;
  }

  friend bool operator==(const Combiner&, const Combiner&) = default;
};

struct WeightVector {
  std::vector<double> weights;
  Combiner combiner;
};

/// One weighted vote over Q per-view labels, with every intermediate kept
/// for audit output.
struct VoteRecord {
  std::vector<ClassId> labels;
  WeightVector weights;
  std::vector<double> class_sums;
  ClassId final_label = 0;
  /// Set when all weights were zero and the vote fell back to majority.
  bool majority_fallback = false;
};

/// Class sums closer than this fraction of the total weight count as tied.
inline constexpr double kTieTolerance = 1e-12;

/// S_j = sum of weights of views voting j; final label is the argmax of S
/// with ties (up to kTieTolerance) to the smaller class id.
VoteRecord combine_vote(std::span<const ClassId> labels, std::span<const double> weights,
                        std::size_t n_classes);

struct GlobalWeight {
  ClassId label = 0;
  double weight = 0.0;
};

/// Most probable class of x and its probability.
GlobalWeight global_weight(const RandomForest& forest, std::span<const double> x);

/// OOB accuracy of the forest over the RFD neighborhood of x.
double local_weight(const RandomForest& forest, const Dataset& train, std::span<const double> x,
                    std::size_t n_neighbor);
double local_weight(const RandomForest& forest, const LeafTable& table, const OobLedger& ledger,
                    std::span<const double> x, std::size_t n_neighbor);

double gl_weight(double global, double local);

/// global^(1-a) * local^a with 0^0 = 1.
double glnew_weight(double global, double local, double a);

/// Per-view quantities for one test sample, from which every combiner's
/// weights are derived.
struct ViewScores {
  std::vector<ClassId> labels;
  std::vector<double> global;
  std::vector<double> local;  // empty when not computed
  std::vector<double> static_oob;
  std::size_t n_classes = 0;
};

ViewScores score_views(const ViewEnsemble& ensemble, std::span<const std::vector<double>> x,
                       bool with_local);

WeightVector combiner_weights(const ViewScores& scores, const Combiner& combiner);

/// Weighted vote for one combiner. An all-zero weight vector falls back to
/// majority voting and sets VoteRecord::majority_fallback.
VoteRecord vote(const ViewScores& scores, const Combiner& combiner);

/// Per-view OOB accuracies cached at training time.
WeightVector static_weights(const ViewEnsemble& ensemble);

/// Scores x (one vector per view) and votes with the given combiner.
VoteRecord dynamic_vote(const ViewEnsemble& ensemble, std::span<const std::vector<double>> x,
                        const Combiner& combiner);

}  // namespace mvrf
