#include "mvrf/voting.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fmt/format.h>

#include "mvrf/errors.hpp"
#include "mvrf/multiview.hpp"

namespace mvrf {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput(fmt::format("{} weight {} outside [0, 1]", what, v));
}

}  // namespace

Combiner Combiner::blend(double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw InvalidInput(fmt::format("blend exponent a={} outside [0, 1]", a));
  return {CombinerKind::kBlend, a};
}

Combiner Combiner::parse(std::string_view text) {
  const std::string u = upper(text);
  if (u == "MV" || u == "MVRF") return majority();
  if (u == "WRF") return static_oob();
  if (u == "GDV") return global();
  if (u == "LDV") return local();
  if (u == "GLDV") return global_local();
  std::string_view arg;
  if (u.rfind("GLNEW:", 0) == 0) {
    arg = text.substr(6);
  } else if (u.rfind("GLNEW(", 0) == 0 && u.back() == ')') {
    arg = text.substr(6, text.size() - 7);
  } else {
    throw InvalidInput(fmt::format("unknown combiner '{}'", text));
  }
  double a = 0.0;
  const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), a);
  if (ec != std::errc{} || end != arg.data() + arg.size()) {
    throw InvalidInput(fmt::format("bad blend exponent in '{}'", text));
  }
  return blend(a);
}

std::string Combiner::name() const {
  switch (kind) {
    case CombinerKind::kMajority: return "MVRF";
    case CombinerKind::kStatic: return "WRF";
    case CombinerKind::kGlobal: return "GDV";
    case CombinerKind::kLocal: return "LDV";
    case CombinerKind::kGlobalLocal: return "GLDV";
    case CombinerKind::kBlend: return fmt::format("GLnew({:g})", a);
  }
  return "?";
}

VoteRecord combine_vote(std::span<const ClassId> labels, std::span<const double> weights,
                        std::size_t n_classes) {
  if (labels.size() != weights.size()) {
    throw InvalidInput(
        fmt::format("{} labels but {} weights", labels.size(), weights.size()));
  }
  if (labels.empty()) throw InvalidInput("vote needs at least one view");
  VoteRecord record;
  record.class_sums.assign(n_classes, 0.0);
  for (std::size_t q = 0; q < labels.size(); ++q) {
    if (labels[q] >= n_classes) {
      throw InvalidInput(fmt::format("label {} not below n_classes={}", labels[q], n_classes));
    }
    if (!(weights[q] >= 0.0) || !std::isfinite(weights[q])) {
      throw InvalidInput(fmt::format("weight {} of view {} is not a nonnegative number",
                                     weights[q], q));
    }
    record.class_sums[labels[q]] += weights[q];
  }
  record.labels.assign(labels.begin(), labels.end());
  record.weights.weights.assign(weights.begin(), weights.end());
  // Sums that agree up to rounding are ties; the smallest class id wins. An
  // exact comparison would let a rescaling of the weights flip the label.
  double total = 0.0;
  for (double w : weights) total += w;
  const double tol = kTieTolerance * total;
  ClassId best = 0;
  for (ClassId c = 1; c < n_classes; ++c) {
    if (record.class_sums[c] > record.class_sums[best] + tol) best = c;
  }
  record.final_label = best;
  return record;
}

GlobalWeight global_weight(const RandomForest& forest, std::span<const double> x) {
  const auto proba = predict_proba(forest, x);
  const ClassId label = argmax(proba);
  return {label, proba[label]};
}

double local_weight(const RandomForest& forest, const LeafTable& table, const OobLedger& ledger,
                    std::span<const double> x, std::size_t n_neighbor) {
  const auto hood = neighborhood(forest, table, x, n_neighbor);
  return ledger.accuracy(hood.indices);
}

double local_weight(const RandomForest& forest, const Dataset& train, std::span<const double> x,
                    std::size_t n_neighbor) {
  return local_weight(forest, LeafTable(forest, train.features), OobLedger(forest, train), x,
                      n_neighbor);
}

double gl_weight(double global, double local) {
  check_unit(global, "global");
  check_unit(local, "local");
  return global * local;
}

double glnew_weight(double global, double local, double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw InvalidInput(fmt::format("blend exponent a={} outside [0, 1]", a));
  check_unit(global, "global");
  check_unit(local, "local");
  // std::pow(0, 0) is 1, and pow(w, 1) is exact, so both endpoints reproduce
  // their factor bit for bit.
  return std::pow(global, 1.0 - a) * std::pow(local, a);
}

ViewScores score_views(const ViewEnsemble& ensemble, std::span<const std::vector<double>> x,
                       bool with_local) {
  ensemble.check_sample(x);
  ViewScores s;
  s.n_classes = ensemble.n_classes();
  s.static_oob = ensemble.static_weights();
  const std::size_t views = ensemble.n_views();
  s.labels.resize(views);
  s.global.resize(views);
  if (with_local) s.local.resize(views);
  for (std::size_t q = 0; q < views; ++q) {
    const auto& forest = ensemble.forest(q);
    const auto g = global_weight(forest, x[q]);
    s.labels[q] = g.label;
    s.global[q] = g.weight;
    if (with_local) {
      s.local[q] = local_weight(forest, ensemble.leaf_table(q), ensemble.ledger(q), x[q],
                                ensemble.config().n_neighbor);
    }
  }
  return s;
}

WeightVector combiner_weights(const ViewScores& scores, const Combiner& combiner) {
  const std::size_t views = scores.labels.size();
  if (combiner.needs_local() && scores.local.size() != views) {
    throw InvalidInput(fmt::format("{} needs local weights", combiner.name()));
  }
  WeightVector w{std::vector<double>(views), combiner};
  for (std::size_t q = 0; q < views; ++q) {
    switch (combiner.kind) {
      case CombinerKind::kMajority: w.weights[q] = 1.0; break;
      case CombinerKind::kStatic: w.weights[q] = scores.static_oob[q]; break;
      case CombinerKind::kGlobal: w.weights[q] = scores.global[q]; break;
      case CombinerKind::kLocal: w.weights[q] = scores.local[q]; break;
      case CombinerKind::kGlobalLocal:
        w.weights[q] = gl_weight(scores.global[q], scores.local[q]);
        break;
      case CombinerKind::kBlend:
        w.weights[q] = glnew_weight(scores.global[q], scores.local[q], combiner.a);
        break;
    }
  }
  return w;
}

VoteRecord vote(const ViewScores& scores, const Combiner& combiner) {
  WeightVector w = combiner_weights(scores, combiner);
  const bool all_zero =
      std::all_of(w.weights.begin(), w.weights.end(), [](double v) { return v == 0.0; });
  VoteRecord record;
  if (all_zero) {
    const std::vector<double> ones(w.weights.size(), 1.0);
    record = combine_vote(scores.labels, ones, scores.n_classes);
    record.majority_fallback = true;
  } else {
    record = combine_vote(scores.labels, w.weights, scores.n_classes);
  }
  record.weights = std::move(w);
  return record;
}

WeightVector static_weights(const ViewEnsemble& ensemble) {
  return {ensemble.static_weights(), Combiner::static_oob()};
}

VoteRecord dynamic_vote(const ViewEnsemble& ensemble, std::span<const std::vector<double>> x,
                        const Combiner& combiner) {
  return vote(score_views(ensemble, x, combiner.needs_local()), combiner);
}

}  // namespace mvrf
