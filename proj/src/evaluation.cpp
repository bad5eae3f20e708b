#include "mvrf/evaluation.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <limits>
#include <map>
#include <fmt/format.h>

#include "mvrf/errors.hpp"
#include "mvrf/parallel.hpp"

namespace mvrf {

void SplitPlan::validate() const {
  if (repeats < 1) throw InvalidInput("repeats must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidInput(fmt::format("train fraction {} outside (0, 1)", train_fraction));
  }
}

namespace {

// Round half to even, independent of the current floating-point mode.
std::size_t round_half_even(double v) {
  const double floor = std::floor(v);
  const double diff = v - floor;
  auto f = static_cast<std::size_t>(floor);
  if (diff > 0.5) return f + 1;
  if (diff < 0.5) return f;
  return f % 2 == 0 ? f : f + 1;
}

}  // namespace

Split stratified_split(std::span<const ClassId> labels, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidInput(fmt::format("train fraction {} outside (0, 1)", fraction));
  }
  std::map<ClassId, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  Split split;
  for (auto& [label, idx] : members) {
    if (idx.size() < 2) {
      throw InvalidInput(fmt::format("class {} has {} member(s); stratified split needs 2",
                                     label, idx.size()));
    }
    const std::size_t n_c = idx.size();
    const std::size_t take =
        std::clamp<std::size_t>(round_half_even(fraction * static_cast<double>(n_c)), 1, n_c - 1);
    shuffle(std::span<std::size_t>(idx), rng);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("summary of no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

const MethodResult& DatasetResult::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw InvalidInput(fmt::format("no result for method '{}'", name));
}

DatasetResult run_protocol(const MultiViewDataset& data, std::span<const Combiner> methods,
                           const SplitPlan& plan, const EnsembleConfig& config,
                           unsigned threads) {
  plan.validate();
  data.validate();
  if (methods.empty()) throw InvalidInput("no methods to evaluate");
  const bool with_local =
      std::any_of(methods.begin(), methods.end(), [](const Combiner& c) { return c.needs_local(); });

  DatasetResult result;
  result.dataset = data.name;
  for (const auto& m : methods) result.methods.push_back({m.name(), {}, {}});

  for (std::size_t r = 0; r < plan.repeats; ++r) {
    const std::uint64_t repeat_seed = derive_seed(plan.seed, r);
    result.repeat_seeds.push_back(repeat_seed);
    Rng split_rng(derive_seed(repeat_seed, 0));
    const Split split = stratified_split(data.labels, plan.train_fraction, split_rng);

    EnsembleConfig cfg = config;
    cfg.forest.seed = derive_seed(repeat_seed, 1);
    const ViewEnsemble ensemble = train_multiview(data.subset(split.train), cfg, threads);
    const MultiViewDataset test = data.subset(split.test);

    // correct[t * |methods| + m], fallback likewise; filled by index.
    std::vector<std::uint8_t> correct(test.size() * methods.size(), 0);
    std::vector<std::uint8_t> fallback(test.size() * methods.size(), 0);
    parallel_for(test.size(), threads, [&](std::size_t t) {
      const auto x = sample_at(test, t);
      const ViewScores scores = score_views(ensemble, x, with_local);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        const VoteRecord rec = vote(scores, methods[m]);
        correct[t * methods.size() + m] = rec.final_label == test.labels[t] ? 1 : 0;
        fallback[t * methods.size() + m] = rec.majority_fallback ? 1 : 0;
      }
    });

    std::vector<std::size_t> fallbacks(methods.size(), 0);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::size_t hits = 0;
      for (std::size_t t = 0; t < test.size(); ++t) {
        hits += correct[t * methods.size() + m];
        fallbacks[m] += fallback[t * methods.size() + m];
      }
      result.methods[m].accuracies.push_back(static_cast<double>(hits) /
                                             static_cast<double>(test.size()));
    }
    result.test_sizes.push_back(test.size());
    result.majority_fallbacks.push_back(std::move(fallbacks));
  }
  for (auto& m : result.methods) m.summary = summarize(m.accuracies);
  return result;
}

void AccuracyTable::validate() const {
  if (datasets.empty() || methods.empty()) throw InvalidInput("accuracy table is empty");
  if (mean.size() != datasets.size() || std.size() != datasets.size()) {
    throw InvalidInput("accuracy table row count mismatch");
  }
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    if (mean[d].size() != methods.size() || std[d].size() != methods.size()) {
      throw InvalidInput(fmt::format("accuracy table row '{}' is incomplete", datasets[d]));
    }
    for (double v : mean[d]) {
      if (!std::isfinite(v)) {
        throw InvalidInput(fmt::format("accuracy table row '{}' has a non-finite value", datasets[d]));
      }
    }
  }
}

std::optional<std::size_t> AccuracyTable::method_index(const std::string& name) const {
  const auto it = std::find(methods.begin(), methods.end(), name);
  if (it == methods.end()) return std::nullopt;
  return static_cast<std::size_t>(it - methods.begin());
}

std::vector<double> average_rank(const AccuracyTable& table) {
  table.validate();
  const std::size_t k = table.methods.size();
  std::vector<double> total(k, 0.0);
  for (const auto& row : table.mean) {
    for (std::size_t m = 0; m < k; ++m) {
      std::size_t better = 0;
      std::size_t equal = 0;
      for (std::size_t o = 0; o < k; ++o) {
        if (row[o] > row[m]) ++better;
        else if (row[o] == row[m]) ++equal;
      }
      // Tied methods occupy ranks better+1 .. better+equal.
      total[m] += static_cast<double>(better) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
  }
  for (double& t : total) t /= static_cast<double>(table.mean.size());
  return total;
}

double sign_test_z(double alpha) {
  if (alpha == 0.10) return 1.282;
  if (alpha == 0.05) return 1.645;
  if (alpha == 0.01) return 2.326;
  throw InvalidInput(fmt::format("unsupported sign-test level {}", alpha));
}

SignTest sign_test(std::size_t wins, std::size_t ties, std::size_t losses, double alpha) {
  const std::size_t n = wins + ties + losses;
  if (n == 0) throw InvalidInput("sign test needs at least one comparison");
  SignTest t;
  t.n = n;
  t.alpha = alpha;
  t.effective_wins = static_cast<double>(wins) + static_cast<double>(ties) / 2.0;
  const double nn = static_cast<double>(n);
  t.critical = nn / 2.0 + sign_test_z(alpha) * std::sqrt(nn) / 2.0;
  t.significant = t.effective_wins >= t.critical;
  return t;
}

std::vector<PairwiseComparison> compare_against(const AccuracyTable& table,
                                                const std::string& reference,
                                                std::span<const double> alphas) {
  table.validate();
  const auto ref = table.method_index(reference);
  if (!ref) throw InvalidInput(fmt::format("reference method '{}' not in table", reference));
  std::vector<PairwiseComparison> out;
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    if (m == *ref) continue;
    PairwiseComparison c;
    c.method = table.methods[m];
    c.reference = reference;
    for (const auto& row : table.mean) {
      if (row[m] > row[*ref]) ++c.wins;
      else if (row[m] < row[*ref]) ++c.losses;
      else ++c.ties;
    }
    for (double a : alphas) c.tests.push_back(sign_test(c.wins, c.ties, c.losses, a));
    out.push_back(std::move(c));
  }
  return out;
}

AccuracyTable table_from_results(std::span<const DatasetResult> results) {
  if (results.empty()) throw InvalidInput("no dataset results");
  AccuracyTable t;
  for (const auto& m : results.front().methods) t.methods.push_back(m.method);
  for (const auto& r : results) {
    if (r.methods.size() != t.methods.size()) {
      throw InvalidInput("dataset results cover different method lists");
    }
    t.datasets.push_back(r.dataset);
    std::vector<double> mean;
    std::vector<double> sd;
    for (std::size_t m = 0; m < r.methods.size(); ++m) {
      if (r.methods[m].method != t.methods[m]) {
        throw InvalidInput("dataset results cover different method lists");
      }
      mean.push_back(r.methods[m].summary.mean);
      sd.push_back(r.methods[m].summary.std);
    }
    t.mean.push_back(std::move(mean));
    t.std.push_back(std::move(sd));
  }
  return t;
}

AccuracyTable merge_external(const AccuracyTable& computed, const AccuracyTable& external) {
  computed.validate();
  external.validate();
  AccuracyTable out;
  out.datasets = computed.datasets;
  out.methods = external.methods;
  for (const auto& m : computed.methods) {
    if (external.method_index(m)) {
      throw InvalidInput(fmt::format("method '{}' appears in both tables", m));
    }
    out.methods.push_back(m);
  }
  for (std::size_t d = 0; d < computed.datasets.size(); ++d) {
    const auto it =
        std::find(external.datasets.begin(), external.datasets.end(), computed.datasets[d]);
    if (it == external.datasets.end()) {
      throw InvalidInput(
          fmt::format("external results lack dataset '{}'", computed.datasets[d]));
    }
    const auto e = static_cast<std::size_t>(it - external.datasets.begin());
    std::vector<double> mean = external.mean[e];
    std::vector<double> sd = external.std[e];
    mean.insert(mean.end(), computed.mean[d].begin(), computed.mean[d].end());
    sd.insert(sd.end(), computed.std[d].begin(), computed.std[d].end());
    out.mean.push_back(std::move(mean));
    out.std.push_back(std::move(sd));
  }
  return out;
}

EvalReport build_report(std::vector<DatasetResult> results, AccuracyTable table,
                        std::optional<std::string> reference) {
  table.validate();
  EvalReport report;
  report.results = std::move(results);
  report.reference = reference.value_or(table.methods.front());
  report.ranks = average_rank(table);
  report.comparisons = compare_against(table, report.reference, kDefaultAlphas);
  report.table = std::move(table);
  return report;
}

}  // namespace mvrf
