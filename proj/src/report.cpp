#include "mvrf/report.hpp"

#include <cmath>
#include <ostream>
#include <fmt/format.h>
#include <fmt/ostream.h>

namespace mvrf {

namespace {

void write_params(std::ostream& out, const RunParameters& params) {
  for (const auto& [key, value] : params) fmt::print(out, "- {}: {}\n", key, value);
  out << '\n';
}

}  // namespace

void write_repeats_csv(std::ostream& out, std::span<const DatasetResult> results) {
  out << "dataset,method,repeat,seed,n_test,accuracy\n";
  for (const auto& r : results) {
    for (const auto& m : r.methods) {
      for (std::size_t k = 0; k < m.accuracies.size(); ++k) {
        fmt::print(out, "{},{},{},{},{},{}\n", r.dataset, m.method, k, r.repeat_seeds[k],
                   r.test_sizes[k], m.accuracies[k]);
      }
    }
  }
}

std::string format_accuracy(double mean, double std) {
  if (std::isnan(std)) return fmt::format("{:.2f}%", 100.0 * mean);
  return fmt::format("{:.2f}% ± {:.2f}", 100.0 * mean, 100.0 * std);
}

void write_sign_test_block(std::ostream& out, const EvalReport& report) {
  const auto& cmp = report.comparisons;
  fmt::print(out, "## Sign test against {}\n\n", report.reference);
  if (cmp.empty()) {
    out << "No other methods to compare.\n";
    return;
  }
  fmt::print(out, "n = {} datasets; ties count half a win; critical count n/2 + z*sqrt(n)/2.\n\n",
             report.table.datasets.size());
  out << "| Method | Wins | Ties | Losses |";
  for (const auto& t : cmp.front().tests) {
    fmt::print(out, " n_c (alpha={:.2f}) | Significant (alpha={:.2f}) |", t.alpha, t.alpha);
  }
  out << "\n|---|---|---|---|";
  for (std::size_t i = 0; i < cmp.front().tests.size(); ++i) out << "---|---|";
  out << '\n';
  for (const auto& c : cmp) {
    fmt::print(out, "| {} | {} | {} | {} |", c.method, c.wins, c.ties, c.losses);
    for (const auto& t : c.tests) {
      fmt::print(out, " {:.3f} | {} |", t.critical, t.significant ? "yes" : "no");
    }
    out << '\n';
  }
}

void write_summary_markdown(std::ostream& out, const EvalReport& report,
                            const RunParameters& params) {
  const auto& t = report.table;
  out << "# Accuracy summary\n\n";
  write_params(out, params);
  out << "| Dataset |";
  for (const auto& m : t.methods) fmt::print(out, " {} |", m);
  out << "\n|---|";
  for (std::size_t m = 0; m < t.methods.size(); ++m) out << "---|";
  out << '\n';
  for (std::size_t d = 0; d < t.datasets.size(); ++d) {
    fmt::print(out, "| {} |", t.datasets[d]);
    for (std::size_t m = 0; m < t.methods.size(); ++m) {
      fmt::print(out, " {} |", format_accuracy(t.mean[d][m], t.std[d][m]));
    }
    out << '\n';
  }
  out << "| Average Rank |";
  for (double r : report.ranks) fmt::print(out, " {:.3f} |", r);
  out << "\n\n";
  write_sign_test_block(out, report);
}

std::string sweep_heading(double a) {
  if (a == 0.0) return "a=0 (GDV)";
  if (a == 1.0) return "a=1 (LDV)";
  return fmt::format("a={:g}", a);
}

void write_sweep_markdown(std::ostream& out, const SweepReport& sweep,
                          const RunParameters& params) {
  out << "# GLnew sweep over a\n\n";
  write_params(out, params);
  out << "| Dataset |";
  for (double a : sweep.grid) fmt::print(out, " {} |", sweep_heading(a));
  out << "\n|---|";
  for (std::size_t i = 0; i < sweep.grid.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& r : sweep.results) {
    fmt::print(out, "| {} |", r.dataset);
    for (double a : sweep.grid) {
      const auto& s = r.method(Combiner::blend(a).name()).summary;
      fmt::print(out, " {} |", format_accuracy(s.mean, s.std));
    }
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepReport& sweep) {
  out << "dataset,a,mean_accuracy,std_accuracy\n";
  for (const auto& r : sweep.results) {
    for (double a : sweep.grid) {
      const auto& s = r.method(Combiner::blend(a).name()).summary;
      fmt::print(out, "{},{},{},{}\n", r.dataset, a, s.mean, s.std);
    }
  }
}

}  // namespace mvrf
