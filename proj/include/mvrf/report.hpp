#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvrf/evaluation.hpp"

namespace mvrf {

/// Ordered key/value run parameters printed at the top of every report.
using RunParameters = std::vector<std::pair<std::string, std::string>>;

/// One row per dataset x method x repeat:
/// dataset,method,repeat,seed,n_test,accuracy
void write_repeats_csv(std::ostream& out, std::span<const DatasetResult> results);

/// "mean% ± std" with two decimals; std omitted when unknown (NaN).
std::string format_accuracy(double mean, double std);

/// Parameter block, accuracy table with an average-rank row, and the
/// sign-test block against the report's reference method.
void write_summary_markdown(std::ostream& out, const EvalReport& report,
                            const RunParameters& params);

void write_sign_test_block(std::ostream& out, const EvalReport& report);

/// Accuracy per a-grid value. `results` must hold GLnew(a) for every grid
/// value, in grid order.
struct SweepReport {
  std::vector<double> grid;
  std::vector<DatasetResult> results;
};

/// Column heading of a grid value: "a=0 (GDV)", "a=0.3", "a=1 (LDV)".
std::string sweep_heading(double a);

void write_sweep_markdown(std::ostream& out, const SweepReport& sweep,
                          const RunParameters& params);

/// dataset,a,mean_accuracy,std_accuracy
void write_sweep_csv(std::ostream& out, const SweepReport& sweep);

}  // namespace mvrf
