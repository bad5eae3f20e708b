#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvrf/dataset.hpp"
#include "mvrf/evaluation.hpp"
#include "mvrf/multiview.hpp"

namespace mvrf {

// ---------------------------------------------------------------------------
// Delimited tables

/// Header plus rows of raw cells. Cells may be double-quoted ("" escapes a
/// quote); CRLF line endings are accepted; blank lines are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for diagnostics.
  std::vector<std::size_t> lines;

  std::optional<std::size_t> column(const std::string& name) const;
};

/// `delimiter` 0 means guess: tab if the header line holds one, else comma.
Table parse_table(std::istream& in, char delimiter = 0);
Table read_table(const std::filesystem::path& path, char delimiter = 0);

// ---------------------------------------------------------------------------
// View manifest

struct ViewSpec {
  std::string name;
  std::vector<std::string> columns;
  /// Inclusive [first, last] in header order; expanded against the table.
  std::optional<std::pair<std::string, std::string>> range;
};

struct ViewManifest {
  std::string name;
  std::string label_column;
  char delimiter = 0;
  std::vector<ViewSpec> views;
  std::string notes;
};

ViewManifest parse_manifest(const std::string& json_text);
ViewManifest load_manifest(const std::filesystem::path& path);

/// Column indices of every view, with ranges expanded. Throws IngestionError
/// for absent columns, overlapping views, or a view containing the label.
std::vector<std::vector<std::size_t>> resolve_views(const ViewManifest& manifest,
                                                    const Table& table);

/// Labels map to ids by order of first appearance.
MultiViewDataset load_dataset(const Table& table, const ViewManifest& manifest);
MultiViewDataset load_dataset(const std::filesystem::path& table_path,
                              const ViewManifest& manifest);

/// Feature views of a table, without labels (for scoring new samples).
/// Returns one Matrix per manifest view.
std::vector<Matrix> load_features(const Table& table, const ViewManifest& manifest);

/// Writes `data` as a comma-separated table (label column "label", feature
/// columns "<view>_f<j>") with round-trip precision, and its manifest.
void write_dataset(const MultiViewDataset& data, const std::filesystem::path& table_path,
                   const std::filesystem::path& manifest_path);

// ---------------------------------------------------------------------------
// Synthetic multi-view data

/// Samples fall into latent regions. In region r only view
/// informative_views[r] carries class signal (class centroids at
/// +-separation per feature plus Gaussian noise of sd `noise`); every other
/// view is standard normal noise.
struct SynthSpec {
  std::size_t n_samples = 400;
  std::size_t n_views = 5;
  /// One entry per view, or a single entry applied to all views.
  std::vector<std::size_t> view_dims = {10};
  std::size_t regions = 2;
  std::vector<std::size_t> informative_views = {0, 1};
  double noise = 1.0;
  double separation = 1.0;
  /// Class proportions; normalized.
  std::vector<double> class_balance = {0.5, 0.5};
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t dims(std::size_t view) const;
};

SynthSpec parse_synth_spec(const std::string& json_text);
SynthSpec load_synth_spec(const std::filesystem::path& path);

struct SyntheticData {
  MultiViewDataset data;
  std::vector<std::size_t> regions;
};

SyntheticData generate_synthetic(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Model container

inline constexpr std::uint32_t kModelMajorVersion = 1;
inline constexpr std::uint32_t kModelMinorVersion = 0;

void save_model(const ViewEnsemble& ensemble, std::ostream& out);
void save_model(const ViewEnsemble& ensemble, const std::filesystem::path& path);

/// Throws VersionMismatch for a different major version and
/// CorruptContainer for anything that does not decode.
ViewEnsemble load_model(std::istream& in);
ViewEnsemble load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Accuracy tables (external baselines, compare input)

/// Columns: dataset,method,mean_accuracy[,std_accuracy]. Rows may come in
/// any order but every (dataset, method) pair must appear exactly once.
AccuracyTable parse_accuracy_table(const Table& table);
AccuracyTable read_accuracy_table(const std::filesystem::path& path);

}  // namespace mvrf
