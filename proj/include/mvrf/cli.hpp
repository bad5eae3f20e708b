#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvrf::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

/// Parsed command line. Defaults follow the reference protocol: 500 trees,
/// 7 neighbors, 10 repeats of a stratified 50/50 split.
struct RunConfig {
  std::string subcommand;
  std::vector<std::filesystem::path> data;
  std::vector<std::filesystem::path> manifests;
  std::vector<std::filesystem::path> synth;
  std::vector<std::string> methods = {"MVRF", "WRF", "GDV", "LDV", "GLDV"};
  std::size_t n_trees = 500;
  std::size_t n_neighbor = 7;
  std::size_t repeats = 10;
  double fraction = 0.5;
  std::vector<double> a_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> baseline;
  std::optional<std::string> reference;
  std::optional<std::filesystem::path> table;
  std::optional<std::filesystem::path> model;
  std::string method = "GLDV";
  unsigned threads = 0;
};

/// Entry point shared by the executable and the tests. Returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mvrf::cli
