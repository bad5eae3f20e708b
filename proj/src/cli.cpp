#include "mvrf/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mvrf/data_io.hpp"
#include "mvrf/errors.hpp"
#include "mvrf/evaluation.hpp"
#include "mvrf/multiview.hpp"
#include "mvrf/report.hpp"

namespace mvrf::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(fmt::format("cannot write '{}'", path.string()));
  return f;
}

std::uint64_t resolved_seed(RunConfig& cfg) {
  if (!cfg.seed) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  return *cfg.seed;
}

std::vector<MultiViewDataset> load_datasets(const RunConfig& cfg) {
  if (cfg.data.size() != cfg.manifests.size()) {
    throw UsageError(fmt::format("{} --data but {} --manifest; give one manifest per table",
                                 cfg.data.size(), cfg.manifests.size()));
  }
  std::vector<MultiViewDataset> out;
  for (std::size_t i = 0; i < cfg.data.size(); ++i) {
    out.push_back(load_dataset(cfg.data[i], load_manifest(cfg.manifests[i])));
  }
  for (const auto& path : cfg.synth) {
    auto d = generate_synthetic(load_synth_spec(path)).data;
    d.name = path.stem().string();
    out.push_back(std::move(d));
  }
  if (out.empty()) throw UsageError("no dataset given (use --data/--manifest or --synth)");
  std::set<std::string> names;
  for (const auto& d : out) {
    if (!names.insert(d.name).second) {
      throw UsageError(fmt::format("dataset name '{}' given twice", d.name));
    }
  }
  return out;
}

EnsembleConfig ensemble_config(const RunConfig& cfg) {
  EnsembleConfig e;
  e.forest.n_trees = cfg.n_trees;
  e.forest.seed = cfg.seed.value_or(0);
  e.n_neighbor = cfg.n_neighbor;
  return e;
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ", ") + i;
  return s;
}

RunParameters protocol_params(const RunConfig& cfg, const std::vector<std::string>& methods) {
  return {
      {"seed", std::to_string(*cfg.seed)},
      {"trees", std::to_string(cfg.n_trees)},
      {"max_features", "floor(sqrt(d))"},
      {"neighbors", std::to_string(cfg.n_neighbor)},
      {"repeats", std::to_string(cfg.repeats)},
      {"train fraction", fmt::format("{}", cfg.fraction)},
      {"split", "stratified, per-class round-half-to-even"},
      {"methods", join(methods)},
      {"std", "population, over repeats (percentage points)"},
  };
}

SplitPlan split_plan(const RunConfig& cfg) {
  return SplitPlan{cfg.repeats, cfg.fraction, *cfg.seed};
}

int cmd_evaluate(RunConfig& cfg, std::ostream& out) {
  resolved_seed(cfg);
  std::vector<Combiner> methods;
  std::vector<std::string> names;
  for (const auto& m : cfg.methods) {
    methods.push_back(Combiner::parse(m));
    names.push_back(methods.back().name());
  }
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
    throw UsageError("a method is listed twice");
  }
  const auto datasets = load_datasets(cfg);
  std::vector<DatasetResult> results;
  for (const auto& d : datasets) {
    results.push_back(run_protocol(d, methods, split_plan(cfg), ensemble_config(cfg), cfg.threads));
  }
  AccuracyTable table = table_from_results(results);
  if (cfg.baseline) table = merge_external(table, read_accuracy_table(*cfg.baseline));
  const EvalReport report = build_report(std::move(results), std::move(table), cfg.reference);

  std::filesystem::create_directories(cfg.out);
  auto params = protocol_params(cfg, names);
  if (cfg.baseline) params.emplace_back("external columns", cfg.baseline->filename().string());
  {
    auto f = open_output(cfg.out / "repeats.csv");
    write_repeats_csv(f, report.results);
  }
  {
    auto f = open_output(cfg.out / "summary.md");
    write_summary_markdown(f, report, params);
  }
  {
    auto f = open_output(cfg.out / "sign_test.md");
    write_sign_test_block(f, report);
  }
  write_summary_markdown(out, report, params);
  return kOk;
}

int cmd_sweep(RunConfig& cfg, std::ostream& out) {
  resolved_seed(cfg);
  if (cfg.a_grid.empty()) throw UsageError("--a-grid is empty");
  std::vector<Combiner> methods;
  std::set<std::string> seen;
  for (double a : cfg.a_grid) {
    methods.push_back(Combiner::blend(a));
    if (!seen.insert(methods.back().name()).second) {
      throw UsageError(fmt::format("a={} listed twice in --a-grid", a));
    }
  }
  SweepReport sweep{cfg.a_grid, {}};
  for (const auto& d : load_datasets(cfg)) {
    sweep.results.push_back(
        run_protocol(d, methods, split_plan(cfg), ensemble_config(cfg), cfg.threads));
  }
  std::vector<std::string> names;
  for (const auto& m : methods) names.push_back(m.name());
  const auto params = protocol_params(cfg, names);
  std::filesystem::create_directories(cfg.out);
  {
    auto f = open_output(cfg.out / "sweep.md");
    write_sweep_markdown(f, sweep, params);
  }
  {
    auto f = open_output(cfg.out / "sweep.csv");
    write_sweep_csv(f, sweep);
  }
  {
    auto f = open_output(cfg.out / "repeats.csv");
    write_repeats_csv(f, sweep.results);
  }
  write_sweep_markdown(out, sweep, params);
  return kOk;
}

int cmd_compare(RunConfig& cfg, std::ostream& out) {
  if (!cfg.table) throw UsageError("compare needs --table");
  const EvalReport report = build_report({}, read_accuracy_table(*cfg.table), cfg.reference);
  const RunParameters params = {{"table", cfg.table->filename().string()}};
  std::filesystem::create_directories(cfg.out);
  {
    auto f = open_output(cfg.out / "summary.md");
    write_summary_markdown(f, report, params);
  }
  write_summary_markdown(out, report, params);
  return kOk;
}

int cmd_train(RunConfig& cfg, std::ostream& out) {
  resolved_seed(cfg);
  if (!cfg.model) throw UsageError("train needs --model");
  if (cfg.data.size() != 1 || cfg.manifests.size() != 1) {
    throw UsageError("train needs exactly one --data and one --manifest");
  }
  const auto data = load_dataset(cfg.data[0], load_manifest(cfg.manifests[0]));
  const auto ensemble = train_multiview(data, ensemble_config(cfg), cfg.threads);
  save_model(ensemble, *cfg.model);
  fmt::print(out, "trained {} views on {} samples (seed {})\n", ensemble.n_views(), data.size(),
             *cfg.seed);
  for (std::size_t q = 0; q < ensemble.n_views(); ++q) {
    fmt::print(out, "  {}: OOB accuracy {:.4f}\n", ensemble.view_names()[q],
               ensemble.static_weights()[q]);
  }
  return kOk;
}

int cmd_predict(RunConfig& cfg, const std::optional<std::filesystem::path>& dest,
                std::ostream& out) {
  if (!cfg.model) throw UsageError("predict needs --model");
  if (cfg.data.size() != 1 || cfg.manifests.size() != 1) {
    throw UsageError("predict needs exactly one --data and one --manifest");
  }
  const Combiner combiner = Combiner::parse(cfg.method);
  const ViewEnsemble ensemble = load_model(*cfg.model);
  const ViewManifest manifest = load_manifest(cfg.manifests[0]);
  std::vector<std::string> names;
  for (const auto& v : manifest.views) names.push_back(v.name);
  if (names != ensemble.view_names()) {
    throw IngestionError(fmt::format("manifest views ({}) do not match model views ({})",
                                     join(names), join(ensemble.view_names())));
  }
  const auto views = load_features(read_table(cfg.data[0], manifest.delimiter), manifest);

  std::ostringstream csv;
  csv << "row,method,final_label,majority_fallback";
  for (const auto& v : ensemble.view_names()) csv << ',' << v << "_label," << v << "_weight";
  csv << '\n';
  const std::size_t rows = views.front().rows();
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::vector<double>> x;
    for (const auto& m : views) x.emplace_back(m.row(i).begin(), m.row(i).end());
    const VoteRecord rec = predict(ensemble, x, combiner);
    fmt::print(csv, "{},{},{},{}", i, combiner.name(), ensemble.class_names()[rec.final_label],
               rec.majority_fallback ? 1 : 0);
    for (std::size_t q = 0; q < ensemble.n_views(); ++q) {
      fmt::print(csv, ",{},{}", ensemble.class_names()[rec.labels[q]], rec.weights.weights[q]);
    }
    csv << '\n';
  }
  if (dest) {
    auto f = open_output(*dest);
    f << csv.str();
  } else {
    out << csv.str();
  }
  return kOk;
}

int cmd_synth(RunConfig& cfg, std::ostream& out) {
  if (cfg.synth.size() != 1) throw UsageError("synth needs exactly one --synth spec");
  auto data = generate_synthetic(load_synth_spec(cfg.synth[0])).data;
  data.name = cfg.synth[0].stem().string();
  std::filesystem::create_directories(cfg.out);
  const auto table = cfg.out / (data.name + ".csv");
  const auto manifest = cfg.out / (data.name + ".json");
  write_dataset(data, table, manifest);
  fmt::print(out, "wrote {} and {}\n", table.string(), manifest.string());
  return kOk;
}

void add_data_flags(CLI::App* app, RunConfig& cfg) {
  app->add_option("--data", cfg.data, "Delimited feature table (repeatable, paired with --manifest)");
  app->add_option("--manifest", cfg.manifests, "View manifest (JSON) for the matching --data");
}

void add_protocol_flags(CLI::App* app, RunConfig& cfg) {
  add_data_flags(app, cfg);
  app->add_option("--synth", cfg.synth, "Synthetic dataset spec (JSON, repeatable)");
  app->add_option("--trees", cfg.n_trees, "Trees per forest")->envname("MVRF_TREES")->capture_default_str();
  app->add_option("--neighbors", cfg.n_neighbor, "RFD neighborhood size")
      ->envname("MVRF_NEIGHBORS")
      ->capture_default_str();
  app->add_option("--repeats", cfg.repeats, "Stratified split repeats")
      ->envname("MVRF_REPEATS")
      ->capture_default_str();
  app->add_option("--fraction", cfg.fraction, "Training fraction per split")
      ->envname("MVRF_FRACTION")
      ->capture_default_str();
  app->add_option("--seed", cfg.seed, "Master seed (random when omitted; always reported)")
      ->envname("MVRF_SEED");
  app->add_option("--out", cfg.out, "Output directory")->envname("MVRF_OUT")->capture_default_str();
  app->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")
      ->envname("MVRF_THREADS")
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::optional<std::filesystem::path> predict_out;

  CLI::App app{"Multi-view random forest voting: training, scoring and evaluation"};
  app.require_subcommand(1);

  auto* evaluate = app.add_subcommand("evaluate", "Run the repeated split protocol and report");
  add_protocol_flags(evaluate, cfg);
  evaluate->add_option("--methods", cfg.methods, "Combiners: MVRF WRF GDV LDV GLDV GLnew(a)")
      ->delimiter(',')
      ->envname("MVRF_METHODS");
  evaluate->add_option("--baseline", cfg.baseline,
                       "Accuracy table with externally computed columns (e.g. SVMRFE)");
  evaluate->add_option("--reference", cfg.reference, "Sign-test reference method");

  auto* sweep = app.add_subcommand("sweep-a", "Accuracy of GLnew(a) over a grid of a");
  add_protocol_flags(sweep, cfg);
  sweep->add_option("--a-grid", cfg.a_grid, "Comma-separated a values in [0, 1]")
      ->delimiter(',')
      ->envname("MVRF_A_GRID");

  auto* compare = app.add_subcommand("compare", "Average ranks and sign tests for an accuracy table");
  compare->add_option("--table", cfg.table, "CSV: dataset,method,mean_accuracy[,std_accuracy]");
  compare->add_option("--reference", cfg.reference, "Sign-test reference method");
  compare->add_option("--out", cfg.out, "Output directory")->envname("MVRF_OUT");

  auto* train = app.add_subcommand("train", "Train a multi-view model and save it");
  add_data_flags(train, cfg);
  train->add_option("--model", cfg.model, "Model file to write");
  train->add_option("--trees", cfg.n_trees, "Trees per forest")->envname("MVRF_TREES");
  train->add_option("--neighbors", cfg.n_neighbor, "RFD neighborhood size")->envname("MVRF_NEIGHBORS");
  train->add_option("--seed", cfg.seed, "Master seed")->envname("MVRF_SEED");
  train->add_option("--threads", cfg.threads, "Worker threads")->envname("MVRF_THREADS");

  auto* pred = app.add_subcommand("predict", "Score a table with a saved model");
  add_data_flags(pred, cfg);
  pred->add_option("--model", cfg.model, "Model file to read");
  pred->add_option("--method", cfg.method, "Combiner")->envname("MVRF_METHOD")->capture_default_str();
  pred->add_option("--out", predict_out, "CSV output file (default: stdout)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and its manifest");
  synth->add_option("--synth", cfg.synth, "Synthetic dataset spec (JSON)");
  synth->add_option("--out", cfg.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    if (cfg.subcommand == "evaluate") return cmd_evaluate(cfg, out);
    if (cfg.subcommand == "sweep-a") return cmd_sweep(cfg, out);
    if (cfg.subcommand == "compare") return cmd_compare(cfg, out);
    if (cfg.subcommand == "train") return cmd_train(cfg, out);
    if (cfg.subcommand == "predict") return cmd_predict(cfg, predict_out, out);
    if (cfg.subcommand == "synth") return cmd_synth(cfg, out);
    fmt::print(err, "error: unknown subcommand '{}'\n", cfg.subcommand);
    return kUsage;
  } catch (const UsageError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  } catch (const IngestionError& e) {
    fmt::print(err, "data error: {}\n", e.what());
    return kDataError;
  } catch (const InvalidInput& e) {
    fmt::print(err, "data error: {}\n", e.what());
    return kDataError;
  } catch (const CorruptContainer& e) {
    fmt::print(err, "data error: {}\n", e.what());
    return kDataError;
  } catch (const UndefinedAccuracy& e) {
    fmt::print(err, "data error: {}\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return kInternal;
  }
}

}  // namespace mvrf::cli
