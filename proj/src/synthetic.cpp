#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <fmt/format.h>
#include <json.hpp>

#include "mvrf/data_io.hpp"
#include "mvrf/errors.hpp"
#include "mvrf/random.hpp"

namespace mvrf {

namespace {

// Box-Muller on the library's own uniform draws, so samples depend only on
// the engine stream.
double standard_normal(Rng& rng) {
  double u = 0.0;
  do {
    u = uniform_unit(rng);
  } while (u <= 0.0);
  const double v = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

// Largest-remainder apportionment of n over normalized proportions.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double exact = static_cast<double>(n) * weights[c] / total;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    used += counts[c];
    remainders.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[remainders[k].second];
  return counts;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_samples < 2) throw InvalidInput("synthetic spec: n_samples must be at least 2");
  if (n_views < 1) throw InvalidInput("synthetic spec: n_views must be at least 1");
  if (view_dims.size() != 1 && view_dims.size() != n_views) {
    throw InvalidInput("synthetic spec: view_dims needs 1 or n_views entries");
  }
  for (std::size_t d : view_dims) {
    if (d < 1) throw InvalidInput("synthetic spec: view dimension must be at least 1");
  }
  if (regions < 1) throw InvalidInput("synthetic spec: regions must be at least 1");
  if (informative_views.size() != regions) {
    throw InvalidInput("synthetic spec: informative_views needs one entry per region");
  }
  for (std::size_t v : informative_views) {
    if (v >= n_views) {
      throw InvalidInput(fmt::format("synthetic spec: informative view {} >= n_views", v));
    }
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw InvalidInput("synthetic spec: noise must be a nonnegative number");
  }
  if (!std::isfinite(separation)) throw InvalidInput("synthetic spec: separation must be finite");
  if (class_balance.size() < 2) throw InvalidInput("synthetic spec: need at least 2 classes");
  for (double p : class_balance) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw InvalidInput("synthetic spec: class proportions must be positive");
    }
  }
}

std::size_t SynthSpec::dims(std::size_t view) const {
  return view_dims.size() == 1 ? view_dims.front() : view_dims.at(view);
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    SynthSpec s;
    s.n_samples = j.value("n_samples", s.n_samples);
    s.n_views = j.value("n_views", s.n_views);
    if (j.contains("view_dims")) {
      const auto& d = j.at("view_dims");
      s.view_dims = d.is_array() ? d.get<std::vector<std::size_t>>()
                                 : std::vector<std::size_t>{d.get<std::size_t>()};
    }
    s.regions = j.value("regions", s.regions);
    s.informative_views = j.value("informative_views", s.informative_views);
    s.noise = j.value("noise", s.noise);
    s.separation = j.value("separation", s.separation);
    s.class_balance = j.value("class_balance", s.class_balance);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(fmt::format("synthetic spec: {}", e.what()));
  } catch (const InvalidInput& e) {
    throw IngestionError(e.what());
  }
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(fmt::format("cannot open synthetic spec '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str());
}

SyntheticData generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_samples;
  const std::size_t n_classes = spec.class_balance.size();
  Rng rng(spec.seed);

  SyntheticData out;
  auto& data = out.data;
  data.name = "synthetic";
  for (std::size_t c = 0; c < n_classes; ++c) data.class_names.push_back(fmt::format("c{}", c));

  const auto counts = apportion(n, spec.class_balance);
  for (std::size_t c = 0; c < n_classes; ++c) {
    data.labels.insert(data.labels.end(), counts[c], static_cast<ClassId>(c));
  }
  shuffle(std::span<ClassId>(data.labels), rng);

  out.regions.resize(n);
  for (auto& r : out.regions) r = uniform_index(rng, spec.regions);

  for (std::size_t q = 0; q < spec.n_views; ++q) {
    const std::size_t d = spec.dims(q);
    data.view_names.push_back(fmt::format("view{}", q));
    // Class centroids: random sign patterns; with two classes they are
    // mirror images.
    std::vector<std::vector<double>> centroid(n_classes, std::vector<double>(d));
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        centroid[c][j] = (n_classes == 2 && c == 1)
                             ? -centroid[0][j]
                             : (uniform_index(rng, 2) == 0 ? -spec.separation : spec.separation);
      }
    }
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      const bool informative = spec.informative_views[out.regions[i]] == q;
      for (std::size_t j = 0; j < d; ++j) {
        m(i, j) = informative ? centroid[data.labels[i]][j] + spec.noise * standard_normal(rng)
                              : standard_normal(rng);
      }
    }
    data.views.push_back(std::move(m));
  }
  return out;
}

}  // namespace mvrf
