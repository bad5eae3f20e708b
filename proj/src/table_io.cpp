#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <fmt/format.h>
#include <json.hpp>

#include "mvrf/data_io.hpp"
#include "mvrf/errors.hpp"

namespace mvrf {

namespace {

using nlohmann::json;

std::vector<std::string> split_line(const std::string& line, char delim, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) throw IngestionError(fmt::format("line {}: unterminated quoted cell", line_no));
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(fmt::format("cannot open {} '{}'", what, path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

char delimiter_from_json(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "," || s == "comma") return ',';
  if (s == "\t" || s == "tab") return '\t';
  if (s == ";" || s == "semicolon") return ';';
  throw IngestionError(fmt::format("manifest: unsupported delimiter '{}'", s));
}

}  // namespace

std::optional<std::size_t> Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

Table parse_table(std::istream& in, char delimiter) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (delimiter == 0) delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
      for (auto& cell : split_line(line, delimiter, line_no)) table.header.push_back(trim(cell));
      std::set<std::string> seen;
      for (const auto& h : table.header) {
        if (!seen.insert(h).second) {
          throw IngestionError(fmt::format("line {}: duplicate column '{}'", line_no, h));
        }
      }
      have_header = true;
      continue;
    }
    auto cells = split_line(line, delimiter, line_no);
    if (cells.size() != table.header.size()) {
      throw IngestionError(fmt::format("line {}: {} cells, header has {}", line_no, cells.size(),
                                       table.header.size()));
    }
    for (auto& c : cells) c = trim(c);
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_no);
  }
  if (!have_header) throw IngestionError("table has no header line");
  return table;
}

Table read_table(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(fmt::format("cannot open table '{}'", path.string()));
  try {
    return parse_table(in, delimiter);
  } catch (const IngestionError& e) {
    throw IngestionError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ViewManifest parse_manifest(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw IngestionError(fmt::format("manifest is not valid JSON: {}", e.what()));
  }
  try {
    ViewManifest m;
    m.name = j.value("name", std::string{});
    if (!j.contains("label")) throw IngestionError("manifest: missing \"label\"");
    m.label_column = j.at("label").get<std::string>();
    if (j.contains("delimiter")) m.delimiter = delimiter_from_json(j.at("delimiter"));
    m.notes = j.value("notes", std::string{});
    if (!j.contains("views") || !j.at("views").is_array() || j.at("views").empty()) {
      throw IngestionError("manifest: \"views\" must be a nonempty array");
    }
    std::set<std::string> names;
    for (const auto& v : j.at("views")) {
      ViewSpec spec;
      spec.name = v.at("name").get<std::string>();
      if (!names.insert(spec.name).second) {
        throw IngestionError(fmt::format("manifest: duplicate view name '{}'", spec.name));
      }
      if (v.contains("columns")) spec.columns = v.at("columns").get<std::vector<std::string>>();
      if (v.contains("range")) {
        const auto r = v.at("range").get<std::vector<std::string>>();
        if (r.size() != 2) {
          throw IngestionError(fmt::format("manifest: range of view '{}' needs [first, last]",
                                           spec.name));
        }
        spec.range = std::pair{r[0], r[1]};
      }
      if (spec.columns.empty() && !spec.range) {
        throw IngestionError(fmt::format("manifest: view '{}' has no columns", spec.name));
      }
      m.views.push_back(std::move(spec));
    }
    return m;
  } catch (const json::exception& e) {
    throw IngestionError(fmt::format("manifest: {}", e.what()));
  }
}

ViewManifest load_manifest(const std::filesystem::path& path) {
  auto m = parse_manifest(read_file(path, "manifest"));
  if (m.name.empty()) m.name = path.stem().string();
  return m;
}

std::vector<std::vector<std::size_t>> resolve_views(const ViewManifest& manifest,
                                                    const Table& table) {
  auto find = [&](const std::string& col, const std::string& view) {
    const auto c = table.column(col);
    if (!c) {
      throw IngestionError(fmt::format("column '{}' of view '{}' not found in table", col, view));
    }
    return *c;
  };
  const auto label = table.column(manifest.label_column);
  if (!label) {
    throw IngestionError(fmt::format("label column '{}' not found in table", manifest.label_column));
  }
  std::map<std::size_t, std::string> owner;
  std::vector<std::vector<std::size_t>> out;
  for (const auto& view : manifest.views) {
    std::vector<std::size_t> cols;
    for (const auto& c : view.columns) cols.push_back(find(c, view.name));
    if (view.range) {
      const std::size_t first = find(view.range->first, view.name);
      const std::size_t last = find(view.range->second, view.name);
      if (first > last) {
        throw IngestionError(fmt::format("range of view '{}' runs backwards", view.name));
      }
      for (std::size_t c = first; c <= last; ++c) cols.push_back(c);
    }
    for (std::size_t c : cols) {
      if (c == *label) {
        throw IngestionError(
            fmt::format("view '{}' includes the label column '{}'", view.name, table.header[c]));
      }
      const auto [it, fresh] = owner.emplace(c, view.name);
      if (!fresh) {
        throw IngestionError(fmt::format("column '{}' used by views '{}' and '{}'",
                                         table.header[c], it->second, view.name));
      }
    }
    out.push_back(std::move(cols));
  }
  return out;
}

std::vector<Matrix> load_features(const Table& table, const ViewManifest& manifest) {
  const auto views = resolve_views(manifest, table);
  std::vector<Matrix> out;
  for (std::size_t q = 0; q < views.size(); ++q) {
    Matrix m(table.rows.size(), views[q].size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      for (std::size_t j = 0; j < views[q].size(); ++j) {
        const std::size_t c = views[q][j];
        const auto v = parse_real(table.rows[r][c]);
        if (!v) {
          throw IngestionError(fmt::format("line {}, column '{}' ({}): '{}' is not a finite number",
                                           table.lines[r], table.header[c], c + 1,
                                           table.rows[r][c]));
        }
        m(r, j) = *v;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

MultiViewDataset load_dataset(const Table& table, const ViewManifest& manifest) {
  MultiViewDataset data;
  data.name = manifest.name;
  data.views = load_features(table, manifest);
  for (const auto& v : manifest.views) data.view_names.push_back(v.name);
  const std::size_t label = *table.column(manifest.label_column);
  std::map<std::string, ClassId> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& text = table.rows[r][label];
    if (text.empty()) {
      throw IngestionError(fmt::format("line {}, column '{}' ({}): missing label", table.lines[r],
                                       manifest.label_column, label + 1));
    }
    const auto [it, fresh] = ids.emplace(text, static_cast<ClassId>(data.class_names.size()));
    if (fresh) data.class_names.push_back(text);
    data.labels.push_back(it->second);
  }
  try {
    data.validate();
  } catch (const InvalidInput& e) {
    throw IngestionError(fmt::format("dataset '{}': {}", data.name, e.what()));
  }
  return data;
}

MultiViewDataset load_dataset(const std::filesystem::path& table_path,
                              const ViewManifest& manifest) {
  return load_dataset(read_table(table_path, manifest.delimiter), manifest);
}

void write_dataset(const MultiViewDataset& data, const std::filesystem::path& table_path,
                   const std::filesystem::path& manifest_path) {
  std::ofstream out(table_path, std::ios::binary);
  if (!out) throw IngestionError(fmt::format("cannot write '{}'", table_path.string()));
  json manifest;
  manifest["name"] = data.name;
  manifest["label"] = "label";
  manifest["delimiter"] = ",";
  manifest["views"] = json::array();
  std::string header = "label";
  for (std::size_t q = 0; q < data.n_views(); ++q) {
    const auto& name = data.view_names[q];
    const std::size_t d = data.views[q].cols();
    for (std::size_t j = 0; j < d; ++j) header += fmt::format(",{}_f{}", name, j);
    manifest["views"].push_back(
        {{"name", name}, {"range", {fmt::format("{}_f0", name), fmt::format("{}_f{}", name, d - 1)}}});
  }
  out << header << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.class_names[data.labels[i]];
    for (const auto& view : data.views) {
      for (double v : view.row(i)) out << ',' << fmt::format("{}", v);
    }
    out << '\n';
  }
  std::ofstream mout(manifest_path, std::ios::binary);
  if (!mout) throw IngestionError(fmt::format("cannot write '{}'", manifest_path.string()));
  mout << manifest.dump(2) << '\n';
}

AccuracyTable parse_accuracy_table(const Table& table) {
  const auto dcol = table.column("dataset");
  const auto mcol = table.column("method");
  const auto acol = table.column("mean_accuracy");
  const auto scol = table.column("std_accuracy");
  if (!dcol || !mcol || !acol) {
    throw IngestionError("accuracy table needs columns dataset, method, mean_accuracy");
  }
  AccuracyTable t;
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto mean = parse_real(row[*acol]);
    if (!mean) {
      throw IngestionError(fmt::format("line {}: bad mean_accuracy '{}'", table.lines[r], row[*acol]));
    }
    double sd = std::nan("");
    if (scol && !row[*scol].empty()) {
      const auto v = parse_real(row[*scol]);
      if (!v) {
        throw IngestionError(fmt::format("line {}: bad std_accuracy '{}'", table.lines[r], row[*scol]));
      }
      sd = *v;
    }
    if (std::find(t.datasets.begin(), t.datasets.end(), row[*dcol]) == t.datasets.end()) {
      t.datasets.push_back(row[*dcol]);
    }
    if (std::find(t.methods.begin(), t.methods.end(), row[*mcol]) == t.methods.end()) {
      t.methods.push_back(row[*mcol]);
    }
    if (!cells.emplace(std::pair{row[*dcol], row[*mcol]}, std::pair{*mean, sd}).second) {
      throw IngestionError(fmt::format("line {}: duplicate entry for dataset '{}', method '{}'",
                                       table.lines[r], row[*dcol], row[*mcol]));
    }
  }
  for (const auto& d : t.datasets) {
    std::vector<double> mean;
    std::vector<double> sd;
    for (const auto& m : t.methods) {
      const auto it = cells.find({d, m});
      if (it == cells.end()) {
        throw IngestionError(fmt::format("accuracy table lacks dataset '{}', method '{}'", d, m));
      }
      mean.push_back(it->second.first);
      sd.push_back(it->second.second);
    }
    t.mean.push_back(std::move(mean));
    t.std.push_back(std::move(sd));
  }
  if (t.datasets.empty()) throw IngestionError("accuracy table has no rows");
  return t;
}

AccuracyTable read_accuracy_table(const std::filesystem::path& path) {
  return parse_accuracy_table(read_table(path));
}

}  // namespace mvrf
