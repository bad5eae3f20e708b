// Model container layout (all integers little-endian):
//
//   magic     8 bytes  "MVRFMODL"
//   major     u32
//   minor     u32
//   length    u64      payload byte count
//   payload   length bytes
//   checksum  u64      FNV-1a 64 of the payload
//
// Payload, in order:
//   config    u64 n_trees, u8 has_max_features, u64 max_features,
//             u64 min_samples_split, u8 has_max_depth, u64 max_depth,
//             u64 seed, u64 n_neighbor
//   classes   u64 count, then strings
//   views     u64 Q, then per view:
//             string name
//             dataset: u64 N, u64 d, N*d f64 (row-major), N u32 labels
//             forest:  u64 M, then per tree
//                        u64 nodes, per node i32 feature, f64 threshold,
//                        u32 left, u32 right, u32 leaf
//                        u64 leaves, per leaf J u32 counts
//                      then ceil(M*N/8) bytes of in-bag bits, row-major
//                      (tree k, sample i) at bit k*N+i, LSB first
//
// Strings are u64 length followed by UTF-8 bytes; f64 is the IEEE-754 bit
// pattern as u64.

#include <bit>
#include <fstream>
#include <sstream>
#include <fmt/format.h>

#include "mvrf/data_io.hpp"
#include "mvrf/errors.hpp"

namespace mvrf {

namespace {

constexpr char kMagic[8] = {'M', 'V', 'R', 'F', 'M', 'O', 'D', 'L'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    buf_ += s;
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= static_cast<std::uint32_t>(u8()) << s;
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int s = 0; s < 64; s += 8) v |= static_cast<std::uint64_t>(u8()) << s;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = count(1);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  /// Reads a count and checks at least count * min_bytes bytes remain, so a
  /// corrupt length cannot trigger a huge allocation.
  std::size_t count(std::size_t min_bytes) {
    const std::uint64_t n = u64();
    if (min_bytes > 0 && n > remaining() / min_bytes) fail("count exceeds container size");
    return static_cast<std::size_t>(n);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] static void fail(const std::string& what) {
    throw CorruptContainer(fmt::format("corrupt model container: {}", what));
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail("unexpected end of data");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void write_forest(Writer& w, const RandomForest& forest) {
  w.u64(forest.size());
  for (const auto& tree : forest.trees()) {
    w.u64(tree.nodes().size());
    for (const auto& node : tree.nodes()) {
      w.i32(node.feature);
      w.f64(node.threshold);
      w.u32(node.left);
      w.u32(node.right);
      w.u32(node.leaf);
    }
    w.u64(tree.leaf_count());
    for (const auto& counts : tree.leaf_histograms()) {
      for (std::uint32_t c : counts) w.u32(c);
    }
  }
  const std::size_t n = forest.n_train();
  std::uint8_t byte = 0;
  std::size_t bit = 0;
  for (std::size_t k = 0; k < forest.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (forest.in_bag(k, i)) byte |= static_cast<std::uint8_t>(1u << (bit % 8));
      if (++bit % 8 == 0) {
        w.u8(byte);
        byte = 0;
      }
    }
  }
  if (bit % 8 != 0) w.u8(byte);
}

RandomForest read_forest(Reader& r, std::size_t n_train, std::size_t n_classes,
                         std::size_t n_features) {
  const std::size_t m = r.count(16);
  if (m == 0) Reader::fail("forest without trees");
  std::vector<DecisionTree> trees;
  trees.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<DecisionTree::Node> nodes(r.count(24));
    for (auto& node : nodes) {
      node.feature = r.i32();
      node.threshold = r.f64();
      node.left = r.u32();
      node.right = r.u32();
      node.leaf = r.u32();
    }
    std::vector<std::vector<std::uint32_t>> leaves(r.count(4 * n_classes));
    for (auto& counts : leaves) {
      counts.resize(n_classes);
      for (auto& c : counts) c = r.u32();
    }
    try {
      trees.push_back(DecisionTree::from_parts(std::move(nodes), std::move(leaves), n_classes,
                                               n_features));
    } catch (const InvalidInput& e) {
      Reader::fail(fmt::format("tree {}: {}", k, e.what()));
    }
  }
  std::vector<std::vector<bool>> inbag(m, std::vector<bool>(n_train));
  std::uint8_t byte = 0;
  std::size_t bit = 0;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < n_train; ++i) {
      if (bit % 8 == 0) byte = r.u8();
      inbag[k][i] = (byte >> (bit % 8)) & 1u;
      ++bit;
    }
  }
  try {
    return RandomForest::from_parts(std::move(trees), std::move(inbag), n_classes);
  } catch (const InvalidInput& e) {
    Reader::fail(e.what());
  }
}

}  // namespace

void save_model(const ViewEnsemble& ensemble, std::ostream& out) {
  Writer w;
  const auto& cfg = ensemble.config();
  w.u64(cfg.forest.n_trees);
  w.u8(cfg.forest.max_features ? 1 : 0);
  w.u64(cfg.forest.max_features.value_or(0));
  w.u64(cfg.forest.min_samples_split);
  w.u8(cfg.forest.max_depth ? 1 : 0);
  w.u64(cfg.forest.max_depth.value_or(0));
  w.u64(cfg.forest.seed);
  w.u64(cfg.n_neighbor);

  w.u64(ensemble.class_names().size());
  for (const auto& c : ensemble.class_names()) w.str(c);

  w.u64(ensemble.n_views());
  for (std::size_t q = 0; q < ensemble.n_views(); ++q) {
    w.str(ensemble.view_names()[q]);
    const Dataset& t = ensemble.train(q);
    w.u64(t.size());
    w.u64(t.dims());
    for (double v : t.features.values()) w.f64(v);
    for (ClassId y : t.labels) w.u32(y);
    write_forest(w, ensemble.forest(q));
  }

  Writer header;
  for (char c : kMagic) header.u8(static_cast<std::uint8_t>(c));
  header.u32(kModelMajorVersion);
  header.u32(kModelMinorVersion);
  header.u64(w.bytes().size());
  Writer trailer;
  trailer.u64(fnv1a(w.bytes()));
  out << header.bytes() << w.bytes() << trailer.bytes();
  if (!out) throw Error("failed writing model container");
}

void save_model(const ViewEnsemble& ensemble, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write model '{}'", path.string()));
  save_model(ensemble, out);
}

ViewEnsemble load_model(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  Reader head(bytes);
  for (char c : kMagic) {
    if (head.u8() != static_cast<std::uint8_t>(c)) Reader::fail("bad magic");
  }
  const std::uint32_t major = head.u32();
  const std::uint32_t minor = head.u32();
  if (major != kModelMajorVersion) {
    throw VersionMismatch(fmt::format("model container version {}.{} is not readable by {}.{}",
                                      major, minor, kModelMajorVersion, kModelMinorVersion));
  }
  const std::uint64_t length = head.u64();
  if (head.remaining() != length + 8) Reader::fail("length does not match container size");
  const std::string_view payload = std::string_view(bytes).substr(bytes.size() - head.remaining(), length);
  Reader tail(std::string_view(bytes).substr(bytes.size() - 8));
  if (tail.u64() != fnv1a(payload)) Reader::fail("checksum mismatch");

  Reader r(payload);
  EnsembleConfig cfg;
  cfg.forest.n_trees = r.u64();
  const bool has_mtry = r.u8() != 0;
  const std::uint64_t mtry = r.u64();
  if (has_mtry) cfg.forest.max_features = mtry;
  cfg.forest.min_samples_split = r.u64();
  const bool has_depth = r.u8() != 0;
  const std::uint64_t depth = r.u64();
  if (has_depth) cfg.forest.max_depth = depth;
  cfg.forest.seed = r.u64();
  cfg.n_neighbor = r.u64();

  std::vector<std::string> classes(r.count(8));
  for (auto& c : classes) c = r.str();

  const std::size_t views = r.count(8);
  std::vector<std::string> names;
  std::vector<Dataset> train;
  std::vector<RandomForest> forests;
  for (std::size_t q = 0; q < views; ++q) {
    names.push_back(r.str());
    Dataset t;
    const std::size_t n = r.count(4);
    const std::size_t d = r.count(0);
    if (d == 0 || n > r.remaining() / (8 * d + 4)) Reader::fail("dataset shape exceeds container");
    std::vector<double> values(n * d);
    for (auto& v : values) v = r.f64();
    t.features = Matrix(n, d, std::move(values));
    t.labels.resize(n);
    for (auto& y : t.labels) y = r.u32();
    t.n_classes = classes.size();
    try {
      t.validate();
    } catch (const InvalidInput& e) {
      Reader::fail(fmt::format("view '{}': {}", names.back(), e.what()));
    }
    forests.push_back(read_forest(r, n, classes.size(), d));
    train.push_back(std::move(t));
  }
  if (r.remaining() != 0) Reader::fail("trailing bytes in payload");
  try {
    return ViewEnsemble::from_forests(std::move(forests), std::move(train), std::move(names),
                                      std::move(classes), cfg);
  } catch (const InvalidInput& e) {
    Reader::fail(e.what());
  } catch (const UndefinedAccuracy& e) {
    Reader::fail(e.what());
  }
}

ViewEnsemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptContainer(fmt::format("cannot open model '{}'", path.string()));
  return load_model(in);
}

}  // namespace mvrf
