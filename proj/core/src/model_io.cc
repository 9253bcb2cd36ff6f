#include "featureless/model_io.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace featureless {
namespace {

static_assert(std::endian::native == std::endian::little,
              "model container I/O assumes a little-endian host");

constexpr char kMagic[4] = {'M', 'C', 'W', 'B'};

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void i32s(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) i32(x);
  }
  void raw(const void* data, std::size_t size) {
    buffer_.append(static_cast<const char*>(data), size);
  }
  std::string take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string context)
      : data_(bytes.data()), size_(bytes.size()), context_(std::move(context)) {}

  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int32_t i32() { return pod<std::int32_t>(); }
  double f64() { return pod<double>(); }
  std::string str() {
    const std::uint64_t n = count(1);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> f64s() {
    const std::uint64_t n = count(sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), data_ + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::vector<int> i32s() {
    const std::uint64_t n = count(sizeof(std::int32_t));
    std::vector<int> v(n);
    for (auto& x : v) x = i32();
    return v;
  }
  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == size_; }
  void expect_done() const {
    if (!done()) throw Error("model file: trailing bytes in " + context_);
  }

 private:
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t count(std::size_t element_size) {
    const std::uint64_t n = u64();
    if (element_size != 0 && n > (size_ - pos_) / element_size) {
      throw Error("model file truncated in " + context_);
    }
    return n;
  }
  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw Error("model file truncated in " + context_);
  }

  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string context_;
};

void write_tree(Writer& w, const DecisionTree& tree) {
  w.i32(tree.num_classes());
  w.i32(tree.max_depth());
  w.u64(tree.nodes().size());
  for (const TreeNode& n : tree.nodes()) {
    w.i32(n.feature);
    w.f64(n.threshold);
    w.i32(n.left);
    w.i32(n.right);
    w.i32(n.leaf);
  }
  w.f64s(tree.leaf_table());
}

DecisionTree read_tree(Reader& r) {
  const int k = r.i32();
  const int max_depth = r.i32();
  const std::uint64_t count = r.u64();
  std::vector<TreeNode> nodes;
  nodes.reserve(std::min<std::uint64_t>(count, 1 << 20));
  for (std::uint64_t i = 0; i < count; ++i) {
    TreeNode n;
    n.feature = r.i32();
    n.threshold = r.f64();
    n.left = r.i32();
    n.right = r.i32();
    n.leaf = r.i32();
    nodes.push_back(n);
  }
  return DecisionTree(std::move(nodes), r.f64s(), k, max_depth);
}

void write_matrix(Writer& w, const Matrix& m) {
  w.u64(m.rows());
  w.u64(m.cols());
  w.f64s(m.data());
}

Matrix read_matrix(Reader& r) {
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  std::vector<double> data = r.f64s();
  if (data.size() != rows * cols) throw Error("model file: matrix size mismatch");
  Matrix m(rows, cols);
  m.data() = std::move(data);
  return m;
}

std::string encode_codebook(const Codebook& cb) {
  Writer w;
  w.str(std::string(to_string(cb.kind)));
  write_matrix(w, cb.centers);
  return w.take();
}

Codebook decode_codebook(const std::string& bytes) {
  Reader r(bytes, "CDBK");
  Codebook cb;
  cb.kind = parse_descriptor_kind(r.str());
  cb.centers = read_matrix(r);
  r.expect_done();
  return cb;
}

std::string encode_ensemble(const Ensemble& e) {
  Writer w;
  w.i32(e.num_classes);
  w.i32(e.dim);
  w.f64(e.alpha);
  w.u64(e.weaks.size());
  for (const WeakClassifier& weak : e.weaks) {
    w.i32s(weak.features);
    write_tree(w, weak.tree);
  }
  return w.take();
}

Ensemble decode_ensemble(const std::string& bytes) {
  Reader r(bytes, "ENSM");
  Ensemble e;
  e.num_classes = r.i32();
  e.dim = r.i32();
  e.alpha = r.f64();
  const std::uint64_t count = r.u64();
  for (std::uint64_t m = 0; m < count; ++m) {
    std::vector<int> features = r.i32s();
    DecisionTree tree = read_tree(r);
    if (tree.num_classes() != e.num_classes) throw Error("model file: class count mismatch in ENSM");
    for (int f : features) {
      if (f < 0 || f >= e.dim) throw Error("model file: feature index out of range in ENSM");
    }
    if (tree.max_feature() >= static_cast<int>(features.size())) {
      throw Error("model file: tree split outside its feature subset");
    }
    e.weaks.push_back(make_weak_classifier(std::move(features), std::move(tree)));
  }
  r.expect_done();
  return e;
}

std::string encode_stopping(const Ensemble& e) {
  Writer w;
  w.u64(e.stopping.size());
  for (const StoppingStage& s : e.stopping) write_tree(w, s.tree);
  return w.take();
}

void decode_stopping(const std::string& bytes, Ensemble& e) {
  Reader r(bytes, "STOP");
  const std::uint64_t count = r.u64();
  if (count != 0 && count != e.weaks.size()) throw Error("model file: stopping stage count mismatch");
  for (std::uint64_t m = 0; m < count; ++m) {
    DecisionTree tree = read_tree(r);
    if (tree.num_classes() != e.num_classes || tree.max_feature() >= e.num_classes) {
      throw Error("model file: malformed stopping tree");
    }
    e.stopping.push_back(make_stopping_stage(std::move(tree)));
  }
  r.expect_done();
}

std::string encode_linear(const LinearModel& m) {
  Writer w;
  w.i32(m.num_classes);
  w.i32(m.dim);
  write_matrix(w, m.weights);
  w.f64s(m.biases);
  w.f64s(m.feature_mean);
  w.f64s(m.feature_scale);
  w.i32(m.config.epochs);
  w.f64(m.config.lambda);
  w.u64(m.config.seed);
  w.u32(m.config.standardize ? 1 : 0);
  return w.take();
}

LinearModel decode_linear(const std::string& bytes, const char* tag) {
  Reader r(bytes, tag);
  LinearModel m;
  m.num_classes = r.i32();
  m.dim = r.i32();
  m.weights = read_matrix(r);
  m.biases = r.f64s();
  m.feature_mean = r.f64s();
  m.feature_scale = r.f64s();
  m.config.epochs = r.i32();
  m.config.lambda = r.f64();
  m.config.seed = r.u64();
  m.config.standardize = r.u32() != 0;
  r.expect_done();
  if (m.weights.rows() != static_cast<std::size_t>(m.num_classes) ||
      m.weights.cols() != static_cast<std::size_t>(m.dim) ||
      m.biases.size() != static_cast<std::size_t>(m.num_classes)) {
    throw Error(std::string("model file: inconsistent linear model in ") + tag);
  }
  return m;
}

std::string encode_meta(const ModelContainer& m) {
  Writer w;
  w.str(m.svm_mode);
  w.u64(m.class_names.size());
  for (const auto& name : m.class_names) w.str(name);
  return w.take();
}

void decode_meta(const std::string& bytes, ModelContainer& m) {
  Reader r(bytes, "META");
  m.svm_mode = r.str();
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) m.class_names.push_back(r.str());
  r.expect_done();
}

std::uint32_t checksum(const std::string& payload) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
}

}  // namespace

std::string serialize_model(const ModelContainer& model) {
  std::vector<std::pair<std::string, std::string>> sections;
  sections.emplace_back("CONF", model.config_text);
  sections.emplace_back("META", encode_meta(model));
  if (model.codebook) sections.emplace_back("CDBK", encode_codebook(*model.codebook));
  if (model.mapper) {
    sections.emplace_back("ENSM", encode_ensemble(*model.mapper));
    sections.emplace_back("STOP", encode_stopping(*model.mapper));
  }
  if (model.svm) sections.emplace_back("LINR", encode_linear(*model.svm));
  if (model.linear_mapper) sections.emplace_back("LMAP", encode_linear(*model.linear_mapper));

  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [tag, payload] : sections) {
    w.raw(tag.data(), 4);
    w.u64(payload.size());
    w.u32(checksum(payload));
    w.raw(payload.data(), payload.size());
  }
  return w.take();
}

ModelContainer deserialize_model(const std::string& bytes) {
  Reader r(bytes, "header");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error("unsupported model format version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::map<std::string, std::string> sections;
  for (std::uint32_t s = 0; s < count; ++s) {
    std::string tag(4, '\0');
    r.bytes(tag.data(), 4);
    if (tag != "CONF" && tag != "META" && tag != "CDBK" && tag != "ENSM" &&
        tag != "STOP" && tag != "LINR" && tag != "LMAP") {
      throw Error("model file has unknown section '" + tag + "'");
    }
    const std::uint64_t size = r.u64();
    const std::uint32_t crc = r.u32();
    if (size > bytes.size()) throw Error("model file truncated in section " + tag);
    std::string payload(size, '\0');
    r.bytes(payload.data(), size);
    if (checksum(payload) != crc) throw Error("model file checksum mismatch in section " + tag);
    if (!sections.emplace(tag, std::move(payload)).second) {
      throw Error("model file has duplicate section " + tag);
    }
  }
  r.expect_done();

  ModelContainer model;
  if (auto it = sections.find("CONF"); it != sections.end()) model.config_text = it->second;
  if (auto it = sections.find("META"); it != sections.end()) decode_meta(it->second, model);
  if (auto it = sections.find("CDBK"); it != sections.end()) {
    model.codebook = decode_codebook(it->second);
  }
  if (auto it = sections.find("ENSM"); it != sections.end()) {
    model.mapper = decode_ensemble(it->second);
    if (auto stop = sections.find("STOP"); stop != sections.end()) {
      decode_stopping(stop->second, *model.mapper);
    }
  }
  if (auto it = sections.find("LINR"); it != sections.end()) {
    model.svm = decode_linear(it->second, "LINR");
  }
  if (auto it = sections.find("LMAP"); it != sections.end()) {
    model.linear_mapper = decode_linear(it->second, "LMAP");
  }
  return model;
}

void save_model(const ModelContainer& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing model " + path.string());
}

ModelContainer load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace featureless
