#include "crystclr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "crystclr/errors.hpp"

namespace crystclr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'C', 'L', 'R'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buf_.append(bytes, sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) { buf_.append(static_cast<const char*>(data), n); }
  void put_array(const std::string& name, const Eigen::MatrixXd& m, bool vector = false) {
    put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    put_bytes(name.data(), name.size());
    if (vector) {
      put<std::uint8_t>(1);
      put<std::uint32_t>(static_cast<std::uint32_t>(m.size()));
    } else {
      put<std::uint8_t>(2);
      put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
      put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(m(r, c));
    }
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > data_.size()) {
      throw DataError(path_ + ": truncated checkpoint while reading " + what);
    }
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(std::size_t n) {
    if (pos_ + n > data_.size()) throw DataError(path_ + ": truncated checkpoint in array name");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, const AdamState& state,
                     const GraphConfig& graph) {
  Writer w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  std::uint32_t count = 0;
  Writer body;
  params.for_each([&](const std::string& name, const Eigen::MatrixXd& m) {
    body.put_array(name, m);
    ++count;
  });
  state.m.for_each([&](const std::string& name, const Eigen::MatrixXd& m) {
    body.put_array("opt/m/" + name, m);
    ++count;
  });
  state.v.for_each([&](const std::string& name, const Eigen::MatrixXd& m) {
    body.put_array("opt/v/" + name, m);
    ++count;
  });
  Eigen::MatrixXd step(1, 1);
  step(0, 0) = static_cast<double>(state.step);
  body.put_array("opt/step", step, true);
  Eigen::MatrixXd hyper(1, 4);
  hyper << state.hyper.lr, state.hyper.beta1, state.hyper.beta2, state.hyper.eps;
  body.put_array("opt/hyper", hyper, true);
  Eigen::MatrixXd meta(1, 6);
  meta << graph.cutoff, graph.max_neighbors, graph.gauss_min, graph.gauss_max, graph.gauss_count,
      graph.gauss_width.value_or(0.0);
  body.put_array("meta/graph", meta, true);
  count += 3;
  w.put<std::uint32_t>(count);
  w.put_bytes(body.bytes().data(), body.bytes().size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open checkpoint for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError(path + ": failed writing checkpoint");
}

Checkpoint load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open checkpoint");
  std::ostringstream buf;
  buf << in.rdbuf();
  Reader r(buf.str(), path);

  char magic[4];
  for (char& c : magic) c = r.get<char>("header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError(path + ": bad checkpoint header");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("array count");
  std::map<std::string, Eigen::MatrixXd> arrays;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = r.get<std::uint16_t>("name length");
    std::string name = r.get_string(name_len);
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank < 1 || rank > 2) {
      throw DataError(path + ": array '" + name + "' has unsupported rank " + std::to_string(rank));
    }
    std::uint32_t rows = 1;
    std::uint32_t cols = r.get<std::uint32_t>("dims");
    if (rank == 2) {
      rows = cols;
      cols = r.get<std::uint32_t>("dims");
    }
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.get<double>(name.c_str());
    }
    arrays.emplace(std::move(name), std::move(m));
  }
  if (!r.at_end()) throw DataError(path + ": trailing bytes after checkpoint arrays");

  auto take = [&](const std::string& name) -> Eigen::MatrixXd& {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw DataError(path + ": checkpoint lacks array '" + name + "'");
    return it->second;
  };

  // Layer count from the names present, feature widths from the embedding.
  int layers = 0;
  while (arrays.count("encoder/conv" + std::to_string(layers) + "/gate_w")) ++layers;
  ModelConfig cfg;
  const Eigen::MatrixXd& embedding = take("encoder/embedding");
  cfg.atom_feat_dim = static_cast<int>(embedding.cols());
  cfg.n_conv_layers = layers;
  cfg.hidden_dim = static_cast<int>(take("encoder/out_w").cols());
  cfg.edge_feat_dim = layers > 0 ? static_cast<int>(take("encoder/conv0/gate_w").rows()) -
                                       2 * cfg.atom_feat_dim
                                 : 0;
  const ModelConfig target = expected.value_or(cfg);

  Checkpoint ck{ModelParams::zeros(target), {}, {}};
  auto fill = [&](const std::string& name, Eigen::MatrixXd& dst) {
    const Eigen::MatrixXd& src = take(name);
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
      throw ShapeError(path + ": array '" + name + "' has shape " + std::to_string(src.rows()) +
                       "x" + std::to_string(src.cols()) + ", config expects " +
                       std::to_string(dst.rows()) + "x" + std::to_string(dst.cols()));
    }
    dst = src;
  };
  ck.params.for_each([&](const std::string& name, Eigen::MatrixXd& m) { fill(name, m); });
  if (arrays.count("encoder/conv" + std::to_string(target.n_conv_layers) + "/gate_w")) {
    throw ShapeError(path + ": checkpoint has more convolution layers than the config");
  }
  ck.optimizer.m = ModelParams::zeros(target);
  ck.optimizer.v = ModelParams::zeros(target);
  ck.optimizer.m.for_each([&](const std::string& name, Eigen::MatrixXd& m) { fill("opt/m/" + name, m); });
  ck.optimizer.v.for_each([&](const std::string& name, Eigen::MatrixXd& m) { fill("opt/v/" + name, m); });
  const Eigen::MatrixXd& step = take("opt/step");
  const Eigen::MatrixXd& hyper = take("opt/hyper");
  const Eigen::MatrixXd& meta = take("meta/graph");
  if (step.size() != 1 || hyper.size() != 4 || meta.size() != 6) {
    throw ShapeError(path + ": malformed optimizer or graph metadata arrays");
  }
  ck.optimizer.step = static_cast<std::int64_t>(step(0, 0));
  ck.optimizer.hyper = {hyper(0, 0), hyper(0, 1), hyper(0, 2), hyper(0, 3)};
  ck.graph.cutoff = meta(0, 0);
  ck.graph.max_neighbors = static_cast<int>(meta(0, 1));
  ck.graph.gauss_min = meta(0, 2);
  ck.graph.gauss_max = meta(0, 3);
  ck.graph.gauss_count = static_cast<int>(meta(0, 4));
  if (meta(0, 5) > 0.0) ck.graph.gauss_width = meta(0, 5);
  return ck;
}

}  // namespace crystclr
