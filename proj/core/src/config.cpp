#include "crystclr/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "crystclr/errors.hpp"

namespace crystclr {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvariantError("epochs must be >= 1");
  if (batch_size < 2) throw InvariantError("batch_size must be >= 2");
  if (checkpoint_every < 1) throw InvariantError("checkpoint_every must be >= 1");
  loss.validate();
  augment.validate();
  graph.validate();
  model.validate();
  if (model.edge_feat_dim != graph.gauss_count) {
    throw InvariantError("model.edge_feat_dim must equal graph.gauss_count");
  }
  if (!(optimizer.lr > 0.0)) throw InvariantError("optimizer.lr must be > 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw InvariantError("optimizer.beta1 and optimizer.beta2 must lie in [0, 1)");
  }
  if (!(optimizer.eps > 0.0)) throw InvariantError("optimizer.eps must be > 0");
}

namespace {

using nlohmann::json;

// Binds JSON keys to TrainConfig fields once, so parsing, serialisation and
// the --help listing cannot drift apart.
struct Binding {
  std::string path;  // "section.key" or "key"
  std::function<void(TrainConfig&, const json&, const std::string&)> read;
  std::function<json(const TrainConfig&)> write;
};

template <typename T>
T expect(const json& v, const std::string& path);

template <>
double expect<double>(const json& v, const std::string& path) {
  if (!v.is_number()) throw DataError("config " + path + ": expected a number");
  return v.get<double>();
}
template <>
int expect<int>(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw DataError("config " + path + ": expected an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw DataError("config " + path + ": integer out of range");
  }
  return static_cast<int>(x);
}
template <>
std::uint64_t expect<std::uint64_t>(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) throw DataError("config " + path + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}
template <>
bool expect<bool>(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw DataError("config " + path + ": expected true or false");
  return v.get<bool>();
}
template <>
std::string expect<std::string>(const json& v, const std::string& path) {
  if (!v.is_string()) throw DataError("config " + path + ": expected a string");
  return v.get<std::string>();
}

template <typename T, typename Get>
Binding bind(std::string path, Get get) {
  return Binding{
      path,
      [get](TrainConfig& c, const json& v, const std::string& p) { get(c) = expect<T>(v, p); },
      [get](const TrainConfig& c) { return json(get(c)); }};
}

#define CRYSTCLR_FIELD(T, path, member) \
  bind<T>(path, [](auto& c) -> auto& { return c.member; })

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> all = [] {
    std::vector<Binding> b = {
        CRYSTCLR_FIELD(int, "epochs", epochs),
        CRYSTCLR_FIELD(int, "batch_size", batch_size),
        CRYSTCLR_FIELD(std::uint64_t, "seed", seed),
        CRYSTCLR_FIELD(int, "checkpoint_every", checkpoint_every),
        CRYSTCLR_FIELD(std::string, "log_path", log_path),
        CRYSTCLR_FIELD(std::string, "checkpoint_path", checkpoint_path),
        CRYSTCLR_FIELD(double, "loss.tau", loss.tau),
        CRYSTCLR_FIELD(bool, "loss.use_cs", loss.use_cs),
        CRYSTCLR_FIELD(double, "loss.cs_weight", loss.cs_weight),
        CRYSTCLR_FIELD(bool, "augment.perturb_enabled", augment.perturb_enabled),
        CRYSTCLR_FIELD(bool, "augment.strain_enabled", augment.strain_enabled),
        CRYSTCLR_FIELD(bool, "augment.column_enabled", augment.column_enabled),
        CRYSTCLR_FIELD(bool, "augment.supercell_enabled", augment.supercell_enabled),
        CRYSTCLR_FIELD(double, "augment.apply_prob", augment.apply_prob),
        CRYSTCLR_FIELD(double, "augment.perturb_max_frac", augment.perturb_max_frac),
        CRYSTCLR_FIELD(double, "augment.strain_max", augment.strain_max),
        CRYSTCLR_FIELD(int, "augment.supercell_factor", augment.supercell_factor),
        CRYSTCLR_FIELD(bool, "augment.one_view", augment.one_view),
        CRYSTCLR_FIELD(double, "graph.cutoff", graph.cutoff),
        CRYSTCLR_FIELD(int, "graph.max_neighbors", graph.max_neighbors),
        CRYSTCLR_FIELD(double, "graph.gauss_min", graph.gauss_min),
        CRYSTCLR_FIELD(double, "graph.gauss_max", graph.gauss_max),
        CRYSTCLR_FIELD(int, "graph.gauss_count", graph.gauss_count),
        CRYSTCLR_FIELD(int, "model.atom_feat_dim", model.atom_feat_dim),
        CRYSTCLR_FIELD(int, "model.n_conv_layers", model.n_conv_layers),
        CRYSTCLR_FIELD(int, "model.hidden_dim", model.hidden_dim),
        CRYSTCLR_FIELD(int, "model.projection_dim", model.projection_dim),
        CRYSTCLR_FIELD(double, "optimizer.lr", optimizer.lr),
        CRYSTCLR_FIELD(double, "optimizer.beta1", optimizer.beta1),
        CRYSTCLR_FIELD(double, "optimizer.beta2", optimizer.beta2),
        CRYSTCLR_FIELD(double, "optimizer.eps", optimizer.eps),
    };
    // gauss_width is optional: null (or absent) means "spacing between centres".
    const auto width_at = std::find_if(b.begin(), b.end(), [](const Binding& x) {
      return x.path == "graph.gauss_count";
    });
    b.insert(width_at + 1, Binding{
        "graph.gauss_width",
        [](TrainConfig& c, const json& v, const std::string& p) {
          if (v.is_null()) {
            c.graph.gauss_width.reset();
          } else {
            c.graph.gauss_width = expect<double>(v, p);
          }
        },
        [](const TrainConfig& c) {
          return c.graph.gauss_width ? json(*c.graph.gauss_width) : json(nullptr);
        }});
    return b;
  }();
  return all;
}

#undef CRYSTCLR_FIELD

std::pair<std::string, std::string> split_path(const std::string& path) {
  const auto dot = path.find('.');
  if (dot == std::string::npos) return {"", path};
  return {path.substr(0, dot), path.substr(dot + 1)};
}

const Binding* find_binding(const std::string& path) {
  for (const Binding& b : bindings()) {
    if (b.path == path) return &b;
  }
  return nullptr;
}

bool is_section(const std::string& name) {
  for (const Binding& b : bindings()) {
    if (split_path(b.path).first == name) return true;
  }
  return false;
}

}  // namespace

TrainConfig parse_train_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("config: top level must be an object");
  TrainConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (is_section(key)) {
      if (!value.is_object()) throw DataError("config " + key + ": expected an object");
      for (const auto& [sub, subvalue] : value.items()) {
        const std::string path = key + "." + sub;
        const Binding* b = find_binding(path);
        if (!b) throw DataError("config " + path + ": unknown key");
        b->read(cfg, subvalue, path);
      }
    } else {
      const Binding* b = find_binding(key);
      if (!b) throw DataError("config " + key + ": unknown key");
      b->read(cfg, value, key);
    }
  }
  cfg.model.edge_feat_dim = cfg.graph.gauss_count;
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_train_config(buf.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json doc = json::object();
  for (const Binding& b : bindings()) {
    auto [section, key] = split_path(b.path);
    if (section.empty()) {
      doc[key] = b.write(cfg);
    } else {
      doc[section][key] = b.write(cfg);
    }
  }
  return doc.dump(2) + "\n";
}

std::string config_reference() {
  const TrainConfig defaults;
  std::ostringstream out;
  for (const Binding& b : bindings()) out << "  " << b.path << " = " << b.write(defaults).dump() << "\n";
  return out.str();
}

}  // namespace crystclr
