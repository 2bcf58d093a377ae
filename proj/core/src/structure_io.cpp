#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "crystclr/errors.hpp"
#include "crystclr/structure.hpp"

namespace crystclr {
namespace {

struct Token {
  std::string text;
  int line = 0;
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void fail_at(int line, const std::string& what) {
  throw DataError("CIF line " + std::to_string(line) + ": " + what);
}

// Splits one CIF line into whitespace-separated tokens, honouring quotes and
// dropping trailing comments.
std::vector<Token> tokenize_line(std::string_view line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '#') break;
    if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      while (j < line.size() &&
             !(line[j] == c &&
               (j + 1 == line.size() || std::isspace(static_cast<unsigned char>(line[j + 1]))))) {
        ++j;
      }
      if (j >= line.size()) fail_at(lineno, "unterminated quoted string");
      out.push_back({std::string(line.substr(i + 1, j - i - 1)), lineno});
      i = j + 1;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    out.push_back({std::string(line.substr(i, j - i)), lineno});
    i = j;
  }
  return out;
}

// Flattens the document into tokens; a semicolon text field becomes one token.
std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool in_text_field = false;
  int text_start = 0;
  std::string field;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == ';') {
      if (in_text_field) {
        tokens.push_back({field, text_start});
        field.clear();
        in_text_field = false;
      } else {
        in_text_field = true;
        text_start = lineno;
        field = line.substr(1);
      }
      continue;
    }
    if (in_text_field) {
      field += "\n" + line;
      continue;
    }
    auto line_tokens = tokenize_line(line, lineno);
    tokens.insert(tokens.end(), line_tokens.begin(), line_tokens.end());
  }
  if (in_text_field) fail_at(text_start, "unterminated semicolon text field");
  return tokens;
}

bool is_tag(const Token& t) { return !t.text.empty() && t.text.front() == '_'; }
bool is_keyword(const Token& t) {
  const std::string l = lower(t.text);
  return l == "loop_" || l.rfind("data_", 0) == 0 || l.rfind("save_", 0) == 0 ||
         l == "global_" || l == "stop_";
}

double parse_number(const Token& token, const std::string& tag) {
  std::string s = token.text;
  if (auto paren = s.find('('); paren != std::string::npos) s.erase(paren);
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    fail_at(token.line, "malformed number '" + token.text + "' for " + tag);
  }
  return value;
}

int parse_element(const Token& token) {
  std::string symbol;
  for (char c : token.text) {
    if (!std::isalpha(static_cast<unsigned char>(c))) break;
    if (symbol.size() == 2) break;
    symbol += c;
  }
  if (!symbol.empty()) {
    symbol[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(symbol[0])));
    if (symbol.size() == 2) {
      symbol[1] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[1])));
    }
  }
  const auto& table = PeriodicTable::instance();
  if (auto z = table.atomic_number(symbol)) return *z;
  fail_at(token.line, "unknown element symbol '" + token.text + "'");
}

struct AtomLoop {
  std::vector<std::string> columns;
  std::vector<std::vector<Token>> rows;
  int line = 0;
};

}  // namespace

CrystalStructure parse_cif(std::string_view text, std::string fallback_id) {
  const std::vector<Token> tokens = tokenize(text);
  std::map<std::string, Token> items;
  std::optional<AtomLoop> atoms;
  std::string block_name;
  bool seen_block = false;

  std::size_t i = 0;
  while (i < tokens.size()) {
    const Token& t = tokens[i];
    const std::string l = lower(t.text);
    if (l.rfind("data_", 0) == 0) {
      if (seen_block) fail_at(t.line, "multiple data blocks are not supported");
      seen_block = true;
      block_name = t.text.substr(5);
      ++i;
    } else if (l == "loop_") {
      const int loop_line = t.line;
      ++i;
      std::vector<std::string> columns;
      while (i < tokens.size() && is_tag(tokens[i])) columns.push_back(lower(tokens[i++].text));
      if (columns.empty()) fail_at(loop_line, "loop_ without column tags");
      std::vector<Token> values;
      while (i < tokens.size() && !is_tag(tokens[i]) && !is_keyword(tokens[i])) {
        values.push_back(tokens[i++]);
      }
      if (values.size() % columns.size() != 0) {
        fail_at(loop_line, "loop has " + std::to_string(values.size()) + " values for " +
                               std::to_string(columns.size()) + " columns");
      }
      const bool is_atom_loop =
          std::any_of(columns.begin(), columns.end(),
                      [](const std::string& c) { return c.rfind("_atom_site_fract_", 0) == 0; });
      if (is_atom_loop) {
        if (atoms) fail_at(loop_line, "second atom-site loop");
        AtomLoop loop{columns, {}, loop_line};
        for (std::size_t r = 0; r < values.size(); r += columns.size()) {
          loop.rows.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(r),
                                 values.begin() + static_cast<std::ptrdiff_t>(r + columns.size()));
        }
        atoms = std::move(loop);
      }
    } else if (is_tag(t)) {
      if (i + 1 >= tokens.size() || is_tag(tokens[i + 1]) || is_keyword(tokens[i + 1])) {
        fail_at(t.line, "tag " + t.text + " has no value");
      }
      items[l] = tokens[i + 1];
      i += 2;
    } else {
      fail_at(t.line, "unexpected token '" + t.text + "'");
    }
  }

  auto cell = [&](const char* tag) {
    auto it = items.find(tag);
    if (it == items.end()) throw DataError(std::string("CIF: missing required tag '") + tag + "'");
    return parse_number(it->second, tag);
  };
  const double a = cell("_cell_length_a");
  const double b = cell("_cell_length_b");
  const double c = cell("_cell_length_c");
  const double alpha = cell("_cell_angle_alpha");
  const double beta = cell("_cell_angle_beta");
  const double gamma = cell("_cell_angle_gamma");

  if (!atoms) throw DataError("CIF: missing required atom-site loop (_atom_site_fract_x/y/z)");
  auto column = [&](const char* tag) -> std::optional<std::size_t> {
    auto it = std::find(atoms->columns.begin(), atoms->columns.end(), tag);
    if (it == atoms->columns.end()) return std::nullopt;
    return static_cast<std::size_t>(it - atoms->columns.begin());
  };
  auto required_column = [&](const char* tag) {
    auto idx = column(tag);
    if (!idx) throw DataError(std::string("CIF: missing required tag '") + tag + "'");
    return *idx;
  };
  auto symbol_col = column("_atom_site_type_symbol");
  if (!symbol_col) symbol_col = column("_atom_site_label");
  if (!symbol_col) throw DataError("CIF: missing required tag '_atom_site_type_symbol'");
  const std::size_t xs = required_column("_atom_site_fract_x");
  const std::size_t ys = required_column("_atom_site_fract_y");
  const std::size_t zs = required_column("_atom_site_fract_z");

  std::optional<Lattice> lattice;
  try {
    lattice = Lattice::from_parameters(a, b, c, alpha, beta, gamma);
  } catch (const InvariantError& e) {
    throw DataError(std::string("CIF: invalid cell (_cell_length_*/_cell_angle_*): ") + e.what());
  }

  std::vector<Site> sites;
  for (const auto& row : atoms->rows) {
    Site site;
    site.z = parse_element(row[*symbol_col]);
    site.frac = Vec3(parse_number(row[xs], "_atom_site_fract_x"),
                     parse_number(row[ys], "_atom_site_fract_y"),
                     parse_number(row[zs], "_atom_site_fract_z"));
    sites.push_back(site);
  }
  std::string id = block_name.empty() ? std::move(fallback_id) : block_name;
  try {
    return CrystalStructure(*lattice, std::move(sites), std::move(id));
  } catch (const InvariantError& e) {
    throw DataError(std::string("CIF: ") + e.what());
  }
}

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw DataError(path + ": " + what);
}

const json& field(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(path + "." + key, "missing field");
  return *it;
}

Vec3 read_vec3(const json& node, const std::string& path) {
  if (!node.is_array() || node.size() != 3) schema_fail(path, "expected an array of 3 numbers");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!node[static_cast<std::size_t>(k)].is_number()) {
      schema_fail(path + "[" + std::to_string(k) + "]", "expected a number");
    }
    v[k] = node[static_cast<std::size_t>(k)].get<double>();
  }
  return v;
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<std::string_view> known) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      schema_fail(path + "." + key, "unknown field");
    }
  }
}

double round_sig9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

}  // namespace

CrystalStructure parse_structure_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("$: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_fail("$", "expected an object");
  reject_unknown(doc, "$", {"id", "lattice", "sites"});
  const json& id = field(doc, "$", "id");
  if (!id.is_string()) schema_fail("$.id", "expected a string");
  const json& lat = field(doc, "$", "lattice");
  if (!lat.is_array() || lat.size() != 3) schema_fail("$.lattice", "expected 3 rows");
  Mat3 rows;
  for (std::size_t r = 0; r < 3; ++r) {
    rows.row(static_cast<int>(r)) =
        read_vec3(lat[r], "$.lattice[" + std::to_string(r) + "]").transpose();
  }
  const json& sites_node = field(doc, "$", "sites");
  if (!sites_node.is_array()) schema_fail("$.sites", "expected an array");
  std::vector<Site> sites;
  for (std::size_t i = 0; i < sites_node.size(); ++i) {
    const std::string path = "$.sites[" + std::to_string(i) + "]";
    const json& s = sites_node[i];
    if (!s.is_object()) schema_fail(path, "expected an object");
    reject_unknown(s, path, {"z", "frac"});
    const json& z = field(s, path, "z");
    if (!z.is_number_integer()) schema_fail(path + ".z", "expected an integer");
    const auto zval = z.get<long long>();
    if (zval < 1 || zval > kMaxAtomicNumber) {
      schema_fail(path + ".z", "atomic number out of range (" + std::to_string(zval) + ")");
    }
    sites.push_back({static_cast<int>(zval), read_vec3(field(s, path, "frac"), path + ".frac")});
  }
  try {
    return CrystalStructure(Lattice(rows), std::move(sites), id.get<std::string>());
  } catch (const InvariantError& e) {
    throw DataError(std::string("$: ") + e.what());
  }
}

std::string write_structure_json(const CrystalStructure& structure) {
  json doc;
  doc["id"] = structure.id();
  json lattice = json::array();
  for (int r = 0; r < 3; ++r) {
    const Vec3 row = structure.lattice().row(r);
    lattice.push_back({round_sig9(row[0]), round_sig9(row[1]), round_sig9(row[2])});
  }
  doc["lattice"] = lattice;
  json sites = json::array();
  for (const Site& site : structure.sites()) {
    sites.push_back({{"z", site.z},
                     {"frac", {round_sig9(site.frac[0]), round_sig9(site.frac[1]),
                               round_sig9(site.frac[2])}}});
  }
  doc["sites"] = sites;
  return doc.dump(2) + "\n";
}

CrystalStructure read_structure_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::filesystem::path p(path);
  const std::string ext = lower(p.extension().string());
  try {
    if (ext == ".cif") return parse_cif(buf.str(), p.stem().string());
    if (ext == ".json") return parse_structure_json(buf.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  throw DataError(path + ": unsupported structure format '" + ext + "' (expected .cif or .json)");
}

}  // namespace crystclr
