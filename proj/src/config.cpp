#include "rlab/config.hpp"

#include "rlab/catalog.hpp"
#include "rlab/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace rlab {

namespace {

std::string escape_pointer_token(const std::string &key)
{
  std::string out;
  for (char ch : key) {
    if (ch == '~') out += "~0";
    else if (ch == '/') out += "~1";
    else out += ch;
  }
  return out;
}

std::string type_name(const json &v)
{
  return v.is_null() ? "null" : std::string(v.type_name());
}

} // namespace

json parse_config(const std::string &text, const std::string &source)
{
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw ConfigError(source + ": top level must be a JSON object");
    return j;
  } catch (const json::parse_error &e) {
    const std::size_t pos = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    long line = 1, col = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    // Drop the library prefix "[json.exception.parse_error.101] parse error at line L, column C: ".
    std::string what = e.what();
    const auto col_at = what.find("column");
    const auto cut = col_at == std::string::npos ? std::string::npos : what.find(": ", col_at);
    if (cut != std::string::npos) what = what.substr(cut + 2);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

json load_config(const std::string &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

ConfigReader::ConfigReader(const json &root)
    : ConfigReader(&root, "", std::make_shared<json>(json::object()))
{
  if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
}

ConfigReader::ConfigReader(const json *node, std::string pointer, std::shared_ptr<json> resolved)
    : node_(node), pointer_(std::move(pointer)), resolved_(std::move(resolved)),
      used_(std::make_shared<std::set<std::string>>())
{
}

std::string ConfigReader::path(const std::string &key) const
{
  std::string p = pointer_.empty() ? key : pointer_.substr(1) + "/" + key;
  for (auto &ch : p)
    if (ch == '/') ch = '.';
  return p;
}

void ConfigReader::fail(const std::string &key, const std::string &what) const
{
  throw ConfigError("config field '" + path(key) + "': " + what);
}

bool ConfigReader::has(const std::string &key) const { return node_->contains(key); }

const json &ConfigReader::at(const std::string &key) const
{
  used_->insert(key);
  if (!node_->contains(key)) fail(key, "missing required field");
  return (*node_)[key];
}

void ConfigReader::record(const std::string &key, const json &value) const
{
  (*resolved_)[json::json_pointer(pointer_ + "/" + escape_pointer_token(key))] = value;
}

void ConfigReader::skip(const std::string &key) const { used_->insert(key); }

ConfigReader ConfigReader::child(const std::string &key) const
{
  const json &v = at(key);
  if (!v.is_object()) fail(key, "expected an object, got " + type_name(v));
  ConfigReader c(&v, pointer_ + "/" + escape_pointer_token(key), resolved_);
  record(key, json::object());
  return c;
}

ConfigReader ConfigReader::child_or_empty(const std::string &key) const
{
  static const json empty = json::object();
  if (has(key)) return child(key);
  used_->insert(key);
  record(key, json::object());
  return ConfigReader(&empty, pointer_ + "/" + escape_pointer_token(key), resolved_);
}

double ConfigReader::number(const std::string &key) const
{
  const json &v = at(key);
  if (!v.is_number()) fail(key, "expected a number, got " + type_name(v));
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  record(key, x);
  return x;
}

double ConfigReader::number(const std::string &key, double fallback) const
{
  if (!has(key)) {
    used_->insert(key);
    record(key, fallback);
    return fallback;
  }
  return number(key);
}

long ConfigReader::integer(const std::string &key) const
{
  const json &v = at(key);
  if (v.is_number_integer()) {
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<long>::max()))
      fail(key, "integer out of range");
    record(key, v.get<long>());
    return v.get<long>();
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) {
      record(key, static_cast<long>(x));
      return static_cast<long>(x);
    }
  }
  fail(key, "expected an integer, got " + (v.is_number() ? v.dump() : type_name(v)));
}

long ConfigReader::integer(const std::string &key, long fallback) const
{
  if (!has(key)) {
    used_->insert(key);
    record(key, fallback);
    return fallback;
  }
  return integer(key);
}

std::uint64_t ConfigReader::unsigned_integer(const std::string &key) const
{
  const json &v = at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    fail(key, "expected a non-negative integer");
  const std::uint64_t x = v.get<std::uint64_t>();
  record(key, x);
  return x;
}

bool ConfigReader::boolean(const std::string &key, bool fallback) const
{
  used_->insert(key);
  if (!has(key)) {
    record(key, fallback);
    return fallback;
  }
  const json &v = (*node_)[key];
  if (!v.is_boolean()) fail(key, "expected true or false, got " + type_name(v));
  record(key, v.get<bool>());
  return v.get<bool>();
}

std::string ConfigReader::string(const std::string &key) const
{
  const json &v = at(key);
  if (!v.is_string()) fail(key, "expected a string, got " + type_name(v));
  record(key, v);
  return v.get<std::string>();
}

std::string ConfigReader::string(const std::string &key, const std::string &fallback) const
{
  if (!has(key)) {
    used_->insert(key);
    record(key, fallback);
    return fallback;
  }
  return string(key);
}

std::vector<double> ConfigReader::numbers(const std::string &key) const
{
  const json &v = at(key);
  if (!v.is_array()) fail(key, "expected an array of numbers, got " + type_name(v));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
      fail(key, "entry " + std::to_string(i) + " is not a finite number");
    out.push_back(v[i].get<double>());
  }
  record(key, out);
  return out;
}

void ConfigReader::check_scales(const std::string &key, const std::vector<double> &v, Order order) const
{
  if (v.empty()) fail(key, "list must not be empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0)) fail(key, "entry " + std::to_string(i) + " must be positive");
    if (i == 0) continue;
    if (order == Order::Increasing && !(v[i] > v[i - 1])) fail(key, "list must be strictly increasing");
    if (order == Order::Decreasing && !(v[i] < v[i - 1])) fail(key, "list must be strictly decreasing");
  }
}

std::vector<double> ConfigReader::scales(const std::string &key, Order order) const
{
  std::vector<double> v = numbers(key);
  check_scales(key, v, order);
  return v;
}

std::vector<double> ConfigReader::scales(const std::string &key, Order order, const std::vector<double> &fallback) const
{
  if (!has(key)) {
    used_->insert(key);
    record(key, fallback);
    return fallback;
  }
  return scales(key, order);
}

Eigen::MatrixXd ConfigReader::to_matrix(const json &v, const std::string &where)
{
  auto bad = [&](const std::string &what) { throw ConfigError("config field '" + where + "': " + what); };
  if (!v.is_array() || v.empty()) bad("expected a non-empty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) bad("rows must be non-empty arrays");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols) bad("row " + std::to_string(i) + " has the wrong length");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!v[i][j].is_number() || !std::isfinite(v[i][j].get<double>()))
        bad("entry (" + std::to_string(i) + ", " + std::to_string(j) + ") is not a finite number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
    }
  }
  return m;
}

Eigen::MatrixXd ConfigReader::matrix(const std::string &key) const
{
  const json &v = at(key);
  Eigen::MatrixXd m = to_matrix(v, path(key));
  record(key, v);
  return m;
}

std::vector<Eigen::MatrixXd> ConfigReader::matrices(const std::string &key) const
{
  const json &v = at(key);
  if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of matrices");
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(to_matrix(v[i], path(key) + "." + std::to_string(i)));
  record(key, v);
  return out;
}

std::vector<ConfigReader> ConfigReader::children(const std::string &key) const
{
  const json &v = at(key);
  if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of objects");
  record(key, json::array());
  std::vector<ConfigReader> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_object()) fail(key, "entry " + std::to_string(i) + " is not an object");
    const std::string ptr = pointer_ + "/" + escape_pointer_token(key) + "/" + std::to_string(i);
    (*resolved_)[json::json_pointer(ptr)] = json::object();
    out.push_back(ConfigReader(&v[i], ptr, resolved_));
  }
  return out;
}

void ConfigReader::finish() const
{
  for (const auto &item : node_->items())
    if (!used_->count(item.key())) fail(item.key(), "unknown field");
}

namespace {

// Wraps a module precondition failure on a preset or explicit object as a config error at that object.
template <typename F>
auto build(const ConfigReader &c, const std::string &what, F &&make)
{
  try {
    return make();
  } catch (const PreconditionError &e) {
    throw ConfigError("config field '" + c.path(what) + "': " + e.what());
  }
}

double c_cover_of(const ConfigReader &c, double fallback)
{
  const double C = c.number("c_cover", fallback);
  if (!(C >= 1)) c.fail("c_cover", "must be at least 1");
  return C;
}

} // namespace

BLDatum datum_from_config(const ConfigReader &c)
{
  BLDatum datum = build(c, "preset", [&] {
    if (c.has("preset")) {
      const std::string p = c.string("preset");
      if (p == "loomis_whitney") return catalog::loomis_whitney();
      if (p == "duplicated_kernel") return catalog::duplicated_kernel();
      if (p == "identity") {
        const long n = c.integer("n", 3);
        if (n < 1 || n > 16) c.fail("n", "must lie in 1..16");
        return catalog::identity_datum(static_cast<int>(n));
      }
      c.fail("preset", "unknown datum preset '" + p + "'");
    }
    std::vector<Eigen::MatrixXd> maps = c.matrices("maps");
    std::vector<double> p = c.numbers("exponents");
    if (p.size() != maps.size()) c.fail("exponents", "need one exponent per map");
    return BLDatum(std::move(maps), std::move(p));
  });
  c.finish();
  return datum;
}

NestedFamily family_from_config(const ConfigReader &c)
{
  const std::string p = c.string("preset");
  NestedFamily F = build(c, "preset", [&] {
    if (p == "linear_chain" || p == "paraboloid_chain") {
      const long n = c.integer("n", 3);
      if (n != 3 && n != 4) c.fail("n", "must be 3 or 4");
      const double C = c_cover_of(c, 4.0);
      return p == "linear_chain" ? catalog::linear_chain(static_cast<int>(n), C)
                                 : catalog::paraboloid_chain(static_cast<int>(n), C);
    }
    if (p == "curved_chain") return catalog::curved_chain(c_cover_of(c, 4.0));
    if (p == "flat_wide" || p == "paraboloid_wide") {
      const double C = c_cover_of(c, 16.0);
      const double radius = c.number("radius", 4.0);
      if (!(radius > 0)) c.fail("radius", "must be positive");
      return p == "flat_wide" ? catalog::flat_wide(C, radius) : catalog::paraboloid_wide(C, radius);
    }
    c.fail("preset", "unknown family preset '" + p + "'");
  });
  c.finish();
  return F;
}

Ensemble ensemble_from_config(const ConfigReader &c)
{
  Ensemble e = build(c, "preset", [&] {
    if (c.has("preset")) {
      const std::string p = c.string("preset");
      if (p == "paraboloid_example") {
        const long n = c.integer("n", 3);
        const long k = c.integer("k", 2);
        if (n < 2 || n > 6) c.fail("n", "must lie in 2..6");
        if (k < 2 || k > n || k > 4) c.fail("k", "must satisfy 2 <= k <= min(n, 4)");
        return catalog::paraboloid_example(static_cast<int>(n), static_cast<int>(k), c_cover_of(c, 1e4));
      }
      if (p == "transverse_planes") return catalog::transverse_planes(c_cover_of(c, 1e4));
      if (p == "coincident_planes") return catalog::coincident_planes(c_cover_of(c, 1e4));
      c.fail("preset", "unknown ensemble preset '" + p + "'");
    }
    Ensemble out;
    for (const ConfigReader &f : c.children("families")) out.families.push_back(family_from_config(f));
    out.exponents = c.numbers("exponents");
    if (out.exponents.size() != out.families.size()) c.fail("exponents", "need one exponent per family");
    for (double q : out.exponents)
      if (!(q > 0 && q <= 2)) c.fail("exponents", "exponents must lie in (0, 2]");
    ensemble_datum(out);
    return out;
  });
  c.finish();
  return e;
}

AlphaSearchOptions alpha_options_from_config(const ConfigReader &c, std::uint64_t seed)
{
  AlphaSearchOptions o;
  o.depth = static_cast<int>(c.integer("depth", o.depth));
  o.random_budget = static_cast<int>(c.integer("random_budget", o.random_budget));
  o.lattice_cap = static_cast<std::size_t>(c.integer("lattice_cap", static_cast<long>(o.lattice_cap)));
  o.greedy_rounds = static_cast<int>(c.integer("greedy_rounds", o.greedy_rounds));
  if (o.depth < 0) c.fail("depth", "must be non-negative");
  if (o.random_budget < 0) c.fail("random_budget", "must be non-negative");
  if (o.lattice_cap < 1) c.fail("lattice_cap", "must be positive");
  if (o.greedy_rounds < 0) c.fail("greedy_rounds", "must be non-negative");
  o.seed = seed;
  c.finish();
  return o;
}

} // namespace rlab
