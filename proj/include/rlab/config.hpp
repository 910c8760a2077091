#pragma once

#include "brascamp_lieb.hpp"
#include "nested_family.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rlab {

using json = nlohmann::json;

// Parses UTF-8 JSON text; syntax errors become ConfigError("<source>:line:col: ...").
json parse_config(const std::string &text, const std::string &source = "config");
json load_config(const std::string &path);

enum class Order { Any, Increasing, Decreasing };

// Typed access to one JSON object. Every value read, defaults included, is copied into a shared
// `resolved` document so a run can report the parameters it actually used. finish() rejects keys
// that were never read.
class ConfigReader
{
public:
  explicit ConfigReader(const json &root);

  bool has(const std::string &key) const;
  ConfigReader child(const std::string &key) const;
  // As child(), but an absent key reads as an empty object so its defaults still get recorded.
  ConfigReader child_or_empty(const std::string &key) const;

  double number(const std::string &key) const;
  double number(const std::string &key, double fallback) const;
  long integer(const std::string &key) const;
  long integer(const std::string &key, long fallback) const;
  std::uint64_t unsigned_integer(const std::string &key) const;
  bool boolean(const std::string &key, bool fallback) const;
  std::string string(const std::string &key) const;
  std::string string(const std::string &key, const std::string &fallback) const;
  // Non-empty, all positive, strictly ordered as requested.
  std::vector<double> scales(const std::string &key, Order order) const;
  std::vector<double> scales(const std::string &key, Order order, const std::vector<double> &fallback) const;
  std::vector<double> numbers(const std::string &key) const;
  Eigen::MatrixXd matrix(const std::string &key) const;
  std::vector<Eigen::MatrixXd> matrices(const std::string &key) const;
  // Readers for an array of objects.
  std::vector<ConfigReader> children(const std::string &key) const;

  // Marks a key as handled without reading it through the reader.
  void skip(const std::string &key) const;
  void finish() const;

  std::string path(const std::string &key) const;
  [[noreturn]] void fail(const std::string &key, const std::string &what) const;
  const json &resolved() const { return *resolved_; }

private:
  ConfigReader(const json *node, std::string pointer, std::shared_ptr<json> resolved);
  const json &at(const std::string &key) const;
  void record(const std::string &key, const json &value) const;
  void check_scales(const std::string &key, const std::vector<double> &v, Order order) const;
  static Eigen::MatrixXd to_matrix(const json &v, const std::string &where);

  const json *node_;
  std::string pointer_; // JSON pointer of node_ within the root
  std::shared_ptr<json> resolved_;
  std::shared_ptr<std::set<std::string>> used_;
};

// {"preset": "loomis_whitney" | "duplicated_kernel" | "identity", "n": ...} or {"maps": [...], "exponents": [...]}.
BLDatum datum_from_config(const ConfigReader &c);
// {"preset": "linear_chain" | "paraboloid_chain" | "curved_chain" | "flat_wide" | "paraboloid_wide", ...}.
NestedFamily family_from_config(const ConfigReader &c);
// {"preset": "paraboloid_example" | "transverse_planes" | "coincident_planes", ...} or
// {"families": [family, ...], "exponents": [...]}.
Ensemble ensemble_from_config(const ConfigReader &c);
AlphaSearchOptions alpha_options_from_config(const ConfigReader &c, std::uint64_t seed);

} // namespace rlab
