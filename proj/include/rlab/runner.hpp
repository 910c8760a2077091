#pragma once

#include "config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rlab {

using CsvCell = std::variant<double, long, std::string>;

struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<CsvCell>> rows;

  void add(std::vector<CsvCell> row);
  std::string to_csv() const; // header row, doubles with 17 significant digits
};

struct RunOutput
{
  json summary;
  Table table;
  std::vector<std::string> failed_expectations;
};

const std::vector<std::string> &experiment_kinds();

// FNV-1a over the bytes.
std::uint64_t fnv1a64(const std::string &bytes);

// Validates the config for `kind`, runs it and evaluates its "expect" block. A seed given here
// overrides the config's. Throws ConfigError on a malformed config.
RunOutput run_experiment(const std::string &kind, const json &config, std::optional<std::uint64_t> seed = std::nullopt);

// summary.json and sweep.csv, each written to a temporary file and renamed into place.
void write_outputs(const RunOutput &out, const std::filesystem::path &dir);

void write_file_atomic(const std::filesystem::path &path, const std::string &contents);

// Process exit code for an exception escaping a run: 2 config, 3 budget, 1 otherwise.
int exit_code_for(const std::exception &e);

} // namespace rlab
