#include "rlab/errors.hpp"
#include "rlab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitAssertion = 4;

std::string kinds_list()
{
  std::string s;
  for (const auto &k : rlab::experiment_kinds()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Run one laboratory experiment and write summary.json and sweep.csv."};
  std::string kind, config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("kind", kind, "experiment kind: " + kinds_list())->required();
  app.add_option("--config", config_path, "UTF-8 JSON config")->required();
  CLI::Option *seed_opt = app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--out", out_dir, "output directory (default: the config's output_path, else lab-output/<kind>)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const rlab::json config = rlab::load_config(config_path);
    if (out_dir.empty()) {
      if (config.contains("output_path")) {
        if (!config["output_path"].is_string()) throw rlab::ConfigError("config field 'output_path': expected a string");
        out_dir = config["output_path"].get<std::string>();
      } else {
        out_dir = "lab-output/" + kind;
      }
    }
    std::optional<std::uint64_t> override_seed;
    if (*seed_opt) override_seed = seed;
    const rlab::RunOutput out = rlab::run_experiment(kind, config, override_seed);
    rlab::write_outputs(out, out_dir);
    std::cout << "wrote " << out_dir << "/summary.json and " << out_dir << "/sweep.csv\n";
    if (!out.failed_expectations.empty()) {
      for (const auto &f : out.failed_expectations) std::cerr << "lab: expectation failed: " << f << "\n";
      return kExitAssertion;
    }
    return 0;
  } catch (const std::exception &e) {
    std::cerr << "lab: " << e.what() << "\n";
    return rlab::exit_code_for(e);
  }
}
