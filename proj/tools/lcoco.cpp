// Command-line driver: runs experiment configs and writes problem sequences.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lcoco/experiment.hpp"

namespace {

std::optional<lcoco::ExperimentConfig> load_config(const std::string& path) {
  try {
    const lcoco::Json doc = lcoco::Json::parse(lcoco::read_file(path));
    return lcoco::parse_config(doc, std::filesystem::path(path).parent_path());
  } catch (const lcoco::Json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local-information online convex optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;

  auto* run = app.add_subcommand("run", "Run every sweep point and replication of a config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_option("--seed", seed, "Base seed (overrides seed)");
  run->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  std::string sequence_out;
  auto* gen = app.add_subcommand("generate", "Write the first run's problem sequence as JSON");
  gen->add_option("--config", config_path, "Experiment config (JSON)")->required();
  gen->add_option("--out", sequence_out, "Sequence file to write")->required();
  gen->add_option("--seed", seed, "Base seed (overrides seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lcoco::kExitConfig;
  }

  auto config = load_config(config_path);
  if (!config) return lcoco::kExitConfig;
  if (seed) config->spec.seed = *seed;
  if (!out_dir.empty()) config->out_dir = out_dir;
  if (jobs) config->jobs = *jobs;

  if (*run) return lcoco::run_experiment(*config);

  try {
    const auto plans = lcoco::plan_runs(*config);
    const auto seq = lcoco::build_sequence(*config, plans.front());
    lcoco::write_file(sequence_out, lcoco::to_json(seq).dump(2) + "\n");
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lcoco::kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return lcoco::kExitConfig;
  }
  return lcoco::kExitOk;
}
