#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "heavytail/cli/config.hpp"
#include "heavytail/cli/runner.hpp"
#include "heavytail/parallel.hpp"

namespace {

constexpr int kUsage = 2;

std::size_t threads_from_env() {
  const char* env = std::getenv("HEAVYTAIL_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    const long v = std::stol(env);
    if (v >= 1) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  std::cerr << "heavytail: ignoring invalid HEAVYTAIL_THREADS='" << env << "'\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace heavytail;
  CLI::App app{"Monte Carlo laboratory for the cluster index of heavy-tailed Markov chains", "heavytail"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t threads = 0;
  app.add_option("command", command, "simulate | cluster-index | ldp-scan | stable-check | drift-check | regen-check | report")
      ->required();
  app.add_option("--config", config_path, "experiment file")->required();
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory (default: config output_dir or ./heavytail-out)");
  app.add_option("--threads", threads, "worker threads (fallback: HEAVYTAIL_THREADS)")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", cli::version_string());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  const auto cmd = cli::parse_command(command);
  if (!cmd) {
    std::cerr << "heavytail: unknown command '" << command << "'\n";
    return kUsage;
  }
  try {
    cli::ExperimentConfig cfg = cli::load_config(config_path);
    if (cfg.command && *cfg.command != *cmd) {
      std::cerr << "heavytail: config declares command '" << cli::to_string(*cfg.command) << "' but '" << command
                << "' was requested\n";
      return kUsage;
    }
    if (seed) cfg.seed = *seed;
    std::size_t workers = threads != 0 ? threads : threads_from_env();
    if (workers == 0) workers = cfg.threads != 0 ? cfg.threads : 1;
    set_worker_count(workers);
    const std::string dir = !out_dir.empty() ? out_dir : (!cfg.output_dir.empty() ? cfg.output_dir : "heavytail-out");
    const auto manifest = cli::run(cfg, *cmd, dir);
    std::cout << "heavytail " << command << ": wrote " << manifest.artifacts.size() + 1 << " files to " << dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "heavytail: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
}
