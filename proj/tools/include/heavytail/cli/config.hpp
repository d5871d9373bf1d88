#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heavytail/error.hpp"
#include "heavytail/models.hpp"

namespace heavytail::cli {

enum class Command { simulate, cluster_index, ldp_scan, stable_check, drift_check, regen_check, report };

std::string_view to_string(Command command);
std::optional<Command> parse_command(std::string_view name);
const std::vector<std::string>& command_names();

// All problems found in a config file, each with its line or field.
class ConfigError : public ParameterError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct SimulateOptions {
  std::size_t n = 10'000;
  std::optional<std::size_t> burn_in;
};

struct ClusterOptions {
  std::optional<std::size_t> horizon;  // default: geometric-residual rule
  std::size_t replicas = 10'000;
  std::size_t directions = 0;          // 0: default grid for the dimension
  std::size_t telescoping_k = 0;       // 0: horizon / 2
  bool closed_form = true;
  bool extremal = true;
};

struct LdpOptions {
  std::size_t n = 2000;
  std::size_t replicas = 100'000;
  std::size_t grid_size = 8;
  double epsilon = 0.1;
  double c_factor = 100.0;
  std::vector<double> theta;           // default e_1
  std::optional<double> target;        // default: closed-form or tail-process b(theta)
  std::optional<double> band;          // pass iff sup_dev <= band
  std::size_t target_replicas = 100'000;
};

struct StableOptions {
  std::size_t n = 1000;
  std::size_t replicas = 2000;
  std::size_t grid_points = 61;
  double x_max = 3.0;
  bool symmetric = false;
  std::size_t directions = 0;
  std::size_t b_replicas = 100'000;
};

struct DriftOptions {
  double p = 1.0;
  std::size_t m = 1;
  std::vector<double> grid{0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  std::size_t replicas_per_state = 4000;
};

struct RegenOptions {
  std::size_t n = 100'000;
  double radius = 2.0;
  bool atomized = false;
  std::size_t spectral_k = 0;  // 0: sqrt(cycles)
  std::size_t batch_size = 0;
};

struct ExperimentConfig {
  std::optional<Command> command;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: not set in the file
  std::string output_dir;
  models::ModelSpec model;
  SimulateOptions simulate;
  ClusterOptions cluster;
  LdpOptions ldp;
  StableOptions stable;
  DriftOptions drift;
  RegenOptions regen;
  // Normalized echo of every key that was read, section -> key -> value.
  std::map<std::string, std::map<std::string, std::string>> echo;
};

// Parses the INI-style experiment format:
//
//   seed = 42
//   [model]
//   type = var1
//   a = 0.5
//   innovation = pareto
//   alpha = 1.5
//   [cluster-index]
//   replicas = 100000
//
// Throws ConfigError listing every problem found.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

}  // namespace heavytail::cli
