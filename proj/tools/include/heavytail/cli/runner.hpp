#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "heavytail/cli/config.hpp"
#include "heavytail/cli/output.hpp"

namespace heavytail::cli {

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::map<std::string, std::string>> config;
  std::vector<Artifact> artifacts;
  std::map<std::string, std::string> versions;
  double runtime_seconds = 0.0;
  std::size_t threads = 1;
  // Stage name -> RNG stream id under the master seed.
  std::map<std::string, std::uint64_t> streams;
};

// Executes `command` and writes its CSV tables, summary.json and
// manifest.json to `out_dir`. On any failure the files written so far are
// removed and the exception is rethrown.
RunManifest run(const ExperimentConfig& config, Command command, const std::filesystem::path& out_dir);

// Exit code for an exception escaping run(): 2 for usage errors, 3 for
// numeric-regime errors, 1 otherwise.
int exit_code_for(const std::exception& e) noexcept;

std::string version_string();

}  // namespace heavytail::cli
