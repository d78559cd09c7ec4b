#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace jumplab::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 2, kResource = 3, kConfig = 4, kIo = 5, kInternal = 1 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"build", "validate", "simulate", "heatkernel", "forms", "clt"};
  return names;
}

struct RunRequest {
  std::string command;
  nlohmann::json config;             // effective config after flag overrides
  std::filesystem::path base_dir;    // relative paths inside the config resolve here
  std::filesystem::path output_dir;
  bool manifest_only = false;
};

// Validates the config, dispatches, writes artifacts plus config.json and
// manifest.json. Library errors propagate; map them with exit_code_for.
int run(const RunRequest& req);

// Exit code for the exception currently being handled, with a one-line
// diagnostic on stderr.
int exit_code_for_current_exception();

// The effective config minus run-local keys (output_dir, threads); this is
// what gets hashed and written to config.json.
nlohmann::json canonical_config(const nlohmann::json& config);

}  // namespace jumplab::cli
