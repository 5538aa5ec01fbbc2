#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pushpull/io.hpp"

namespace pushpull::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kRuntimeError = 2 };

struct ExperimentConfig {
  std::optional<std::uint64_t> instance_seed = 42;
  std::optional<fs::path> instance_file;
  /// Empty means the built-in "canonical4".
  std::optional<fs::path> schedule_file;
  /// Empty means uniform weights derived from the schedule.
  std::optional<fs::path> weights_file;
  double step_c = 2.0;
  double step_exponent = 0.6;
  long rounds = 20000;
  long record_every = 1;
  /// "zeros" or "random" (x uniform in X, lambda random in Q).
  std::string init = "zeros";
  std::uint64_t init_seed = 0;
  double oracle_tol = 1e-8;
  fs::path output_dir = "out";

  /// Throws io::FormatError on values outside their domains or missing files.
  void validate() const;
  io::Json to_json() const;
};

/// Reads a config document; relative paths resolve against the file's
/// directory. Unknown keys are rejected so typos do not pass silently.
ExperimentConfig load_config(const fs::path& path);
ExperimentConfig config_from_json(const io::Json& doc, const fs::path& base_dir);

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<long> rounds;
  std::optional<double> step_c;
  std::optional<double> step_exponent;
  std::optional<long> record_every;
  std::optional<fs::path> out;
  std::optional<double> oracle_tol;

  void apply(ExperimentConfig& cfg) const;
};

/// Directory for cached oracle certificates: $PUSHPULL_CACHE_DIR if set,
/// else the instance file's directory, else the output directory.
fs::path cache_dir(const ExperimentConfig& cfg);

int cmd_generate(std::uint64_t seed, const fs::path& out_dir, std::ostream& out);
int cmd_run(const ExperimentConfig& cfg, std::ostream& out);
int cmd_verify(const ExperimentConfig& cfg, std::ostream& out);

/// Full command line; returns the process exit code. Errors go to `err`.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pushpull::cli
