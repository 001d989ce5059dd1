#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gvi/experiments.hpp"

namespace gvi {

enum class Subcommand {
  Solve,
  Region,
  Rates,
  Concentrate,
  Compare,
  Schedule,
  Divergence,
  Unbounded,
};

std::string subcommand_name(Subcommand s);

// A parsed-and-validated CLI configuration. Solve/Region fill `problem`; the
// experiment subcommands fill `experiment` plus their extras. `normalized` is
// the fully defaulted echo of the configuration (JSON text, stable key
// order), and `fingerprint` hashes it, so identical effective configurations
// produce identical output artifacts.
struct LoadedConfig {
  Subcommand subcommand = Subcommand::Solve;
  GviProblem problem;
  ExperimentConfig experiment;
  Interval interval{};                 // concentrate / unbounded target set
  std::vector<double> mu_pi_offsets;   // compare sweep, relative to the sample mean
  std::int64_t compare_n = 10;         // compare sample size
  std::string normalized;
  std::string fingerprint;
};

// FNV-1a 64-bit hash of a byte string, and its 16-digit hex form.
std::uint64_t fnv1a64(const std::string& text);
std::string fingerprint_hex(const std::string& text);

// Strict parse + validation of a configuration for the given subcommand.
// Unknown keys anywhere in the document are errors; every problem found is
// collected and reported together in a single ConfigError, never one at a
// time. A seed override replaces seed/seeds before normalization so the
// fingerprint reflects what actually ran.
LoadedConfig parse_config_text(const std::string& text, Subcommand sub,
                               std::optional<std::uint64_t> seed_override);

// parse_config_text on a file's content; IoError when unreadable.
LoadedConfig load_config_file(const std::string& path, Subcommand sub,
                              std::optional<std::uint64_t> seed_override);

// Two-column CSV "theta,value" backing a table loss.
void load_table_csv(const std::string& path, Eigen::ArrayXd* grid,
                    Eigen::ArrayXd* values);

}  // namespace gvi
