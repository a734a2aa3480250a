#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mencode::cli {

inline constexpr const char* version = "0.1.0";

/// Process exit codes.
enum Exit : int {
  ok = 0,
  config_error = 2,
  no_interior_mode = 3,
  instance_too_large = 4,
};

struct ExperimentConfig {
  std::string command;
  std::string dataset;
  std::string schema;
  std::string dataset_id;
  std::vector<std::string> methods{"MMLWF", "MMLP", "MMLV", "MDL"};
  int k = 5;
  int repeats = 100;
  std::vector<double> fractions;
  std::vector<std::size_t> sizes;
  /// Empty means "auto".
  std::optional<double> ess;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string out;
  std::string format = "csv";
  std::string dump_model;
  bool table = false;

  /// Only the fields that determine results; --jobs and output paths are
  /// left out so a manifest can be replayed with any of them.
  nlohmann::ordered_json to_json() const;
};

/// Runs one command line (args excludes the program name). Results go to
/// `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mencode::cli
