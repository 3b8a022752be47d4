#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcising {

inline constexpr const char* kSoftwareVersion = "0.1.0";
/// Environment variable naming the default output directory.
inline constexpr const char* kOutputEnvVar = "RCISING_OUT";

/// Malformed or incomplete experiment configuration (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KindInfo {
  std::string name;
  std::string description;
  std::vector<std::string> required;
  bool monte_carlo = false;
};

const std::vector<KindInfo>& experiment_kinds();
const KindInfo& kind_info(const std::string& name);

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<double> budget_seconds;
};

/// Parsed and validated experiment configuration. `canonical` is the config
/// as sorted JSON with the overrides applied and the output directory removed;
/// the input hash is derived from it and the software version.
struct ExperimentConfig {
  std::string kind;
  std::string canonical;
  std::string toml_text;
  std::string input_hash;
  std::string experiment_id;
  std::filesystem::path output_root;
  double budget_seconds = 600.0;
};

/// Parses TOML text for `kind` (the `kind` key in the file must agree when present).
ExperimentConfig parse_experiment(const std::string& kind, const std::string& toml_text,
                                  const Overrides& overrides = {});

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

struct ResultRecord {
  std::string experiment_id;
  std::string kind;
  std::string observable;
  double value = 0.0;
  double error = 0.0;
  std::optional<int> L;
  std::optional<double> beta;
  std::optional<std::uint64_t> seed;
  std::string input_hash;
};

std::string csv_header();
std::string csv_row(const ResultRecord& record);

struct RunOutcome {
  int exit_code = 0;  ///< 0 ok, 1 verification failure or mid-run failure
  std::filesystem::path directory;
  std::size_t records = 0;
  bool verification_passed = true;
  std::string message;
};

/// Runs the experiment and persists results.csv, manifest.json, summary.json,
/// config.toml and plot.csv (plus plot.svg when requested) under
/// output_root / experiment_id. A mid-run failure leaves the records written
/// so far and a FAILED marker file.
RunOutcome run_experiment(const ExperimentConfig& config);

struct ReplayReport {
  bool identical = false;
  std::size_t compared = 0;
  std::string message;
};

/// Re-executes the experiment stored in `directory` into a scratch directory
/// and compares results.csv byte for byte, naming the first divergent record.
ReplayReport replay_experiment(const std::filesystem::path& directory);

}  // namespace rcising
