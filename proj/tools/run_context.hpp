#pragma once

// Config plumbing shared by the subcommands: option registration that can
// be echoed as JSON, config-file application with flag-level overrides,
// output bookkeeping and the run manifest.

#include <CLI11.hpp>
#include <json.hpp>

#include "gallop/connections.hpp"
#include "gallop/cycles.hpp"
#include "gallop/integrator.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gallop::cli {

using Json = nlohmann::ordered_json;

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kSolverFailure = 3;
inline constexpr int kPartialFailure = 4;

/// Thrown for configuration problems detected after parsing.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class OptionSet {
 public:
  explicit OptionSet(CLI::App* app) : app_(app) {}

  void add(const std::string& name, double& ref, const std::string& help);
  void add(const std::string& name, int& ref, const std::string& help);
  void add(const std::string& name, std::string& ref, const std::string& help);
  void add(const std::string& name, std::vector<double>& ref, const std::string& help);
  void flag(const std::string& name, bool& ref, const std::string& help);

  /// Fills options not given on the command line from a JSON object. Keys
  /// must name options of this subcommand.
  void apply(const Json& config);

  /// Resolved option values.
  Json echo() const;

  bool given(const std::string& name) const;
  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::string> names_;
  std::vector<std::function<Json()>> getters_;
};

/// One invocation: resolved config, output directory and written files.
class Run {
 public:
  Run(std::string command, Json config, std::string out_dir, int workers);

  const std::string& out_dir() const { return out_dir_; }
  int workers() const { return workers_; }
  /// Path for a file in the output directory.
  std::string path(const std::string& name) const;
  /// '#'-header line identifying the run (no timestamps).
  std::string header() const;
  /// Registers an output file and its checksum.
  void record(const std::string& file);
  /// Solver tolerances and budgets used by the run, echoed in the manifest.
  void set_numerics(Json numerics) { numerics_ = std::move(numerics); }
  void write_manifest(double wall_seconds, int exit_code) const;

 private:
  std::string command_;
  Json config_;
  std::string out_dir_;
  int workers_;
  std::string config_hash_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  Json numerics_ = Json::object();
};

Json to_json(const IntegratorConfig& c);
Json to_json(const ShootingConfig& c);
Json to_json(const PortraitOptions& o);
Json to_json(const ContinuationConfig& c);

/// Reads a config file: either an options object, or a run manifest whose
/// "config" member is used. A "command" key must match `command`.
Json load_config(const std::string& path, const std::string& command);

}  // namespace gallop::cli
