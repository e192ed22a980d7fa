#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace ringopt::app {

// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,  // gradcheck tolerance exceeded
  kConfigError = 2,  // bad config or malformed input file
  kCollision = 3,
  kIoError = 4,
  kOptimizerFailure = 5,
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// Writes <out_dir>/trajectory.csv and <out_dir>/metrics.txt.
int cmd_simulate(const std::string& config_path, const std::string& out_dir, Streams io);

/// `controller` overrides the config's controller kind ("fs", "linear", "idm").
/// Writes history.csv, best_params.ini, trajectory.csv and metrics.txt.
int cmd_optimize(const std::string& config_path, const std::optional<std::string>& controller,
                 const std::string& out_dir, std::optional<std::uint64_t> seed, Streams io);

struct GradCheckArgs {
  std::string config_path;
  std::optional<std::string> controller;  // a kind, or "all"
  std::optional<std::string> out_dir;     // per-controller CSV reports
  bool mutate = false;                    // flips one partial; the check must fail
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradCheckArgs& args, Streams io);

int cmd_plot(const std::string& trajectory_csv, const std::string& out_svg, Streams io);

}  // namespace ringopt::app
