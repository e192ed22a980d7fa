#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ringopt/app/commands.hpp"

int main(int argc, char** argv) {
  using namespace ringopt::app;

  CLI::App app{"Ring-road traffic simulation and AV controller optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::optional<std::string> controller;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> report_dir;
  bool mutate = false;

  auto* simulate = app.add_subcommand("simulate", "Roll out a config, write trajectory and metrics");
  simulate->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out, "Output directory")->required();
  simulate->add_option("--seed", seed, "Ignored; rollouts are deterministic");

  auto* optimize = app.add_subcommand("optimize", "Optimize controller parameters");
  optimize->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  optimize->add_option("--out", out, "Output directory")->required();
  optimize->add_option("--controller", controller, "Controller kind")
      ->check(CLI::IsMember({"fs", "linear", "idm"}));
  optimize->add_option("--seed", seed, "Seed for multi-start draws");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare adjoint and finite-difference gradients");
  gradcheck->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  gradcheck->add_option("--controller", controller, "Controller kind or 'all'")
      ->check(CLI::IsMember({"fs", "linear", "idm", "all"}));
  gradcheck->add_option("--out", report_dir, "Directory for per-controller CSV reports");
  gradcheck->add_flag("--mutate", mutate, "Flip the sign of one partial (test hook)");

  std::string csv_path;
  auto* plot = app.add_subcommand("plot", "Render a trajectory CSV as an SVG space-time diagram");
  plot->add_option("trajectory", csv_path, "Trajectory CSV")->required();
  plot->add_option("--out", out, "Output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  Streams io{std::cout, std::cerr};
  if (*simulate) return cmd_simulate(config_path, out, io);
  if (*optimize) return cmd_optimize(config_path, controller, out, seed, io);
  if (*gradcheck) {
    GradCheckArgs args;
    args.config_path = config_path;
    args.controller = controller;
    args.out_dir = report_dir;
    args.mutate = mutate;
    return cmd_gradcheck(args, io);
  }
  return cmd_plot(csv_path, out, io);
}
