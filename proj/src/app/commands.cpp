#include "ringopt/app/commands.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include <fmt/ostream.h>

#include "ringopt/adjoint.hpp"
#include "ringopt/analysis.hpp"
#include "ringopt/app/config.hpp"
#include "ringopt/app/svg_plot.hpp"
#include "ringopt/errors.hpp"

namespace ringopt::app {

namespace fs = std::filesystem;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  body(out);
  out.flush();
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create output directory '{}'", dir));
  }
  return fs::path(dir);
}

// Maps the exceptions every command can raise onto exit codes.
int guarded(Streams io, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    fmt::print(io.err, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const ParseError& e) {
    fmt::print(io.err, "parse error: {}\n", e.what());
    return kConfigError;
  } catch (const CollisionError& e) {
    fmt::print(io.err, "collision: {}\n", e.what());
    return kCollision;
  } catch (const IoError& e) {
    fmt::print(io.err, "i/o error: {}\n", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    fmt::print(io.err, "error: {}\n", e.what());
    return kOptimizerFailure;
  }
}

void require_av(const ExperimentConfig& cfg) {
  if (cfg.ring.av_indices.empty()) {
    throw ConfigError("[control] av_indices is empty; nothing to optimize");
  }
}

ControllerKind kind_from(const std::string& name) {
  try {
    return parse_controller_kind(name);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

MetricsReport metrics_for(const Trajectory& traj) {
  return compute_metrics(traj, traj.config.horizon, ring_equilibrium_speed(traj.config));
}

void print_metrics(std::ostream& out, const MetricsReport& m) {
  fmt::print(out, "avg speed {:.4f} m/s, throughput {:.1f} veh/h, min speed {:.3f} m/s, ",
             m.avg_speed, m.throughput, m.min_speed);
  fmt::print(out, "min headway {:.3f} m, settled {}\n", m.min_headway,
             m.settling_steps ? fmt::format("after {} steps", *m.settling_steps) : "never");
}

void write_outputs(const fs::path& dir, const Trajectory& traj, const MetricsReport& m) {
  write_file(dir / "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, traj); });
  write_file(dir / "metrics.txt", [&](std::ostream& o) { write_metrics(o, m); });
}

}  // namespace

int cmd_simulate(const std::string& config_path, const std::string& out_dir, Streams io) {
  return guarded(io, [&] {
    const ExperimentConfig cfg = load_config(config_path);
    const Trajectory traj = run(cfg.ring, cfg.initial_state());
    const MetricsReport m = metrics_for(traj);
    write_outputs(prepare_dir(out_dir), traj, m);
    print_metrics(io.out, m);
    return kOk;
  });
}

int cmd_optimize(const std::string& config_path, const std::optional<std::string>& controller,
                 const std::string& out_dir, std::optional<std::uint64_t> seed, Streams io) {
  return guarded(io, [&] {
    ExperimentConfig cfg = load_config(config_path);
    require_av(cfg);
    const ControllerKind kind = controller ? kind_from(*controller) : cfg.ring.controller.kind;
    if (kind != cfg.ring.controller.kind) cfg.ring.controller = {kind, default_params(kind)};
    if (seed) cfg.seed = *seed;
    cfg.optimizer.seed = cfg.seed;

    const SimState start = warm_up(cfg.ring, cfg.initial_state());
    const OptimizeResult result = optimize_controller(cfg.ring, start, cfg.loss, kind,
                                                      cfg.ring.controller.params, cfg.optimizer);
    fmt::print(io.out, "{}: {} iterations, {} evaluations, stopped on {}, F = {:.6g}\n",
               to_string(kind), result.iterations, result.function_evals,
               to_string(result.termination), result.f_best);
    const auto names = param_names(kind);
    for (std::size_t j = 0; j < names.size(); ++j) {
      fmt::print(io.out, "  {} = {:.6g}\n", names[j], result.x_best[j]);
    }

    cfg.ring.controller.params = result.x_best;
    const Trajectory traj = run(cfg.ring, cfg.initial_state());
    const MetricsReport m = metrics_for(traj);

    const fs::path dir = prepare_dir(out_dir);
    write_file(dir / "history.csv", [&](std::ostream& o) { write_history_csv(o, result); });
    write_file(dir / "best_params.ini", [&](std::ostream& o) { write_config(o, cfg); });
    write_outputs(dir, traj, m);
    print_metrics(io.out, m);
    return kOk;
  });
}

int cmd_gradcheck(const GradCheckArgs& args, Streams io) {
  return guarded(io, [&] {
    const ExperimentConfig cfg = load_config(args.config_path);
    require_av(cfg);
    std::vector<ControllerKind> kinds;
    if (!args.controller) {
      kinds = {cfg.ring.controller.kind};
    } else if (*args.controller == "all") {
      kinds = {ControllerKind::FollowerStopper, ControllerKind::Linear,
               ControllerKind::IdmController};
    } else {
      kinds = {kind_from(*args.controller)};
    }
    std::optional<fs::path> dir;
    if (args.out_dir) dir = prepare_dir(*args.out_dir);

    AdjointOptions options;
    options.flip_headway_partial_sign = args.mutate;
    bool ok = true;
    for (ControllerKind kind : kinds) {
      RingConfig ring = cfg.ring;
      if (kind != ring.controller.kind) ring.controller = {kind, default_params(kind)};
      const SimState start = warm_up(ring, cfg.initial_state());
      const GradCheckReport r = grad_check(ring, start, cfg.loss, options);

      fmt::print(io.out, "{} (F = {:.9g})\n", to_string(kind), r.objective);
      fmt::print(io.out, "  {:<8} {:>16} {:>16} {:>10}\n", "param", "adjoint", "fd", "rel_err");
      for (std::size_t j = 0; j < r.names.size(); ++j) {
        fmt::print(io.out, "  {:<8} {:>16.9g} {:>16.9g} {:>10.2e}\n", r.names[j],
                   r.adjoint_grad[j], r.fd_grad[j], r.rel_error[j]);
      }
      const bool pass = r.max_rel_error <= args.tolerance;
      fmt::print(io.out, "  max rel error {:.3e} (tol {:.0e}) {}\n", r.max_rel_error,
                 args.tolerance, pass ? "ok" : "FAILED");
      fmt::print(io.out, "  forward {:.4f} s, backward {:.4f} s, ratio {:.2f}\n",
                 r.forward_seconds, r.backward_seconds, r.timing_ratio());
      if (dir) {
        write_file(*dir / fmt::format("gradcheck_{}.csv", to_string(kind)),
                   [&](std::ostream& o) { write_grad_check_csv(o, r); });
      }
      ok = ok && pass;
    }
    return ok ? kOk : kCheckFailed;
  });
}

int cmd_plot(const std::string& trajectory_csv, const std::string& out_svg, Streams io) {
  return guarded(io, [&] {
    std::ifstream in(trajectory_csv);
    if (!in) throw IoError(fmt::format("cannot read '{}'", trajectory_csv));
    const TrajectoryTable table = read_trajectory_csv(in);
    const fs::path target(out_svg);
    if (target.has_parent_path()) prepare_dir(target.parent_path().string());
    write_file(target, [&](std::ostream& o) { write_space_time_svg(o, table); });
    fmt::print(io.out, "wrote {} ({} vehicles, steps {}..{})\n", out_svg, table.vehicles.size(),
               table.t_min, table.t_max);
    return kOk;
  });
}

}  // namespace ringopt::app
