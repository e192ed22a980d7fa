#include "ringopt/adjoint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ringopt/errors.hpp"

namespace ringopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool in_window(const SimState& s, const LossConfig& loss) {
  return s.time_index >= loss.window.t0 && s.time_index <= loss.window.t1;
}

// lambda -= dl/ds for one state.
void subtract_loss_gradient(const StateGradient& g, int n, std::vector<double>& lambda) {
  for (int i = 0; i < n; ++i) {
    lambda[i] -= g.positions[i];
    lambda[n + i] -= g.speeds[i];
    lambda[2 * n + i] -= g.avg_speeds[i];
  }
}

}  // namespace

GradientResult gradient(const RingConfig& config, const SimState& initial,
                        const LossConfig& loss, const AdjointOptions& options) {
  loss.validate();
  GradientResult result;

  // Forward pass: keep every state and action.
  const auto forward_start = Clock::now();
  result.trajectory = run(config, initial);
  result.objective = total_objective(result.trajectory, loss);
  result.forward_seconds = seconds_since(forward_start);

  const auto backward_start = Clock::now();
  const Trajectory& traj = result.trajectory;
  const int n = config.n_vehicles;
  const int n_params = static_cast<int>(config.controller.params.size());
  const double dt = config.dt;
  const double beta = config.ema_beta;

  AdjointState adj;
  adj.lambda.assign(3 * static_cast<std::size_t>(n), 0.0);
  adj.mu.assign(n, 0.0);
  adj.grad_accum.assign(n_params, 0.0);
  std::vector<double> next_lambda(adj.lambda.size());
  StateGradient loss_grad;
  ActionVector scratch;
  ActionPartials action_partials;

  const std::size_t last = traj.states.size() - 1;
  if (in_window(traj.states[last], loss)) {
    loss_partials(traj.states[last], config, loss, loss_grad);
    subtract_loss_gradient(loss_grad, n, adj.lambda);
  }

  for (std::size_t k = traj.actions.size(); k-- > 0;) {
    const SimState& state = traj.states[k];
    compute_actions(state, config, scratch, &action_partials);
    const StepPartials step_d = step_partials(state, traj.actions[k], config);
    if (options.flip_headway_partial_sign) {
      for (auto& p : action_partials.state) p.d_accel_d_headway = -p.d_accel_d_headway;
    }

    const double* lx = adj.lambda.data();
    const double* lv = lx + n;
    const double* lm = lv + n;

    for (int i = 0; i < n; ++i) {
      adj.mu[i] = (lv[i] + beta * lm[i]) * step_d.dspeed_daccel[i];
    }
    if (n_params > 0) {
      for (int i = 0; i < n; ++i) {
        if (!config.controlled(i, state.time_index) || adj.mu[i] == 0.0) continue;
        const auto row = action_partials.param_row(i);
        for (int j = 0; j < n_params; ++j) adj.grad_accum[j] -= adj.mu[i] * row[j];
      }
    }

    for (int i = 0; i < n; ++i) {
      const int behind = (i + n - 1) % n;
      const AccelPartials& own = action_partials.state[i];
      const AccelPartials& follower = action_partials.state[behind];
      const double mu_own = adj.mu[i];
      const double mu_follower = adj.mu[behind];
      // x_i enters its own headway with -1 and the follower's with +1.
      next_lambda[i] = lx[i] - mu_own * own.d_accel_d_headway +
                       mu_follower * follower.d_accel_d_headway;
      next_lambda[n + i] = lx[i] * dt + (lv[i] + beta * lm[i]) * step_d.dspeed_dspeed[i] +
                           mu_own * own.d_accel_d_ego_speed +
                           mu_follower * follower.d_accel_d_lead_speed;
      next_lambda[2 * n + i] = (1.0 - beta) * lm[i];
    }
    if (in_window(state, loss)) {
      loss_partials(state, config, loss, loss_grad);
      subtract_loss_gradient(loss_grad, n, next_lambda);
    }
    adj.lambda.swap(next_lambda);
  }

  result.gradient = std::move(adj.grad_accum);
  result.backward_seconds = seconds_since(backward_start);
  return result;
}

double evaluate_objective(const RingConfig& config, const SimState& initial,
                          const LossConfig& loss) {
  return total_objective(run(config, initial), loss);
}

std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + step;
    const double f_plus = f(probe);
    probe[j] = x[j] - step;
    const double f_minus = f(probe);
    probe[j] = x[j];
    grad[j] = (f_plus - f_minus) / (2.0 * step);
  }
  return grad;
}

std::vector<double> fd_gradient(const RingConfig& config, const SimState& initial,
                                const LossConfig& loss, double h) {
  const auto& p = config.controller.params;
  const auto names = param_names(config.controller.kind);

  auto probe = [&](std::size_t j, double sign) {
    RingConfig shifted = config;
    shifted.controller.params[j] += sign * h * std::max(1.0, std::abs(p[j]));
    try {
      return evaluate_objective(shifted, initial, loss);
    } catch (const CollisionError& e) {
      throw CollisionError(fmt::format("finite-difference probe {}{}: {}",
                                       sign > 0 ? '+' : '-', names.at(j), e.what()),
                           e.step(), e.vehicle());
    }
  };

  std::vector<std::future<std::pair<double, double>>> jobs;
  jobs.reserve(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    jobs.push_back(std::async(std::launch::async, [&, j] {
      return std::make_pair(probe(j, +1.0), probe(j, -1.0));
    }));
  }
  std::vector<double> grad(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const auto [f_plus, f_minus] = jobs[j].get();
    grad[j] = (f_plus - f_minus) / (2.0 * h * std::max(1.0, std::abs(p[j])));
  }
  return grad;
}

GradCheckReport grad_check(const RingConfig& config, const SimState& initial,
                           const LossConfig& loss, const AdjointOptions& options,
                           double h) {
  GradCheckReport report;
  const GradientResult adjoint = gradient(config, initial, loss, options);
  report.names = param_names(config.controller.kind);
  report.adjoint_grad = adjoint.gradient;
  report.fd_grad = fd_gradient(config, initial, loss, h);
  report.objective = adjoint.objective;
  report.forward_seconds = adjoint.forward_seconds;
  report.backward_seconds = adjoint.backward_seconds;
  report.rel_error.resize(report.fd_grad.size());
  for (std::size_t j = 0; j < report.fd_grad.size(); ++j) {
    const double a = report.adjoint_grad[j];
    const double f = report.fd_grad[j];
    const double scale = std::max(std::abs(a), std::abs(f));
    report.rel_error[j] = scale > 0.0 ? std::abs(a - f) / scale : 0.0;
    report.max_rel_error = std::max(report.max_rel_error, report.rel_error[j]);
  }
  return report;
}

void write_grad_check_csv(std::ostream& out, const GradCheckReport& report) {
  out << "component,adjoint,fd,rel_error\n";
  for (std::size_t j = 0; j < report.adjoint_grad.size(); ++j) {
    fmt::print(out, "{},{:.12g},{:.12g},{:.6g}\n", report.names.at(j),
               report.adjoint_grad[j], report.fd_grad[j], report.rel_error[j]);
  }
}

}  // namespace ringopt
