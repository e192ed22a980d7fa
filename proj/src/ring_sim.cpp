#include "ringopt/ring_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ringopt/errors.hpp"

namespace ringopt {

namespace {

double wrap(double x, double length) {
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  // fmod of a tiny negative number plus length can round to length itself
  return r >= length ? 0.0 : r;
}

CarFollowingInput observe(const SimState& state, const std::vector<double>& gaps,
                          int i) {
  const int lead = (i + 1) % state.size();
  return {state.speeds[i], gaps[i], state.speeds[lead]};
}

}  // namespace

void RingConfig::validate() const {
  if (n_vehicles < 2) throw DomainError("need at least two vehicles");
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (!(horizon.t0 < horizon.t1)) throw DomainError("horizon needs t0 < t1");
  if (!(vehicle_length >= 0.0)) throw DomainError("vehicle length must be non-negative");
  if (!(track_length > n_vehicles * vehicle_length)) {
    throw DomainError("track too short for the vehicles");
  }
  if (!(ema_beta > 0.0 && ema_beta <= 1.0)) throw DomainError("ema_beta must be in (0, 1]");
  human_params.validate();
  for (int i : av_indices) {
    if (i < 0 || i >= n_vehicles) throw DomainError("AV index out of range");
  }
  if (static_cast<int>(controller.params.size()) != param_count(controller.kind)) {
    throw DomainError("controller parameter vector has the wrong length");
  }
  if (perturbation) {
    if (perturbation->duration_steps < 0) throw DomainError("negative perturbation duration");
    if (perturbation->vehicle_id < 0 || perturbation->vehicle_id >= n_vehicles) {
      throw DomainError("perturbed vehicle out of range");
    }
  }
}

bool RingConfig::is_av(int vehicle) const {
  return std::find(av_indices.begin(), av_indices.end(), vehicle) != av_indices.end();
}

std::pair<RingConfig, SimState> init_equilibrium(int n, double speed,
                                                 const IdmParams& params,
                                                 double vehicle_length) {
  if (!(speed > 0.0)) throw DomainError("equilibrium speed must be positive");
  const double spacing = equilibrium_headway(speed, params) + vehicle_length;

  RingConfig config;
  config.n_vehicles = n;
  config.track_length = n * spacing;
  config.vehicle_length = vehicle_length;
  config.human_params = params;
  config.horizon = {0, 4800};

  SimState state;
  state.positions.resize(n);
  for (int i = 0; i < n; ++i) state.positions[i] = i * spacing;
  state.speeds.assign(n, speed);
  state.avg_speeds.assign(n, speed);
  config.validate();
  return {config, state};
}

std::vector<double> headways(const SimState& state, const RingConfig& config) {
  const int n = state.size();
  const double length = config.track_length;
  std::vector<double> gaps(n);
  double circumference = 0.0;
  for (int i = 0; i < n; ++i) {
    const int lead = (i + 1) % n;
    const double spacing = wrap(state.positions[lead] - state.positions[i], length);
    circumference += spacing;
    gaps[i] = spacing - config.vehicle_length;
    if (!(gaps[i] > 0.0)) {
      throw CollisionError(fmt::format("collision at step {}: vehicle {} headway {:.6g} m",
                                       state.time_index, i, gaps[i]),
                           state.time_index, i);
    }
  }
  // Spacings sum to L unless some vehicle jumped past its leader.
  if (circumference > length * (1.0 + 1e-9)) {
    throw CollisionError(fmt::format("collision at step {}: vehicle order changed",
                                     state.time_index),
                         state.time_index, -1);
  }
  return gaps;
}

void compute_actions(const SimState& state, const RingConfig& config,
                     ActionVector& actions, ActionPartials* partials) {
  const int n = state.size();
  const auto gaps = headways(state, config);
  const long t = state.time_index;
  const int n_params = static_cast<int>(config.controller.params.size());

  actions.accels.resize(n);
  if (partials) {
    partials->n_params = n_params;
    partials->state.assign(n, AccelPartials{});
    partials->params.assign(static_cast<std::size_t>(n) * n_params, 0.0);
  }

  for (int i = 0; i < n; ++i) {
    if (config.perturbation && config.perturbation->active(i, t)) {
      actions.accels[i] = config.perturbation->override_accel;
      continue;
    }
    const CarFollowingInput in = observe(state, gaps, i);
    if (config.controlled(i, t)) {
      const ControllerOutput out = evaluate_controller(config.controller, in);
      actions.accels[i] = out.accel;
      if (partials) {
        partials->state[i] = out.d_accel_d_state;
        std::copy(out.d_accel_d_params.begin(), out.d_accel_d_params.end(),
                  partials->params.begin() + static_cast<std::ptrdiff_t>(i) * n_params);
      }
    } else {
      actions.accels[i] = idm_accel(in, config.human_params);
      if (partials) partials->state[i] = idm_partials(in, config.human_params);
    }
  }
}

std::pair<ActionVector, ActionPartials> compute_actions(const SimState& state,
                                                        const RingConfig& config) {
  std::pair<ActionVector, ActionPartials> out;
  compute_actions(state, config, out.first, &out.second);
  return out;
}

SimState step(const SimState& state, const ActionVector& actions,
              const RingConfig& config) {
  const int n = state.size();
  const double dt = config.dt;
  const double beta = config.ema_beta;
  SimState next;
  next.positions.resize(n);
  next.speeds.resize(n);
  next.avg_speeds.resize(n);
  next.time_index = state.time_index + 1;
  for (int i = 0; i < n; ++i) {
    next.positions[i] = wrap(state.positions[i] + dt * state.speeds[i], config.track_length);
    next.speeds[i] = std::max(state.speeds[i] + dt * actions.accels[i], 0.0);
    next.avg_speeds[i] = (1.0 - beta) * state.avg_speeds[i] + beta * next.speeds[i];
  }
  headways(next, config);
  return next;
}

StepPartials step_partials(const SimState& state, const ActionVector& actions,
                           const RingConfig& config) {
  const int n = state.size();
  StepPartials out;
  out.dspeed_dspeed.resize(n);
  out.dspeed_daccel.resize(n);
  for (int i = 0; i < n; ++i) {
    const bool floored = state.speeds[i] + config.dt * actions.accels[i] < 0.0;
    out.dspeed_dspeed[i] = floored ? 0.0 : 1.0;
    out.dspeed_daccel[i] = floored ? 0.0 : config.dt;
  }
  return out;
}

Trajectory run(const RingConfig& config, const SimState& initial) {
  config.validate();
  if (initial.size() != config.n_vehicles) {
    throw DomainError("initial state does not match n_vehicles");
  }
  if (initial.time_index > config.horizon.t1) {
    throw DomainError("initial state is past the end of the horizon");
  }
  headways(initial, config);

  Trajectory traj;
  traj.config = config;
  const auto steps = static_cast<std::size_t>(config.horizon.t1 - initial.time_index);
  traj.states.reserve(steps + 1);
  traj.actions.reserve(steps);
  traj.states.push_back(initial);
  for (std::size_t k = 0; k < steps; ++k) {
    ActionVector actions;
    compute_actions(traj.states.back(), config, actions, nullptr);
    traj.states.push_back(step(traj.states.back(), actions, config));
    traj.actions.push_back(std::move(actions));
  }
  return traj;
}

SimState warm_up(const RingConfig& config, const SimState& initial) {
  config.validate();
  SimState state = initial;
  ActionVector actions;
  while (state.time_index < config.horizon.t0) {
    compute_actions(state, config, actions, nullptr);
    state = step(state, actions, config);
  }
  return state;
}

std::pair<RingConfig, SimState> standard_experiment(ControllerKind kind) {
  auto [config, state] = init_equilibrium(40, 15.0, IdmParams{}, 5.0);
  config.perturbation = PerturbationSpec{};
  config.av_indices = {0};
  config.controller = {kind, default_params(kind)};
  config.horizon = {1400, 1400 + 4800};
  return {config, state};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const RingConfig& config = traj.config;
  out << "t,vehicle_id,position_m,speed_mps,accel_mps2,headway_m,is_av\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const SimState& s = traj.states[k];
    const auto gaps = headways(s, config);
    for (int i = 0; i < s.size(); ++i) {
      std::string accel;
      if (k < traj.actions.size()) accel = fmt::format("{:.9g}", traj.actions[k].accels[i]);
      fmt::print(out, "{},{},{:.9g},{:.9g},{},{:.9g},{}\n", s.time_index, i,
                 s.positions[i], s.speeds[i], accel, gaps[i],
                 config.controlled(i, s.time_index) ? 1 : 0);
    }
  }
}

}  // namespace ringopt
