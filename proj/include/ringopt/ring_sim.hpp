#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "ringopt/controllers.hpp"
#include "ringopt/vehicle_models.hpp"

namespace ringopt {

// Vehicle i follows vehicle (i + 1) mod n on a single-lane ring.
struct SimState {
  std::vector<double> positions;   // m, in [0, L)
  std::vector<double> speeds;      // m/s
  std::vector<double> avg_speeds;  // m/s, exponential moving average of speed
  long time_index = 0;

  int size() const { return static_cast<int>(speeds.size()); }
};

struct ActionVector {
  std::vector<double> accels;  // m/s^2
};

// One vehicle's action is replaced by a constant for a window of steps.
struct PerturbationSpec {
  int vehicle_id = 0;
  long start_step = 160;
  long duration_steps = 40;
  double override_accel = -3.0;

  bool active(int vehicle, long t) const {
    return vehicle == vehicle_id && t >= start_step && t < start_step + duration_steps;
  }
};

// Time indices of the objective window. Controllers are active from t0 on.
struct Horizon {
  long t0 = 0;
  long t1 = 4800;

  long steps() const { return t1 - t0; }
};

struct RingConfig {
  int n_vehicles = 40;
  double track_length = 0.0;  // m
  double vehicle_length = 5.0;
  double dt = 0.25;
  IdmParams human_params;
  std::vector<int> av_indices;
  ControllerSpec controller{ControllerKind::FollowerStopper, default_params(ControllerKind::FollowerStopper)};
  double ema_beta = 0.01;
  std::optional<PerturbationSpec> perturbation;
  Horizon horizon;

  // Throws DomainError describing the first violated invariant.
  void validate() const;
  bool is_av(int vehicle) const;
  // True when `vehicle` is driven by the controller at step t.
  bool controlled(int vehicle, long t) const { return t >= horizon.t0 && is_av(vehicle); }
};

// Full rollout. actions[k] is the action taken in states[k].
struct Trajectory {
  std::vector<SimState> states;
  std::vector<ActionVector> actions;
  RingConfig config;
};

// Sparse blocks of the action map a_t = f(p, s_t). Vehicle i's action depends
// only on (x_i, v_i, x_{i+1}, v_{i+1}) through (ego_speed, headway, lead_speed).
struct ActionPartials {
  std::vector<AccelPartials> state;  // one per vehicle; zero on overridden rows
  std::vector<double> params;        // n x |p| row-major; zero off controlled rows
  int n_params = 0;

  std::span<const double> param_row(int vehicle) const {
    return {params.data() + static_cast<std::size_t>(vehicle) * n_params,
            static_cast<std::size_t>(n_params)};
  }
};

// Diagonal blocks of the forward-Euler update u. Everything not stored here is
// a constant: dx'/dx = 1, dx'/dv = dt, dm'/dm = 1 - beta, dm'/dv = beta dv'/dv,
// dm'/da = beta dv'/da.
struct StepPartials {
  std::vector<double> dspeed_dspeed;  // 1, or 0 where the rest floor binds
  std::vector<double> dspeed_daccel;  // dt, or 0 where the rest floor binds
};

/// Equally spaced vehicles at the equilibrium of `speed`. The returned config
/// has no AVs, no perturbation and horizon (0, 4800).
std::pair<RingConfig, SimState> init_equilibrium(int n, double speed,
                                                 const IdmParams& params,
                                                 double vehicle_length);

/// Bumper-to-bumper gaps; throws CollisionError if any is <= 0 or a vehicle
/// has passed its leader.
std::vector<double> headways(const SimState& state, const RingConfig& config);

void compute_actions(const SimState& state, const RingConfig& config,
                     ActionVector& actions, ActionPartials* partials);
std::pair<ActionVector, ActionPartials> compute_actions(const SimState& state,
                                                        const RingConfig& config);

/// One forward-Euler step. Speeds are floored at zero.
SimState step(const SimState& state, const ActionVector& actions,
              const RingConfig& config);

StepPartials step_partials(const SimState& state, const ActionVector& actions,
                           const RingConfig& config);

/// Rolls out from `initial` (at any index <= horizon.t1) to horizon.t1,
/// storing every state and action.
Trajectory run(const RingConfig& config, const SimState& initial);

/// Advances `initial` to horizon.t0 without storing anything.
SimState warm_up(const RingConfig& config, const SimState& initial);

/// The standard experiment: 40 human vehicles at 15 m/s equilibrium, a
/// -3 m/s^2 kick on vehicle 0 for 10 s at t = 40 s, control of vehicle 0
/// from step 1400 over a 20 minute horizon.
std::pair<RingConfig, SimState> standard_experiment(ControllerKind kind);

/// CSV with header t,vehicle_id,position_m,speed_mps,accel_mps2,headway_m,is_av.
/// The terminal state has no action; its accel field is empty.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace ringopt
