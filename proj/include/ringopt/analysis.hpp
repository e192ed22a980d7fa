#pragma once

#include <iosfwd>
#include <optional>

#include "ringopt/controllers.hpp"
#include "ringopt/ring_sim.hpp"

namespace ringopt {

struct MetricsReport {
  double avg_speed = 0.0;    // m/s over the window
  double throughput = 0.0;   // veh/hr
  std::optional<long> settling_steps;
  double min_speed = 0.0;    // m/s
  double min_headway = 0.0;  // m
  int n_vehicles = 0;
  double track_length = 0.0;
};

/// Mean of every vehicle speed over the states with window.t0 <= t <= window.t1.
/// Throws std::invalid_argument when no state falls in the window.
double average_speed(const Trajectory& traj, const Horizon& window);

/// Flow on the ring: (n / L) * average speed * 3600.
double throughput(const Trajectory& traj, const Horizon& window);

/// Steps after control activation (horizon.t0) from which every speed stays
/// within tol * target of target until the end of the trajectory; nullopt if
/// the last state is still outside the band.
std::optional<long> settling_time(const Trajectory& traj, double target_speed, double tol);

MetricsReport compute_metrics(const Trajectory& traj, const Horizon& window,
                              double target_speed, double settle_tol = 0.05);

// Equilibrium speed of the ring's uniform spacing under the human model.
double ring_equilibrium_speed(const RingConfig& config);

// key = value lines; settling_steps is "none" when unsettled.
void write_metrics(std::ostream& out, const MetricsReport& m);
void write_metrics_csv(std::ostream& out, const MetricsReport& m);

// Open-road platoon driven by a sinusoidal leader.
struct PlatoonProbe {
  double v_eq = 15.0;      // m/s
  int followers = 10;
  double amplitude = 1.0;  // m/s
  double period = 60.0;    // s
  double phase = 0.0;      // s, time shift of the forcing
  int periods = 16;        // simulated
  int measured_periods = 4;
  double dt = 0.25;
  double vehicle_length = 5.0;
  // When set, the last follower uses this controller instead of IDM.
  std::optional<ControllerSpec> last_follower;
};

/// Peak-to-peak speed of the last follower over peak-to-peak speed of the
/// leader, measured over the final periods. > 1 means oscillations grow.
/// Throws CollisionError if the platoon collides.
double amplification_ratio(const IdmParams& params, const PlatoonProbe& probe);

}  // namespace ringopt
