#include "ringopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ringopt/errors.hpp"

namespace ringopt {

namespace {

bool in_window(const SimState& s, const Horizon& w) {
  return s.time_index >= w.t0 && s.time_index <= w.t1;
}

std::string settling_text(const MetricsReport& m) {
  return m.settling_steps ? std::to_string(*m.settling_steps) : "none";
}

}  // namespace

double average_speed(const Trajectory& traj, const Horizon& window) {
  double total = 0.0;
  long count = 0;
  for (const SimState& s : traj.states) {
    if (!in_window(s, window)) continue;
    for (double v : s.speeds) total += v;
    count += s.size();
  }
  if (count == 0) throw std::invalid_argument("average_speed: empty window");
  return total / static_cast<double>(count);
}

double throughput(const Trajectory& traj, const Horizon& window) {
  const RingConfig& c = traj.config;
  return c.n_vehicles / c.track_length * average_speed(traj, window) * 3600.0;
}

std::optional<long> settling_time(const Trajectory& traj, double target_speed, double tol) {
  const long activation = traj.config.horizon.t0;
  const double band = tol * target_speed;
  std::optional<long> settled;
  for (auto it = traj.states.rbegin(); it != traj.states.rend(); ++it) {
    if (it->time_index < activation) break;
    const bool inside = std::all_of(it->speeds.begin(), it->speeds.end(),
                                    [&](double v) { return std::abs(v - target_speed) <= band; });
    if (!inside) break;
    settled = it->time_index - activation;
  }
  return settled;
}

MetricsReport compute_metrics(const Trajectory& traj, const Horizon& window,
                              double target_speed, double settle_tol) {
  MetricsReport m;
  m.n_vehicles = traj.config.n_vehicles;
  m.track_length = traj.config.track_length;
  m.avg_speed = average_speed(traj, window);
  m.throughput = m.n_vehicles / m.track_length * m.avg_speed * 3600.0;
  m.settling_steps = settling_time(traj, target_speed, settle_tol);
  m.min_speed = std::numeric_limits<double>::infinity();
  m.min_headway = std::numeric_limits<double>::infinity();
  for (const SimState& s : traj.states) {
    if (!in_window(s, window)) continue;
    m.min_speed = std::min(m.min_speed, *std::min_element(s.speeds.begin(), s.speeds.end()));
    const auto gaps = headways(s, traj.config);
    m.min_headway = std::min(m.min_headway, *std::min_element(gaps.begin(), gaps.end()));
  }
  return m;
}

double ring_equilibrium_speed(const RingConfig& config) {
  return equilibrium_speed(config.track_length / config.n_vehicles - config.vehicle_length,
                           config.human_params);
}

void write_metrics(std::ostream& out, const MetricsReport& m) {
  fmt::print(out,
             "avg_speed_mps = {:.12g}\n"
             "throughput_veh_per_hr = {:.12g}\n"
             "settling_steps = {}\n"
             "min_speed_mps = {:.12g}\n"
             "min_headway_m = {:.12g}\n"
             "n_vehicles = {}\n"
             "track_length_m = {:.12g}\n",
             m.avg_speed, m.throughput, settling_text(m), m.min_speed, m.min_headway,
             m.n_vehicles, m.track_length);
}

void write_metrics_csv(std::ostream& out, const MetricsReport& m) {
  out << "avg_speed_mps,throughput_veh_per_hr,settling_steps,min_speed_mps,min_headway_m,"
         "n_vehicles,track_length_m\n";
  fmt::print(out, "{:.12g},{:.12g},{},{:.12g},{:.12g},{},{:.12g}\n", m.avg_speed,
             m.throughput, settling_text(m), m.min_speed, m.min_headway, m.n_vehicles,
             m.track_length);
}

double amplification_ratio(const IdmParams& params, const PlatoonProbe& probe) {
  if (!(probe.v_eq > 0.0 && probe.v_eq < params.c1)) {
    throw DomainError("platoon speed must lie in (0, c1)");
  }
  if (probe.followers < 1 || probe.measured_periods >= probe.periods) {
    throw std::invalid_argument("bad platoon probe");
  }
  const int n = probe.followers + 1;
  const double spacing = equilibrium_headway(probe.v_eq, params) + probe.vehicle_length;
  const double omega = 2.0 * std::numbers::pi / probe.period;
  std::vector<double> x(n), v(n, probe.v_eq), a(n);
  for (int i = 0; i < n; ++i) x[i] = -i * spacing;
  v[0] = probe.v_eq + probe.amplitude * std::sin(omega * probe.phase);

  const auto total_steps = static_cast<long>(std::lround(probe.periods * probe.period / probe.dt));
  const auto measure_from = static_cast<long>(
      std::lround((probe.periods - probe.measured_periods) * probe.period / probe.dt));

  double lead_min = std::numeric_limits<double>::infinity(), lead_max = -lead_min;
  double last_min = lead_min, last_max = -lead_min;
  for (long t = 0; t <= total_steps; ++t) {
    if (t >= measure_from) {
      lead_min = std::min(lead_min, v[0]);
      lead_max = std::max(lead_max, v[0]);
      last_min = std::min(last_min, v[n - 1]);
      last_max = std::max(last_max, v[n - 1]);
    }
    for (int i = 1; i < n; ++i) {
      const double gap = x[i - 1] - x[i] - probe.vehicle_length;
      if (!(gap > 0.0)) {
        throw CollisionError(fmt::format("platoon collision at step {}, follower {}", t, i), t, i);
      }
      const CarFollowingInput in{v[i], gap, v[i - 1]};
      a[i] = (i == n - 1 && probe.last_follower) ? evaluate_controller(*probe.last_follower, in).accel
                                                 : idm_accel(in, params);
    }
    for (int i = 0; i < n; ++i) x[i] += probe.dt * v[i];
    const double time = (t + 1) * probe.dt + probe.phase;
    v[0] = probe.v_eq + probe.amplitude * std::sin(omega * time);
    for (int i = 1; i < n; ++i) v[i] = std::max(v[i] + probe.dt * a[i], 0.0);
  }
  return (last_max - last_min) / (lead_max - lead_min);
}

}  // namespace ringopt
