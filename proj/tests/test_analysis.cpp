#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "ringopt/analysis.hpp"
#include "ringopt/errors.hpp"

using namespace ringopt;

namespace {

// Gain of one follower for the forward-Euler linearization
//   s' = s + dt (v_l - v),  v' = v + dt (f_s s + f_v v + f_vl v_l)
// at forcing period T: the exact discrete transfer function evaluated at
// z = exp(i 2 pi dt / T).
double follower_gain(double f_s, double f_v, double f_vl, double dt, double period) {
  const std::complex<double> z = std::polar(1.0, 2 * std::numbers::pi * dt / period);
  const std::complex<double> num = dt * dt * f_s + dt * f_vl * (z - 1.0);
  const std::complex<double> den = (z - 1.0) * (z - 1.0 - dt * f_v) + dt * dt * f_s;
  return std::abs(num / den);
}

double idm_gain(const PlatoonProbe& probe) {
  const IdmParams p;
  const double s = equilibrium_headway(probe.v_eq, p);
  const AccelPartials d = idm_partials({probe.v_eq, s, probe.v_eq}, p);
  return follower_gain(d.d_accel_d_headway, d.d_accel_d_ego_speed, d.d_accel_d_lead_speed,
                       probe.dt, probe.period);
}

// A trajectory whose speeds are given per step; positions are evenly spaced.
Trajectory synthetic(const std::vector<std::vector<double>>& speeds, Horizon horizon) {
  auto [config, state] = init_equilibrium(static_cast<int>(speeds[0].size()), 15.0,
                                          IdmParams{}, 5.0);
  config.horizon = horizon;
  Trajectory traj;
  traj.config = config;
  for (std::size_t k = 0; k < speeds.size(); ++k) {
    SimState s = state;
    s.time_index = static_cast<long>(k);
    s.speeds = speeds[k];
    traj.states.push_back(s);
  }
  return traj;
}

}  // namespace

TEST(Analysis, EquilibriumMetrics) {
  auto [config, state] = init_equilibrium(22, 15.0, IdmParams{}, 5.0);
  config.horizon = {0, 400};
  const Trajectory traj = run(config, state);
  const MetricsReport m = compute_metrics(traj, config.horizon, 15.0);
  EXPECT_NEAR(m.avg_speed, 15.0, 1e-9);
  // (22 / 559.3125 m) * 15 m/s * 3600 s/h
  EXPECT_NEAR(m.throughput, 2124.03619667344680, 1e-6);
  ASSERT_TRUE(m.settling_steps.has_value());
  EXPECT_EQ(*m.settling_steps, 0);
  EXPECT_NEAR(m.min_headway, 20.4232955561548081, 1e-9);
  EXPECT_NEAR(ring_equilibrium_speed(config), 15.0, 1e-9);
}

TEST(Analysis, AverageSpeedUsesInclusiveWindow) {
  const Trajectory traj = synthetic({{1, 1}, {2, 4}, {3, 3}, {9, 9}}, {0, 3});
  EXPECT_DOUBLE_EQ(average_speed(traj, {1, 2}), 3.0);
  EXPECT_DOUBLE_EQ(average_speed(traj, {0, 0}), 1.0);
  EXPECT_THROW(average_speed(traj, {10, 20}), std::invalid_argument);
}

TEST(Analysis, SettlingTime) {
  // Target 10 with 5% band [9.5, 10.5]; horizon starts at step 2.
  const Trajectory settled =
      synthetic({{10, 10}, {7, 10}, {10, 12}, {9.6, 10}, {10, 10.4}, {10, 10}}, {2, 5});
  EXPECT_EQ(settling_time(settled, 10.0, 0.05), 1);

  const Trajectory early = synthetic({{7, 10}, {10, 10}, {10, 10}}, {2, 2});
  EXPECT_EQ(settling_time(early, 10.0, 0.05), 0);

  const Trajectory unsettled = synthetic({{10, 10}, {10, 10}, {10, 11}}, {0, 2});
  EXPECT_FALSE(settling_time(unsettled, 10.0, 0.05).has_value());
}

TEST(Analysis, MetricsText) {
  const Trajectory traj = synthetic({{10, 10}, {10, 11}}, {0, 1});
  std::ostringstream out;
  write_metrics(out, compute_metrics(traj, {0, 1}, 10.0));
  EXPECT_NE(out.str().find("settling_steps = none"), std::string::npos);
  EXPECT_NE(out.str().find("avg_speed_mps = 10.25"), std::string::npos);
}

TEST(Analysis, HumanPlatoonAmplifiesOscillations) {
  EXPECT_GT(amplification_ratio(IdmParams{}, PlatoonProbe{}), 1.0);
}

TEST(Analysis, SmallAmplitudeMatchesLinearization) {
  PlatoonProbe probe;
  probe.amplitude = 0.01;
  const double expected = std::pow(idm_gain(probe), probe.followers);
  EXPECT_NEAR(amplification_ratio(IdmParams{}, probe), expected, 0.01 * expected);
}

TEST(Analysis, RatioIndependentOfAmplitudeAndPhase) {
  PlatoonProbe small, large, shifted;
  small.amplitude = 0.01;
  large.amplitude = 0.1;
  shifted.amplitude = 0.1;
  shifted.phase = 17.0;
  const double r_small = amplification_ratio(IdmParams{}, small);
  const double r_large = amplification_ratio(IdmParams{}, large);
  const double r_shift = amplification_ratio(IdmParams{}, shifted);
  EXPECT_NEAR(r_large, r_small, 0.02 * r_small);
  EXPECT_NEAR(r_shift, r_large, 0.01 * r_large);
}

TEST(Analysis, DampingLastFollowerScalesRatioByItsGain) {
  // The linear controller is exactly linear inside its limits, so its gain
  // does not depend on the operating point.
  const double k_s = 0.1, k_v = 1.0, k_0 = 0.3;
  PlatoonProbe probe;
  probe.amplitude = 0.01;
  probe.last_follower = ControllerSpec{ControllerKind::Linear, {k_s, k_v, k_0, 15.0, 20.4}};
  const double lin_gain = follower_gain(k_s, -k_v - k_0, k_v, probe.dt, probe.period);
  ASSERT_LT(lin_gain, 1.0);
  const double expected = std::pow(idm_gain(probe), probe.followers - 1) * lin_gain;
  const double ratio = amplification_ratio(IdmParams{}, probe);
  EXPECT_NEAR(ratio, expected, 0.01 * expected);

  PlatoonProbe human = probe;
  human.last_follower.reset();
  EXPECT_LT(ratio, amplification_ratio(IdmParams{}, human));
}

TEST(Analysis, ProbeValidation) {
  PlatoonProbe bad;
  bad.v_eq = 40.0;
  EXPECT_THROW(amplification_ratio(IdmParams{}, bad), DomainError);
  bad = PlatoonProbe{};
  bad.measured_periods = bad.periods;
  EXPECT_THROW(amplification_ratio(IdmParams{}, bad), std::invalid_argument);
}
