#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "ringopt/errors.hpp"
#include "ringopt/ring_sim.hpp"

using namespace ringopt;

namespace {

// n (s_eq(15) + 5) with s_eq(15) = 2 + 18 / sqrt(1 - (15 / 33.33)^4).
constexpr double kRing22 = 559.312502235405777;
constexpr double kRing40 = 1016.93182224619232;

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(RingSim, EquilibriumTrackLength) {
  EXPECT_NEAR(init_equilibrium(22, 15.0, IdmParams{}, 5.0).first.track_length, kRing22, 1e-9);
  EXPECT_NEAR(init_equilibrium(40, 15.0, IdmParams{}, 5.0).first.track_length, kRing40, 1e-9);
  EXPECT_THROW(init_equilibrium(22, 0.0, IdmParams{}, 5.0), DomainError);
}

TEST(RingSim, EquilibriumIsAFixedPoint) {
  auto [config, state] = init_equilibrium(22, 15.0, IdmParams{}, 5.0);
  const Trajectory traj = run(config, state);
  ASSERT_EQ(traj.states.size(), 4801u);
  ASSERT_EQ(traj.actions.size(), 4800u);
  double worst = 0.0;
  for (const auto& s : traj.states) {
    for (double v : s.speeds) worst = std::max(worst, std::abs(v - 15.0));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(RingSim, HeadwaysSumToTrackLength) {
  auto [config, state] = init_equilibrium(5, 10.0, IdmParams{}, 4.0);
  state.positions = {0.0, 30.0, 55.0, 70.0, 100.0};
  config.track_length = 140.0;
  const auto gaps = headways(state, config);
  EXPECT_EQ(gaps, (std::vector<double>{26.0, 21.0, 11.0, 26.0, 36.0}));
}

TEST(RingSim, OverlapRaisesCollision) {
  auto [config, state] = init_equilibrium(3, 10.0, IdmParams{}, 5.0);
  state.positions[1] = state.positions[0] + 4.0;
  state.time_index = 17;
  try {
    headways(state, config);
    FAIL() << "expected CollisionError";
  } catch (const CollisionError& e) {
    EXPECT_EQ(e.step(), 17);
    EXPECT_EQ(e.vehicle(), 0);
  }
}

TEST(RingSim, StepWrapsFloorsAndAverages) {
  auto [config, state] = init_equilibrium(3, 10.0, IdmParams{}, 5.0);
  const double L = config.track_length;
  state.positions = {10.0, L / 2, L - 1.5};
  state.speeds = {0.2, 10.0, 8.0};
  state.avg_speeds = {1.0, 10.0, 6.0};
  ActionVector a{{-3.0, 0.4, 1.0}};
  const SimState next = step(state, a, config);
  EXPECT_DOUBLE_EQ(next.positions[0], 10.05);
  EXPECT_NEAR(next.positions[2], 0.5, 1e-12);
  EXPECT_EQ(next.speeds[0], 0.0);
  EXPECT_DOUBLE_EQ(next.speeds[1], 10.1);
  EXPECT_DOUBLE_EQ(next.avg_speeds[2], 0.99 * 6.0 + 0.01 * 8.25);
  EXPECT_EQ(next.time_index, state.time_index + 1);

  const StepPartials p = step_partials(state, a, config);
  EXPECT_EQ(p.dspeed_dspeed, (std::vector<double>{0.0, 1.0, 1.0}));
  EXPECT_EQ(p.dspeed_daccel, (std::vector<double>{0.0, 0.25, 0.25}));
}

TEST(RingSim, PerturbationOverridesAction) {
  auto [config, state] = init_equilibrium(6, 12.0, IdmParams{}, 5.0);
  config.perturbation = PerturbationSpec{2, 3, 4, -2.0};
  config.horizon = {0, 12};
  const Trajectory traj = run(config, state);
  for (long t = 0; t < 12; ++t) {
    const double a = traj.actions[t].accels[2];
    if (t >= 3 && t < 7) {
      EXPECT_EQ(a, -2.0) << t;
    } else {
      EXPECT_NE(a, -2.0) << t;
    }
  }
}

TEST(RingSim, ActionPartialsOnlyOnControlledRows) {
  auto [config, state] = init_equilibrium(4, 12.0, IdmParams{}, 5.0);
  config.av_indices = {1};
  config.controller = {ControllerKind::Linear, default_params(ControllerKind::Linear)};
  config.horizon = {5, 10};
  state.speeds[1] = 11.0;

  auto before = compute_actions(state, config);
  for (double d : before.second.params) EXPECT_EQ(d, 0.0);

  state.time_index = 5;
  auto after = compute_actions(state, config);
  for (int i = 0; i < 4; ++i) {
    const auto row = after.second.param_row(i);
    const bool any = std::any_of(row.begin(), row.end(), [](double d) { return d != 0.0; });
    EXPECT_EQ(any, i == 1) << i;
  }
}

TEST(RingSim, WarmUpMatchesRun) {
  auto [config, state] = standard_experiment(ControllerKind::FollowerStopper);
  config.horizon = {300, 400};
  RingConfig human = config;
  human.horizon = {0, 300};
  human.av_indices.clear();
  const Trajectory traj = run(human, state);
  const SimState warm = warm_up(config, state);
  EXPECT_EQ(warm.time_index, 300);
  EXPECT_EQ(warm.positions, traj.states.back().positions);
  EXPECT_EQ(warm.speeds, traj.states.back().speeds);
  EXPECT_EQ(warm.avg_speeds, traj.states.back().avg_speeds);
}

TEST(RingSim, ConfigValidation) {
  auto [config, state] = init_equilibrium(4, 12.0, IdmParams{}, 5.0);
  RingConfig bad = config;
  bad.dt = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = config;
  bad.av_indices = {4};
  EXPECT_THROW(bad.validate(), DomainError);
  bad = config;
  bad.track_length = 20.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = config;
  bad.controller.params.pop_back();
  EXPECT_THROW(bad.validate(), DomainError);
  EXPECT_THROW(run(config, SimState{{0.0}, {1.0}, {1.0}, 0}), DomainError);
}

TEST(RingSim, TrajectoryCsvLayout) {
  auto [config, state] = init_equilibrium(3, 10.0, IdmParams{}, 5.0);
  config.horizon = {1, 2};
  config.av_indices = {2};
  const Trajectory traj = run(config, state);
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  const auto rows = lines(out.str());
  ASSERT_EQ(rows.size(), 1u + 3 * 3);
  EXPECT_EQ(rows[0], "t,vehicle_id,position_m,speed_mps,accel_mps2,headway_m,is_av");
  EXPECT_EQ(rows[1].substr(0, 4), "0,0,");
  EXPECT_EQ(rows[3].back(), '0');  // vehicle 2 is not controlled before t0
  EXPECT_EQ(rows[6].back(), '1');
  // The terminal state has no action.
  EXPECT_NE(rows[9].find(",,"), std::string::npos);
}
