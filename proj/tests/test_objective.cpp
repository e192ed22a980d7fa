#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ringopt/errors.hpp"
#include "ringopt/objective.hpp"

using namespace ringopt;

TEST(Objective, PenaltyOnlyBelowMinimumGap) {
  const LossConfig cfg;
  const std::vector<double> gaps{1.0, 3.0, 1.5, 2.0};
  EXPECT_NEAR(penalty(gaps, cfg), std::expm1(4.0) + std::expm1(2.0), 1e-12);
  EXPECT_EQ(penalty(std::vector<double>{2.0, 50.0}, cfg), 0.0);
}

TEST(Objective, StepLossAtEquilibrium) {
  auto [ring, state] = init_equilibrium(7, 15.0, IdmParams{}, 5.0);
  // v == m and every gap is 20.4 m, so only -sum(m) remains.
  EXPECT_NEAR(step_loss(state, ring, LossConfig{}), -105.0, 1e-12);

  state.speeds[3] = 17.0;
  state.avg_speeds[3] = 14.0;
  EXPECT_NEAR(step_loss(state, ring, LossConfig{}), -104.0 + 9.0, 1e-12);
}

TEST(Objective, LossPartialsMatchFiniteDifferences) {
  auto [ring, state] = init_equilibrium(6, 10.0, IdmParams{}, 5.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> jitter(-12.0, 12.0), speed(0.0, 20.0);
  // Pack vehicles so that several gaps fall below min_gap.
  for (int i = 0; i < 6; ++i) {
    state.positions[i] = i * 7.2 + (i % 2 ? 0.4 : 0.0);
    state.speeds[i] = speed(rng);
    state.avg_speeds[i] = speed(rng);
  }
  ring.track_length = 6 * 7.2 + 3.0;
  const LossConfig cfg;
  const StateGradient g = loss_partials(state, ring, cfg);
  const double h = 1e-6;
  auto fd = [&](std::vector<double> SimState::*field, int i) {
    SimState up = state, down = state;
    (up.*field)[i] += h;
    (down.*field)[i] -= h;
    return (step_loss(up, ring, cfg) - step_loss(down, ring, cfg)) / (2 * h);
  };
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(g.positions[i], fd(&SimState::positions, i), 1e-5) << i;
    EXPECT_NEAR(g.speeds[i], fd(&SimState::speeds, i), 1e-5) << i;
    EXPECT_NEAR(g.avg_speeds[i], fd(&SimState::avg_speeds, i), 1e-5) << i;
  }
}

TEST(Objective, TotalCountsWindowInclusive) {
  auto [ring, state] = init_equilibrium(4, 15.0, IdmParams{}, 5.0);
  ring.horizon = {0, 30};
  const Trajectory traj = run(ring, state);
  LossConfig cfg;
  cfg.window = {10, 20};
  EXPECT_NEAR(total_objective(traj, cfg), 11 * -60.0, 1e-9);
  EXPECT_EQ(loss_config_for(ring).window.t1, 30);
}

TEST(Objective, ConfigValidation) {
  LossConfig cfg;
  cfg.penalty_scale = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = LossConfig{};
  cfg.window = {6, 5};
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Objective, PenaltyShape) {
  const LossConfig cfg;  // alpha = 4, s_min = 2
  const double one_over_alpha = 1.0 / cfg.penalty_scale;
  EXPECT_NEAR(penalty(std::vector<double>{cfg.min_gap - one_over_alpha}, cfg), std::exp(1.0) - 1.0,
              1e-12);
  EXPECT_NEAR(penalty(std::vector<double>{cfg.min_gap / 2}, cfg), std::expm1(4.0), 1e-12);
  // Bounded by exp(alpha s_min) - 1 as the gap closes.
  EXPECT_LT(penalty(std::vector<double>{1e-12}, cfg), std::expm1(8.0));
  EXPECT_GT(penalty(std::vector<double>{1e-12}, cfg), std::expm1(8.0) - 1e-6);

  // One-sided slopes at s_min: -alpha from below, 0 from above.
  const double h = 1e-7;
  const double below = (penalty(std::vector<double>{cfg.min_gap}, cfg) -
                        penalty(std::vector<double>{cfg.min_gap - h}, cfg)) / h;
  const double above = (penalty(std::vector<double>{cfg.min_gap + h}, cfg) -
                        penalty(std::vector<double>{cfg.min_gap}, cfg)) / h;
  EXPECT_NEAR(below, -cfg.penalty_scale, 1e-5);
  EXPECT_EQ(above, 0.0);
}
