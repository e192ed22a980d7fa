#pragma once

#include <span>
#include <vector>

#include "ringopt/ring_sim.hpp"

namespace ringopt {

// Per-step loss l(s) = sum_i (v_i - m_i)^2 - m_i + P(headways), where m_i is
// the vehicle's moving-average speed, summed over states t0..t1 inclusive.
struct LossConfig {
  double penalty_scale = 4.0;  // alpha, 1/m
  double min_gap = 2.0;        // s_min, m
  Horizon window;              // only states with t0 <= t <= t1 contribute

  void validate() const;
};

// Gradient of l with respect to one state, laid out like SimState.
struct StateGradient {
  std::vector<double> positions;
  std::vector<double> speeds;
  std::vector<double> avg_speeds;
};

/// P = sum over s_i < s_min of exp(alpha (s_min - s_i)) - 1.
double penalty(std::span<const double> gaps, const LossConfig& config);

double step_loss(const SimState& state, const RingConfig& ring, const LossConfig& config);

void loss_partials(const SimState& state, const RingConfig& ring,
                   const LossConfig& config, StateGradient& out);
StateGradient loss_partials(const SimState& state, const RingConfig& ring,
                            const LossConfig& config);

/// F = sum of step_loss over the trajectory's states inside config.window.
double total_objective(const Trajectory& traj, const LossConfig& config);

// The loss window matching a ring config's control horizon.
LossConfig loss_config_for(const RingConfig& ring);

}  // namespace ringopt
