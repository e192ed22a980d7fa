#include "ringopt/objective.hpp"

#include <cmath>

#include "ringopt/errors.hpp"

namespace ringopt {

void LossConfig::validate() const {
  if (!(penalty_scale > 0.0)) throw DomainError("penalty_scale must be positive");
  if (!(min_gap > 0.0)) throw DomainError("min_gap must be positive");
  if (window.t0 > window.t1) throw DomainError("loss window needs t0 <= t1");
}

double penalty(std::span<const double> gaps, const LossConfig& config) {
  double total = 0.0;
  for (double s : gaps) {
    if (s < config.min_gap) total += std::expm1(config.penalty_scale * (config.min_gap - s));
  }
  return total;
}

double step_loss(const SimState& state, const RingConfig& ring, const LossConfig& config) {
  double total = 0.0;
  for (int i = 0; i < state.size(); ++i) {
    const double dev = state.speeds[i] - state.avg_speeds[i];
    total += dev * dev - state.avg_speeds[i];
  }
  const auto gaps = headways(state, ring);
  return total + penalty(gaps, config);
}

void loss_partials(const SimState& state, const RingConfig& ring,
                   const LossConfig& config, StateGradient& out) {
  const int n = state.size();
  out.positions.assign(n, 0.0);
  out.speeds.resize(n);
  out.avg_speeds.resize(n);
  for (int i = 0; i < n; ++i) {
    const double dev = state.speeds[i] - state.avg_speeds[i];
    out.speeds[i] = 2.0 * dev;
    out.avg_speeds[i] = -2.0 * dev - 1.0;
  }
  const auto gaps = headways(state, ring);
  for (int i = 0; i < n; ++i) {
    if (gaps[i] >= config.min_gap) continue;
    // s_i = x_{i+1} - x_i - len
    const double d_penalty_d_gap =
        -config.penalty_scale * std::exp(config.penalty_scale * (config.min_gap - gaps[i]));
    out.positions[i] -= d_penalty_d_gap;
    out.positions[(i + 1) % n] += d_penalty_d_gap;
  }
}

StateGradient loss_partials(const SimState& state, const RingConfig& ring,
                            const LossConfig& config) {
  StateGradient out;
  loss_partials(state, ring, config, out);
  return out;
}

double total_objective(const Trajectory& traj, const LossConfig& config) {
  double total = 0.0;
  for (const SimState& s : traj.states) {
    if (s.time_index < config.window.t0 || s.time_index > config.window.t1) continue;
    total += step_loss(s, traj.config, config);
  }
  return total;
}

LossConfig loss_config_for(const RingConfig& ring) {
  LossConfig config;
  config.window = ring.horizon;
  return config;
}

}  // namespace ringopt
