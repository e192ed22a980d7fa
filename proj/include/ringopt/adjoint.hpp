#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ringopt/objective.hpp"
#include "ringopt/ring_sim.hpp"

namespace ringopt {

// Costates of the backward recursion. lambda is laid out as
// [positions | speeds | avg_speeds].
struct AdjointState {
  std::vector<double> lambda;      // 3n
  std::vector<double> mu;          // n
  std::vector<double> grad_accum;  // |p|
};

// Test hooks for mutation testing of the gradient check.
struct AdjointOptions {
  bool flip_headway_partial_sign = false;
};

struct GradientResult {
  double objective = 0.0;
  std::vector<double> gradient;  // dF/dp for config.controller.params
  Trajectory trajectory;
  double forward_seconds = 0.0;
  double backward_seconds = 0.0;
};

/// F and dF/dp by the discrete adjoint recursion:
///   lambda_{T-1} = -dl(s_T)/ds
///   mu_t         = lambda_t du/da_t
///   lambda_{t-1} = lambda_t du/ds_t + mu_t df/ds_t - dl/ds_t
///   dF/dp        = sum_t -mu_t df/dp
/// Throws CollisionError if the rollout collides.
GradientResult gradient(const RingConfig& config, const SimState& initial,
                        const LossConfig& loss, const AdjointOptions& options = {});

/// F alone (one rollout).
double evaluate_objective(const RingConfig& config, const SimState& initial,
                          const LossConfig& loss);

/// Central differences of an arbitrary scalar function; coordinate j is
/// perturbed by h * max(1, |x_j|).
std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h);

/// Central-difference dF/dp, 2|p| rollouts. A probe that collides raises
/// CollisionError naming the probe.
std::vector<double> fd_gradient(const RingConfig& config, const SimState& initial,
                                const LossConfig& loss, double h = 1e-6);

struct GradCheckReport {
  std::vector<std::string> names;
  std::vector<double> adjoint_grad;
  std::vector<double> fd_grad;
  std::vector<double> rel_error;
  double max_rel_error = 0.0;
  double objective = 0.0;
  double forward_seconds = 0.0;
  double backward_seconds = 0.0;

  double timing_ratio() const {
    return forward_seconds > 0.0 ? backward_seconds / forward_seconds : 0.0;
  }
};

GradCheckReport grad_check(const RingConfig& config, const SimState& initial,
                           const LossConfig& loss, const AdjointOptions& options = {},
                           double h = 1e-6);

// component,adjoint,fd,rel_error
void write_grad_check_csv(std::ostream& out, const GradCheckReport& report);

}  // namespace ringopt
