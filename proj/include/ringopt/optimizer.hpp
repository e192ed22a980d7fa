#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "ringopt/controllers.hpp"
#include "ringopt/objective.hpp"
#include "ringopt/ring_sim.hpp"

namespace ringopt {

// Box constraints; entries may be +-infinity.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  static Box unbounded(std::size_t n);
  static Box from(const Bounds& b) { return {b.lower, b.upper}; }
  bool contains(std::span<const double> x) const;
  void project(std::span<double> x) const;
};

// Writes the gradient into `grad` and returns the objective. Throwing
// CollisionError (or returning a non-finite value) marks x infeasible.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct OptimizeOptions {
  int history = 10;          // stored correction pairs
  double tol = 1e-5;         // projected-gradient infinity norm
  double ftol = 1e-9;        // relative decrease between iterates
  int max_iterations = 200;
  int max_line_search_evals = 20;
  int multi_start = 1;       // extra starts are drawn uniformly in the box
  std::uint64_t seed = 0;
};

enum class Termination { ProjectedGradient, RelativeDecrease, MaxIterations, LineSearchFailure };
std::string_view to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double f = 0.0;
  double proj_grad_norm = 0.0;
  double avg_speed = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x;
};

struct OptimizeResult {
  std::vector<double> x_best;
  double f_best = 0.0;
  double grad_norm_proj = 0.0;
  int iterations = 0;
  int function_evals = 0;
  Termination termination = Termination::MaxIterations;
  std::vector<IterationRecord> history;
};

/// Projected-gradient infinity norm: max_i |P(x - g)_i - x_i|.
double projected_gradient_norm(std::span<const double> x, std::span<const double> g,
                               const Box& box);

/// Limited-memory BFGS with bounds: generalized Cauchy point along the
/// projected steepest-descent path, subspace minimization over the free
/// variables, and a strong-Wolfe line search on the feasible segment.
/// Throws std::runtime_error if eval fails at x0.
OptimizeResult minimize(const ObjectiveFn& eval, std::span<const double> x0,
                        const Box& box, const OptimizeOptions& opts = {});

/// Minimizes F over the parameters of `kind` within bounds_for(kind).
/// `initial` is the state at horizon.t0 (see warm_up). Iterates record the
/// average speed over the horizon.
OptimizeResult optimize_controller(const RingConfig& config, const SimState& initial,
                                   const LossConfig& loss, ControllerKind kind,
                                   std::span<const double> x0,
                                   const OptimizeOptions& opts = {});

// iter,F,projected_grad_norm,avg_speed_mps
void write_history_csv(std::ostream& out, const OptimizeResult& result);

}  // namespace ringopt
