#include "ringopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ringopt/adjoint.hpp"
#include "ringopt/analysis.hpp"
#include "ringopt/errors.hpp"

namespace ringopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd to_eigen(std::span<const double> x) {
  return Eigen::Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

struct Evaluation {
  double f = kInf;
  VectorXd g;
};

class CountingObjective {
 public:
  explicit CountingObjective(const ObjectiveFn& fn) : fn_(fn) {}

  Evaluation operator()(const VectorXd& x) {
    ++evals_;
    Evaluation out;
    out.g = VectorXd::Zero(x.size());
    try {
      out.f = fn_({x.data(), static_cast<std::size_t>(x.size())},
                  {out.g.data(), static_cast<std::size_t>(out.g.size())});
    } catch (const CollisionError&) {
      out.f = kInf;
    }
    if (!std::isfinite(out.f) || !out.g.allFinite()) out.f = kInf;
    return out;
  }

  int evals() const { return evals_; }

 private:
  const ObjectiveFn& fn_;
  int evals_ = 0;
};

// Dense BFGS matrix rebuilt from the stored pairs, starting from theta I with
// theta = y'y / s'y of the newest pair.
MatrixXd bfgs_matrix(const std::deque<std::pair<VectorXd, VectorXd>>& pairs, Eigen::Index n) {
  if (pairs.empty()) return MatrixXd::Identity(n, n);
  const auto& [s_new, y_new] = pairs.back();
  MatrixXd b = MatrixXd::Identity(n, n) * (y_new.squaredNorm() / s_new.dot(y_new));
  for (const auto& [s, y] : pairs) {
    const VectorXd bs = b * s;
    b += y * y.transpose() / y.dot(s) - bs * bs.transpose() / s.dot(bs);
  }
  return b;
}

struct CauchyPoint {
  VectorXd x;
  std::vector<bool> free;
};

// Minimizer of the quadratic model along the projected path x(t) = P(x - t g).
CauchyPoint cauchy_point(const VectorXd& x, const VectorXd& g, const MatrixXd& b,
                         const Box& box) {
  const Eigen::Index n = x.size();
  VectorXd breakpoint(n);
  VectorXd d = -g;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (g[i] < 0.0 && std::isfinite(box.upper[i])) {
      breakpoint[i] = (x[i] - box.upper[i]) / g[i];
    } else if (g[i] > 0.0 && std::isfinite(box.lower[i])) {
      breakpoint[i] = (x[i] - box.lower[i]) / g[i];
    } else {
      breakpoint[i] = kInf;
    }
    if (breakpoint[i] <= 0.0) d[i] = 0.0;
  }

  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (breakpoint[i] > 0.0 && std::isfinite(breakpoint[i])) order.push_back(i);
  }
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index c) { return breakpoint[a] < breakpoint[c]; });

  CauchyPoint cp;
  cp.free.assign(static_cast<std::size_t>(n), true);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (breakpoint[i] <= 0.0) cp.free[static_cast<std::size_t>(i)] = false;
  }

  VectorXd z = VectorXd::Zero(n);  // x(t) - x
  double t_old = 0.0;
  std::size_t next = 0;
  while (true) {
    if (d.squaredNorm() == 0.0) break;
    const double t_next = next < order.size() ? breakpoint[order[next]] : kInf;
    const VectorXd bd = b * d;
    const double slope = g.dot(d) + z.dot(bd);
    const double curvature = d.dot(bd);
    if (slope >= 0.0) break;
    const double dt_min = curvature > 0.0 ? -slope / curvature : kInf;
    if (dt_min < t_next - t_old) {
      z += dt_min * d;
      break;
    }
    if (!std::isfinite(t_next)) break;  // unbounded model along the path
    z += (t_next - t_old) * d;
    t_old = t_next;
    // Fix every variable whose breakpoint is t_next.
    while (next < order.size() && breakpoint[order[next]] <= t_next) {
      const Eigen::Index i = order[next++];
      z[i] = (d[i] > 0.0 ? box.upper[i] : box.lower[i]) - x[i];
      d[i] = 0.0;
      cp.free[static_cast<std::size_t>(i)] = false;
    }
  }
  cp.x = x + z;
  for (Eigen::Index i = 0; i < n; ++i) {
    cp.x[i] = std::clamp(cp.x[i], box.lower[i], box.upper[i]);
  }
  return cp;
}

// Minimizes the model over the free variables starting at the Cauchy point,
// then backtracks the step into the box.
VectorXd subspace_minimum(const VectorXd& x, const VectorXd& g, const MatrixXd& b,
                          const CauchyPoint& cp, const Box& box) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (cp.free[static_cast<std::size_t>(i)]) free.push_back(i);
  }
  if (free.empty()) return cp.x;
  const auto nf = static_cast<Eigen::Index>(free.size());
  const VectorXd reduced_all = g + b * (cp.x - x);
  MatrixXd b_ff(nf, nf);
  VectorXd r(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    r[a] = reduced_all[free[a]];
    for (Eigen::Index c = 0; c < nf; ++c) b_ff(a, c) = b(free[a], free[c]);
  }
  const Eigen::LDLT<MatrixXd> ldlt(b_ff);
  if (ldlt.info() != Eigen::Success) return cp.x;
  const VectorXd du = ldlt.solve(-r);
  if (!du.allFinite()) return cp.x;

  double alpha = 1.0;
  for (Eigen::Index a = 0; a < nf; ++a) {
    const Eigen::Index i = free[a];
    if (du[a] > 0.0 && std::isfinite(box.upper[i])) {
      alpha = std::min(alpha, (box.upper[i] - cp.x[i]) / du[a]);
    } else if (du[a] < 0.0 && std::isfinite(box.lower[i])) {
      alpha = std::min(alpha, (box.lower[i] - cp.x[i]) / du[a]);
    }
  }
  alpha = std::max(alpha, 0.0);
  VectorXd out = cp.x;
  for (Eigen::Index a = 0; a < nf; ++a) out[free[a]] += alpha * du[a];
  return out;
}

double max_feasible_step(const VectorXd& x, const VectorXd& p, const Box& box) {
  double alpha = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (p[i] > 0.0 && std::isfinite(box.upper[i])) {
      alpha = std::min(alpha, (box.upper[i] - x[i]) / p[i]);
    } else if (p[i] < 0.0 && std::isfinite(box.lower[i])) {
      alpha = std::min(alpha, (box.lower[i] - x[i]) / p[i]);
    }
  }
  return std::max(alpha, 0.0);
}

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  VectorXd x;
  Evaluation eval;
};

// Minimizer of the cubic interpolating (a, fa, ga), (b, fb, gb), safeguarded
// into the middle 80% of the bracket; bisection when the cubic is unusable.
double interpolate(double a, double fa, double ga, double b, double fb, double gb) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  double t = 0.5 * (a + b);
  if (std::isfinite(fb)) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b - a);
      const double cand = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
      if (std::isfinite(cand)) t = cand;
    }
  }
  return std::clamp(t, lo + margin, hi - margin);
}

LineSearchResult strong_wolfe(CountingObjective& objective, const VectorXd& x, double f0,
                              const VectorXd& g0, const VectorXd& p, double alpha0,
                              double alpha_max, const Box& box, int max_evals) {
  constexpr double kC1 = 1e-4;
  constexpr double kC2 = 0.9;
  const double slope0 = g0.dot(p);

  auto point = [&](double alpha) {
    VectorXd xa = x + alpha * p;
    for (Eigen::Index i = 0; i < xa.size(); ++i) {
      xa[i] = std::clamp(xa[i], box.lower[i], box.upper[i]);
    }
    return xa;
  };

  LineSearchResult best;  // lowest point satisfying sufficient decrease
  int evals = 0;
  auto try_alpha = [&](double alpha) {
    LineSearchResult r;
    r.alpha = alpha;
    r.x = point(alpha);
    r.eval = objective(r.x);
    ++evals;
    if (r.eval.f <= f0 + kC1 * alpha * slope0 &&
        (!best.ok || r.eval.f < best.eval.f)) {
      best = r;
      best.ok = true;
    }
    return r;
  };

  auto zoom = [&](double lo, double f_lo, double g_lo, double hi, double f_hi,
                  double g_hi) -> LineSearchResult {
    while (evals < max_evals) {
      const double alpha = interpolate(lo, f_lo, g_lo, hi, f_hi, g_hi);
      LineSearchResult r = try_alpha(alpha);
      const double slope = r.eval.g.dot(p);
      if (r.eval.f > f0 + kC1 * alpha * slope0 || r.eval.f >= f_lo) {
        hi = alpha;
        f_hi = r.eval.f;
        g_hi = slope;
      } else {
        if (std::abs(slope) <= -kC2 * slope0) {
          r.ok = true;
          return r;
        }
        if (slope * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
          g_hi = g_lo;
        }
        lo = alpha;
        f_lo = r.eval.f;
        g_lo = slope;
      }
      if (std::abs(hi - lo) <= 1e-14 * std::max(1.0, std::abs(lo))) break;
    }
    return best;
  };

  double prev_alpha = 0.0;
  double prev_f = f0;
  double prev_slope = slope0;
  double alpha = std::min(alpha0, alpha_max);
  while (evals < max_evals) {
    LineSearchResult r = try_alpha(alpha);
    if (!std::isfinite(r.eval.f)) {
      // Infeasible probe: shrink toward the last good point.
      return zoom(prev_alpha, prev_f, prev_slope, alpha, kInf, 0.0);
    }
    const double slope = r.eval.g.dot(p);
    if (r.eval.f > f0 + kC1 * alpha * slope0 || (evals > 1 && r.eval.f >= prev_f)) {
      return zoom(prev_alpha, prev_f, prev_slope, alpha, r.eval.f, slope);
    }
    if (std::abs(slope) <= -kC2 * slope0) {
      r.ok = true;
      return r;
    }
    if (slope >= 0.0) return zoom(alpha, r.eval.f, slope, prev_alpha, prev_f, prev_slope);
    if (alpha >= alpha_max) {
      // Still descending at the edge of the box: accept the edge.
      r.ok = true;
      return r;
    }
    prev_alpha = alpha;
    prev_f = r.eval.f;
    prev_slope = slope;
    alpha = std::min(4.0 * alpha, alpha_max);
  }
  return best;
}

OptimizeResult minimize_single(const ObjectiveFn& eval, std::span<const double> x0,
                               const Box& box, const OptimizeOptions& opts) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  if (box.lower.size() != x0.size() || box.upper.size() != x0.size()) {
    throw std::invalid_argument("box dimension does not match x0");
  }
  if (!box.contains(x0)) throw std::invalid_argument("x0 is outside the box");

  CountingObjective objective(eval);
  VectorXd x = to_eigen(x0);
  Evaluation current = objective(x);
  if (!std::isfinite(current.f)) {
    throw std::runtime_error("objective is not finite at the starting point");
  }

  OptimizeResult result;
  auto pg_norm = [&](const VectorXd& xv, const VectorXd& gv) {
    return projected_gradient_norm({xv.data(), static_cast<std::size_t>(n)},
                                   {gv.data(), static_cast<std::size_t>(n)}, box);
  };
  auto record = [&](int iter) {
    IterationRecord rec;
    rec.iteration = iter;
    rec.f = current.f;
    rec.proj_grad_norm = pg_norm(x, current.g);
    rec.x.assign(x.data(), x.data() + n);
    result.history.push_back(std::move(rec));
  };
  record(0);

  std::deque<std::pair<VectorXd, VectorXd>> pairs;
  result.termination = Termination::MaxIterations;
  int iter = 0;
  bool retried = false;
  while (iter < opts.max_iterations) {
    if (pg_norm(x, current.g) <= opts.tol) {
      result.termination = Termination::ProjectedGradient;
      break;
    }
    const MatrixXd b = bfgs_matrix(pairs, n);
    const CauchyPoint cp = cauchy_point(x, current.g, b, box);
    VectorXd p = subspace_minimum(x, current.g, b, cp, box) - x;
    if (!(current.g.dot(p) < 0.0)) {
      if (pairs.empty()) {
        result.termination = Termination::ProjectedGradient;
        break;
      }
      pairs.clear();
      continue;
    }

    const double alpha_max = max_feasible_step(x, p, box);
    const double alpha0 = pairs.empty() ? std::min(1.0 / p.norm(), alpha_max) : 1.0;
    LineSearchResult ls = strong_wolfe(objective, x, current.f, current.g, p, alpha0,
                                       alpha_max, box, opts.max_line_search_evals);
    if (!ls.ok) {
      if (!retried && !pairs.empty()) {
        retried = true;
        pairs.clear();
        continue;
      }
      result.termination = Termination::LineSearchFailure;
      break;
    }
    retried = false;

    const VectorXd s = ls.x - x;
    const VectorXd y = ls.eval.g - current.g;
    const double f_old = current.f;
    x = ls.x;
    current = std::move(ls.eval);
    ++iter;
    record(iter);

    if (s.dot(y) > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
      pairs.emplace_back(s, y);
      if (static_cast<int>(pairs.size()) > opts.history) pairs.pop_front();
    }
    const double scale = std::max({std::abs(f_old), std::abs(current.f), 1.0});
    if ((f_old - current.f) / scale <= opts.ftol) {
      result.termination = Termination::RelativeDecrease;
      break;
    }
  }

  result.x_best.assign(x.data(), x.data() + n);
  result.f_best = current.f;
  result.grad_norm_proj = pg_norm(x, current.g);
  result.iterations = iter;
  result.function_evals = objective.evals();
  return result;
}

}  // namespace

Box Box::unbounded(std::size_t n) {
  return {std::vector<double>(n, -kInf), std::vector<double>(n, kInf)};
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

void Box::project(std::span<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::ProjectedGradient: return "projected_gradient";
    case Termination::RelativeDecrease: return "relative_decrease";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::LineSearchFailure: return "line_search_failure";
  }
  return "?";
}

double projected_gradient_norm(std::span<const double> x, std::span<const double> g,
                               const Box& box) {
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double projected = std::clamp(x[i] - g[i], box.lower[i], box.upper[i]);
    norm = std::max(norm, std::abs(projected - x[i]));
  }
  return norm;
}

OptimizeResult minimize(const ObjectiveFn& eval, std::span<const double> x0,
                        const Box& box, const OptimizeOptions& opts) {
  if (opts.multi_start <= 1) return minimize_single(eval, x0, box, opts);

  std::mt19937_64 rng(opts.seed);
  std::vector<std::vector<double>> starts{{x0.begin(), x0.end()}};
  for (int s = 1; s < opts.multi_start; ++s) {
    std::vector<double> start(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double lo = std::isfinite(box.lower[i]) ? box.lower[i] : x0[i] - 1.0;
      const double hi = std::isfinite(box.upper[i]) ? box.upper[i] : x0[i] + 1.0;
      start[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    starts.push_back(std::move(start));
  }

  std::vector<std::future<OptimizeResult>> runs;
  for (const auto& start : starts) {
    runs.push_back(std::async(std::launch::async, [&, start] {
      return minimize_single(eval, start, box, opts);
    }));
  }
  // The first start is x0 and must succeed; random starts may be infeasible.
  OptimizeResult best = runs.front().get();
  for (std::size_t s = 1; s < runs.size(); ++s) {
    try {
      OptimizeResult r = runs[s].get();
      best.function_evals += r.function_evals;
      if (r.f_best < best.f_best) {
        r.function_evals = best.function_evals;
        best = std::move(r);
      }
    } catch (const std::runtime_error&) {
    }
  }
  return best;
}

OptimizeResult optimize_controller(const RingConfig& config, const SimState& initial,
                                   const LossConfig& loss, ControllerKind kind,
                                   std::span<const double> x0,
                                   const OptimizeOptions& opts) {
  std::mutex mutex;
  std::map<std::vector<double>, double> speeds;  // iterate -> average speed
  const Horizon window = config.horizon;

  ObjectiveFn eval = [&](std::span<const double> p, std::span<double> grad) {
    RingConfig trial = config;
    trial.controller = {kind, {p.begin(), p.end()}};
    GradientResult r = gradient(trial, initial, loss);
    std::copy(r.gradient.begin(), r.gradient.end(), grad.begin());
    const double speed = average_speed(r.trajectory, window);
    std::lock_guard lock(mutex);
    speeds[trial.controller.params] = speed;
    return r.objective;
  };

  OptimizeResult result = minimize(eval, x0, Box::from(bounds_for(kind)), opts);
  for (auto& rec : result.history) {
    if (auto it = speeds.find(rec.x); it != speeds.end()) rec.avg_speed = it->second;
  }
  return result;
}

void write_history_csv(std::ostream& out, const OptimizeResult& result) {
  out << "iter,F,projected_grad_norm,avg_speed_mps\n";
  for (const auto& rec : result.history) {
    fmt::print(out, "{},{:.12g},{:.6g},{:.9g}\n", rec.iteration, rec.f,
               rec.proj_grad_norm, rec.avg_speed);
  }
}

}  // namespace ringopt
