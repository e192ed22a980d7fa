#include "ringopt/controllers.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "ringopt/errors.hpp"

namespace ringopt {

namespace {

void require_headway(double headway) {
  if (!(headway > 0.0)) throw DomainError("non-positive headway (collision state)");
}

void require_size(std::span<const double> p, int n, const char* who) {
  if (static_cast<int>(p.size()) != n) {
    throw std::invalid_argument(std::string(who) + ": expected " +
                                std::to_string(n) + " parameters, got " +
                                std::to_string(p.size()));
  }
}

// Saturates at the actuator limits; inside the limits (boundary included)
// the unclamped derivatives are kept.
bool saturate(ControllerOutput& out) {
  if (out.accel < kAccelMin || out.accel > kAccelMax) {
    out.accel = std::clamp(out.accel, kAccelMin, kAccelMax);
    out.d_accel_d_state = {};
    std::fill(out.d_accel_d_params.begin(), out.d_accel_d_params.end(), 0.0);
    return true;
  }
  return false;
}

// Value with its gradient over (v, s, v_l, r, dx0_1, inc_2, inc_3, d1, d2, d3, k).
enum Var { kV, kS, kVl, kR, kDx1, kInc2, kInc3, kD1, kD2, kD3, kK, kNumVars };
struct Tracked {
  double val = 0.0;
  std::array<double, kNumVars> d{};
};

Tracked variable(double val, Var which) {
  Tracked t{val, {}};
  t.d[which] = 1.0;
  return t;
}

Tracked constant(double val) { return {val, {}}; }

Tracked operator+(const Tracked& a, const Tracked& b) {
  Tracked out{a.val + b.val, {}};
  for (int i = 0; i < kNumVars; ++i) out.d[i] = a.d[i] + b.d[i];
  return out;
}

Tracked operator-(const Tracked& a, const Tracked& b) {
  Tracked out{a.val - b.val, {}};
  for (int i = 0; i < kNumVars; ++i) out.d[i] = a.d[i] - b.d[i];
  return out;
}

Tracked operator*(const Tracked& a, const Tracked& b) {
  Tracked out{a.val * b.val, {}};
  for (int i = 0; i < kNumVars; ++i) out.d[i] = a.d[i] * b.val + a.val * b.d[i];
  return out;
}

Tracked operator/(const Tracked& a, const Tracked& b) {
  Tracked out{a.val / b.val, {}};
  for (int i = 0; i < kNumVars; ++i) {
    out.d[i] = (a.d[i] * b.val - a.val * b.d[i]) / (b.val * b.val);
  }
  return out;
}

// Piecewise selections take the derivative of the active argument; ties go
// to the first argument.
const Tracked& min_of(const Tracked& a, const Tracked& b) { return b.val < a.val ? b : a; }
const Tracked& max_of(const Tracked& a, const Tracked& b) { return b.val > a.val ? b : a; }

struct FsEvaluation {
  Tracked command;
  Tracked accel;
};

FsEvaluation follower_stopper_tracked(const CarFollowingInput& in,
                                      const FollowerStopperParams& p) {
  const Tracked v = variable(in.ego_speed, kV);
  const Tracked s = variable(in.headway, kS);
  const Tracked vl = variable(in.lead_speed, kVl);
  const Tracked r = variable(p.r, kR);
  const Tracked k = variable(p.k, kK);
  const Tracked two = constant(2.0);

  const Tracked dv = min_of(vl - v, constant(0.0));
  const Tracked dv2 = dv * dv;
  const Tracked base1 = variable(p.dx0_1, kDx1);
  const Tracked inc2 = variable(p.inc_2, kInc2);
  const Tracked inc3 = variable(p.inc_3, kInc3);
  const Tracked base2 = base1 + inc2;
  const Tracked base3 = base2 + inc3;
  const Tracked x1 = base1 + dv2 / (two * variable(p.d1, kD1));
  // Bands stay at least inc_2 and inc_3 wide for every dv, even when
  // d1 >= d2 >= d3 does not hold.
  const Tracked x2 = max_of(base2 + dv2 / (two * variable(p.d2, kD2)), x1 + inc2);
  const Tracked x3 = max_of(base3 + dv2 / (two * variable(p.d3, kD3)), x2 + inc3);

  const Tracked v_cap = min_of(max_of(vl, constant(0.0)), r);

  Tracked command;
  if (s.val <= x1.val) {
    command = constant(0.0);
  } else if (s.val <= x2.val) {
    command = v_cap * (s - x1) / (x2 - x1);
  } else if (s.val <= x3.val) {
    command = v_cap + (r - v_cap) * (s - x2) / (x3 - x2);
  } else {
    command = r;
  }
  return {command, k * (command - v)};
}

}  // namespace

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::FollowerStopper: return "fs";
    case ControllerKind::Linear: return "linear";
    case ControllerKind::IdmController: return "idm";
  }
  return "?";
}

ControllerKind parse_controller_kind(std::string_view name) {
  if (name == "fs" || name == "FollowerStopper") return ControllerKind::FollowerStopper;
  if (name == "linear" || name == "Linear") return ControllerKind::Linear;
  if (name == "idm" || name == "IdmController") return ControllerKind::IdmController;
  throw std::invalid_argument("unknown controller '" + std::string(name) +
                              "' (expected fs, linear or idm)");
}

std::vector<double> FollowerStopperParams::to_vector() const {
  return {r, dx0_1, inc_2, inc_3, d1, d2, d3, k};
}

FollowerStopperParams FollowerStopperParams::from_vector(std::span<const double> p) {
  require_size(p, kSize, "FollowerStopperParams");
  return {p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]};
}

std::vector<double> LinearControllerParams::to_vector() const {
  return {k_s, k_v, k_0, v_des, s_ref};
}

LinearControllerParams LinearControllerParams::from_vector(std::span<const double> p) {
  require_size(p, kSize, "LinearControllerParams");
  return {p[0], p[1], p[2], p[3], p[4]};
}

double follower_stopper_command(const CarFollowingInput& in,
                                const FollowerStopperParams& p) {
  require_headway(in.headway);
  return follower_stopper_tracked(in, p).command.val;
}

ControllerOutput follower_stopper_accel(const CarFollowingInput& in,
                                        const FollowerStopperParams& p) {
  require_headway(in.headway);
  const Tracked accel = follower_stopper_tracked(in, p).accel;
  ControllerOutput out;
  out.accel = accel.val;
  out.d_accel_d_state = {accel.d[kV], accel.d[kS], accel.d[kVl]};
  out.d_accel_d_params.assign(accel.d.begin() + kR, accel.d.end());
  saturate(out);
  return out;
}

ControllerOutput linear_controller_accel(const CarFollowingInput& in,
                                         const LinearControllerParams& p) {
  require_headway(in.headway);
  const double gap_error = in.headway - p.s_ref;
  const double rel_speed = in.lead_speed - in.ego_speed;
  const double speed_error = p.v_des - in.ego_speed;
  ControllerOutput out;
  out.accel = p.k_s * gap_error + p.k_v * rel_speed + p.k_0 * speed_error;
  out.d_accel_d_state = {-p.k_v - p.k_0, p.k_s, p.k_v};
  out.d_accel_d_params = {gap_error, rel_speed, speed_error, p.k_0, -p.k_s};
  saturate(out);
  return out;
}

ControllerOutput idm_controller_accel(const CarFollowingInput& in,
                                      const IdmParams& p) {
  ControllerOutput out;
  out.accel = idm_accel(in, p);
  out.d_accel_d_state = idm_partials(in, p);
  const auto dp = idm_param_partials(in, p);
  out.d_accel_d_params.assign(dp.begin(), dp.end());
  saturate(out);
  return out;
}

ControllerOutput evaluate_controller(const ControllerSpec& spec,
                                     const CarFollowingInput& in) {
  switch (spec.kind) {
    case ControllerKind::FollowerStopper:
      return follower_stopper_accel(in, FollowerStopperParams::from_vector(spec.params));
    case ControllerKind::Linear:
      return linear_controller_accel(in, LinearControllerParams::from_vector(spec.params));
    case ControllerKind::IdmController: {
      require_size(spec.params, IdmParams::kSize, "IdmParams");
      const auto& q = spec.params;
      return idm_controller_accel(in, IdmParams{q[0], q[1], q[2], q[3], q[4]});
    }
  }
  throw std::invalid_argument("unknown controller kind");
}

int param_count(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::FollowerStopper: return FollowerStopperParams::kSize;
    case ControllerKind::Linear: return LinearControllerParams::kSize;
    case ControllerKind::IdmController: return IdmParams::kSize;
  }
  return 0;
}

std::vector<std::string> param_names(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::FollowerStopper:
      return {"r", "dx0_1", "inc_2", "inc_3", "d1", "d2", "d3", "k"};
    case ControllerKind::Linear:
      return {"k_s", "k_v", "k_0", "v_des", "s_ref"};
    case ControllerKind::IdmController:
      return {"c1", "c2", "c3", "c4", "c5"};
  }
  return {};
}

std::vector<double> default_params(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::FollowerStopper: return FollowerStopperParams{}.to_vector();
    case ControllerKind::Linear: return LinearControllerParams{}.to_vector();
    case ControllerKind::IdmController: {
      const auto a = IdmParams{}.to_array();
      return {a.begin(), a.end()};
    }
  }
  return {};
}

Bounds bounds_for(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::FollowerStopper:
      //       r     dx0_1 inc_2 inc_3 d1    d2    d3    k
      return {{1.0,  0.5,  0.25, 0.25, 0.1,  0.1,  0.1,  0.05},
              {33.33, 60.0, 60.0, 60.0, 10.0, 10.0, 10.0, 5.0}};
    case ControllerKind::Linear:
      //       k_s  k_v  k_0  v_des  s_ref
      return {{0.0, 0.0, 0.0, 1.0,   1.0},
              {1.0, 5.0, 2.0, 33.33, 100.0}};
    case ControllerKind::IdmController:
      //       c1    c2   c3    c4   c5
      return {{5.0,  0.1, 0.5,  0.1, 0.1},
              {40.0, 5.0, 20.0, 5.0, 10.0}};
  }
  return {};
}

}  // namespace ringopt
