#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ringopt/vehicle_models.hpp"

namespace ringopt {

// Actuator limits applied to every AV controller (humans follow raw IDM).
inline constexpr double kAccelMin = -3.0;
inline constexpr double kAccelMax = 1.5;

enum class ControllerKind { FollowerStopper, Linear, IdmController };

std::string_view to_string(ControllerKind kind);
// Accepts "fs", "linear", "idm" (and the enum names). Throws
// std::invalid_argument otherwise.
ControllerKind parse_controller_kind(std::string_view name);

// Follower Stopper. Band offsets are stored as increments so that the
// ordering dx0_1 <= dx0_2 <= dx0_3 is a box constraint.
struct FollowerStopperParams {
  double r = 15.0;      // commanded speed (m/s)
  double dx0_1 = 4.5;   // m
  double inc_2 = 0.75;  // m, dx0_2 = dx0_1 + inc_2
  double inc_3 = 0.75;  // m, dx0_3 = dx0_2 + inc_3
  double d1 = 1.5;      // m/s^2
  double d2 = 1.0;
  double d3 = 0.5;
  double k = 1.0;       // 1/s, speed-tracking gain

  static constexpr int kSize = 8;
  std::vector<double> to_vector() const;
  static FollowerStopperParams from_vector(std::span<const double> p);
};

// a = k_s (s - s_ref) + k_v (v_l - v) + k_0 (v_des - v), clamped.
struct LinearControllerParams {
  double k_s = 0.1;    // 1/s^2
  double k_v = 1.0;    // 1/s
  double k_0 = 0.3;    // 1/s
  double v_des = 15.0; // m/s
  double s_ref = 47.0; // m

  static constexpr int kSize = 5;
  std::vector<double> to_vector() const;
  static LinearControllerParams from_vector(std::span<const double> p);
};

struct ControllerOutput {
  double accel = 0.0;
  AccelPartials d_accel_d_state;
  std::vector<double> d_accel_d_params;
};

// A controller kind together with its flat parameter vector.
struct ControllerSpec {
  ControllerKind kind = ControllerKind::FollowerStopper;
  std::vector<double> params;
};

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Speed command of the three-band Follower Stopper rule (before the
/// speed-tracking layer).
double follower_stopper_command(const CarFollowingInput& in,
                                const FollowerStopperParams& p);

ControllerOutput follower_stopper_accel(const CarFollowingInput& in,
                                        const FollowerStopperParams& p);
ControllerOutput linear_controller_accel(const CarFollowingInput& in,
                                         const LinearControllerParams& p);
ControllerOutput idm_controller_accel(const CarFollowingInput& in,
                                      const IdmParams& p);

// Dispatches on spec.kind. Throws std::invalid_argument on a parameter
// vector of the wrong length.
ControllerOutput evaluate_controller(const ControllerSpec& spec,
                                     const CarFollowingInput& in);

int param_count(ControllerKind kind);
std::vector<std::string> param_names(ControllerKind kind);
std::vector<double> default_params(ControllerKind kind);

/// Default optimization box for the controller's parameter vector.
Bounds bounds_for(ControllerKind kind);

}  // namespace ringopt
