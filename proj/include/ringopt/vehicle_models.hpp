#pragma once

#include <array>

namespace ringopt {

/// Intelligent Driver Model parameters.
///
/// c1 desired speed (m/s), c2 desired time headway (s), c3 jam distance (m),
/// c4 maximum acceleration (m/s^2), c5 comfortable deceleration (m/s^2).
/// The human-driver defaults are the values used throughout the experiments.
struct IdmParams {
  double c1 = 33.33;
  double c2 = 1.2;
  double c3 = 2.0;
  double c4 = 1.1;
  double c5 = 1.5;

  static constexpr int kSize = 5;

  std::array<double, kSize> to_array() const { return {c1, c2, c3, c4, c5}; }
  static IdmParams from_array(const std::array<double, kSize>& p) {
    return {p[0], p[1], p[2], p[3], p[4]};
  }

  // Throws DomainError unless every parameter is strictly positive.
  void validate() const;
};

// What a car-following law observes about its own vehicle and its leader.
struct CarFollowingInput {
  double ego_speed = 0.0;   // m/s
  double headway = 0.0;     // m, bumper to bumper
  double lead_speed = 0.0;  // m/s
};

// Partial derivatives of an acceleration with respect to its inputs.
struct AccelPartials {
  double d_accel_d_ego_speed = 0.0;
  double d_accel_d_headway = 0.0;
  double d_accel_d_lead_speed = 0.0;
};

/// IDM acceleration
///   a = c4 (1 - (v/c1)^4 - (s*/s)^2),
///   s* = c3 + c2 v + v (v - v_l) / (2 sqrt(c4 c5)).
/// Throws DomainError when headway <= 0.
double idm_accel(const CarFollowingInput& in, const IdmParams& p);

/// Analytic state partials of idm_accel.
AccelPartials idm_partials(const CarFollowingInput& in, const IdmParams& p);

/// Analytic partials of idm_accel with respect to (c1, ..., c5).
std::array<double, IdmParams::kSize> idm_param_partials(
    const CarFollowingInput& in, const IdmParams& p);

/// Headway at which a vehicle and its leader, both at `speed`, keep zero
/// acceleration: (c3 + c2 v) / sqrt(1 - (v/c1)^4). Requires 0 <= speed < c1.
double equilibrium_headway(double speed, const IdmParams& p);

/// Inverse of equilibrium_headway, by bisection on [0, c1). Requires
/// headway > c3; a headway within 1e-12 of c3 maps to 0.
double equilibrium_speed(double headway, const IdmParams& p);

}  // namespace ringopt
