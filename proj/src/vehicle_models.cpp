#include "ringopt/vehicle_models.hpp"

#include <cmath>
#include <string>

#include "ringopt/errors.hpp"

namespace ringopt {

namespace {

void require_headway(double headway) {
  if (!(headway > 0.0)) {
    throw DomainError("non-positive headway " + std::to_string(headway) +
                      " (collision state)");
  }
}

double desired_gap(const CarFollowingInput& in, const IdmParams& p) {
  return p.c3 + p.c2 * in.ego_speed +
         in.ego_speed * (in.ego_speed - in.lead_speed) /
             (2.0 * std::sqrt(p.c4 * p.c5));
}

}  // namespace

void IdmParams::validate() const {
  if (!(c1 > 0 && c2 > 0 && c3 > 0 && c4 > 0 && c5 > 0)) {
    throw DomainError("IDM parameters must be strictly positive");
  }
}

double idm_accel(const CarFollowingInput& in, const IdmParams& p) {
  require_headway(in.headway);
  const double gap_ratio = desired_gap(in, p) / in.headway;
  const double speed_ratio = in.ego_speed / p.c1;
  const double speed_ratio2 = speed_ratio * speed_ratio;
  return p.c4 * (1.0 - speed_ratio2 * speed_ratio2 - gap_ratio * gap_ratio);
}

AccelPartials idm_partials(const CarFollowingInput& in, const IdmParams& p) {
  require_headway(in.headway);
  const double v = in.ego_speed;
  const double s = in.headway;
  const double root = 2.0 * std::sqrt(p.c4 * p.c5);
  const double s_star = desired_gap(in, p);
  // da/ds* = -2 c4 s* / s^2
  const double d_a_d_sstar = -2.0 * p.c4 * s_star / (s * s);
  const double c1_4 = p.c1 * p.c1 * p.c1 * p.c1;

  AccelPartials out;
  out.d_accel_d_ego_speed = -4.0 * p.c4 * v * v * v / c1_4 +
                            d_a_d_sstar * (p.c2 + (2.0 * v - in.lead_speed) / root);
  out.d_accel_d_headway = 2.0 * p.c4 * s_star * s_star / (s * s * s);
  out.d_accel_d_lead_speed = d_a_d_sstar * (-v / root);
  return out;
}

std::array<double, IdmParams::kSize> idm_param_partials(
    const CarFollowingInput& in, const IdmParams& p) {
  require_headway(in.headway);
  const double v = in.ego_speed;
  const double s = in.headway;
  const double sqrt45 = std::sqrt(p.c4 * p.c5);
  const double s_star = desired_gap(in, p);
  const double d_a_d_sstar = -2.0 * p.c4 * s_star / (s * s);
  const double speed_ratio = v / p.c1;
  const double speed_ratio4 = speed_ratio * speed_ratio * speed_ratio * speed_ratio;
  const double gap_ratio = s_star / s;
  // d/dc of v (v - v_l) / (2 sqrt(c4 c5)) for c = c4, c5
  const double interaction = v * (v - in.lead_speed);
  const double d_sstar_d_c4 = -interaction / (4.0 * p.c4 * sqrt45);
  const double d_sstar_d_c5 = -interaction / (4.0 * p.c5 * sqrt45);

  return {
      4.0 * p.c4 * speed_ratio4 / p.c1,
      d_a_d_sstar * v,
      d_a_d_sstar,
      (1.0 - speed_ratio4 - gap_ratio * gap_ratio) + d_a_d_sstar * d_sstar_d_c4,
      d_a_d_sstar * d_sstar_d_c5,
  };
}

double equilibrium_headway(double speed, const IdmParams& p) {
  if (!(speed >= 0.0 && speed < p.c1)) {
    throw DomainError("no IDM equilibrium for speed " + std::to_string(speed));
  }
  const double r = speed / p.c1;
  return (p.c3 + p.c2 * speed) / std::sqrt(1.0 - r * r * r * r);
}

double equilibrium_speed(double headway, const IdmParams& p) {
  constexpr double kJamSlack = 1e-12;
  if (headway <= p.c3 - kJamSlack || !std::isfinite(headway)) {
    throw DomainError("headway " + std::to_string(headway) +
                      " is not above the jam distance");
  }
  if (headway <= p.c3 + kJamSlack) return 0.0;
  // equilibrium_headway is increasing on [0, c1) and diverges at c1.
  double lo = 0.0;
  double hi = p.c1;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * p.c1; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (equilibrium_headway(mid, p) < headway) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace ringopt
