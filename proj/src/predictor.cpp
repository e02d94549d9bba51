#include "cplan/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cplan {

double idm_desired_gap(double v, double dv, const IdmParams& p) {
  double dynamic = v * p.time_headway + v * dv / (2.0 * std::sqrt(p.a_idm * p.b_comf));
  return p.s0 + std::max(0.0, dynamic);
}

IdmResult idm_acceleration(double v, double gap, double dv, const IdmParams& p) {
  IdmResult r;
  double free_term = 1.0 - std::pow(v / p.v_des, p.delta);
  if (!std::isfinite(gap)) {
    r.interaction = 0.0;
    r.a = std::clamp(p.a_idm * free_term, -2.0 * p.b_comf, p.a_idm);
    return r;
  }
  if (gap <= 0.0) {
    r.invalid_gap = true;
    r.interaction = std::numeric_limits<double>::infinity();
    r.a = -2.0 * p.b_comf;
    return r;
  }
  double ratio = idm_desired_gap(v, dv, p) / gap;
  r.interaction = ratio * ratio;
  r.a = std::clamp(p.a_idm * (free_term - r.interaction), -2.0 * p.b_comf, p.a_idm);
  return r;
}

OtherState ca_step(const OtherState& x, double a, double dt) {
  OtherState out;
  double v_end = x.v + a * dt;
  if (v_end < 0.0) {
    if (x.v <= 0.0) return {x.s, 0.0};
    double t_stop = -x.v / a;
    out.s = x.s + x.v * t_stop + 0.5 * a * t_stop * t_stop;
    out.v = 0.0;
    return out;
  }
  out.s = x.s + x.v * dt + 0.5 * a * dt * dt;
  out.v = v_end;
  return out;
}

Rollout free_rollout(const OtherState& x0, const IdmParams& p, int steps, double dt) {
  Rollout r;
  r.states.reserve(steps + 1);
  r.accel.reserve(steps);
  r.states.push_back(x0);
  double inf = std::numeric_limits<double>::infinity();
  for (int k = 0; k < steps; ++k) {
    double a = idm_acceleration(r.states.back().v, inf, 0.0, p).a;
    r.accel.push_back(a);
    r.states.push_back(ca_step(r.states.back(), a, dt));
  }
  return r;
}

double reactive_acceleration(const OtherState& other, double ego_s, double ego_v,
                             const ConflictZone& zone, const IdmParams& p) {
  if (zone.kind != ZoneKind::kMerging || !zone.merge_align) {
    throw std::invalid_argument("reactive_acceleration requires a merging zone");
  }
  double inf = std::numeric_limits<double>::infinity();
  if (ego_s < zone.ego_interval.start) {
    return idm_acceleration(other.v, inf, 0.0, p).a;
  }
  double ego_m = ego_s - zone.merge_align->s_ego;
  double other_m = other.s - zone.merge_align->s_other;
  if (ego_m <= other_m) {
    // other is ahead in the merged frame; the ego is not its leader
    return idm_acceleration(other.v, inf, 0.0, p).a;
  }
  double gap = ego_m - other_m;
  double dv = other.v - ego_v;  // closing speed of the other onto the ego
  return idm_acceleration(other.v, gap, dv, p).a;
}

}  // namespace cplan
