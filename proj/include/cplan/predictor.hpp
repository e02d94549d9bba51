#pragma once

#include <vector>

#include "cplan/scenario.hpp"

namespace cplan {

/// Desired dynamic gap s*(v, dv): s0 + v*T + v*dv / (2*sqrt(a_idm*b_comf)),
/// floored at s0. dv is the closing speed (follower minus leader).
double idm_desired_gap(double v, double dv, const IdmParams& p);

struct IdmResult {
  double a = 0.0;           // clamped to [-2*b_comf, a_idm]
  double interaction = 0.0; // (s*/gap)^2 term before weighting
  bool invalid_gap = false; // gap <= 0: overlapping vehicles
};

/// Car-following acceleration for a vehicle at speed v with gap `gap` to its
/// leader and closing speed dv. An infinite gap yields the free-road term.
IdmResult idm_acceleration(double v, double gap, double dv, const IdmParams& p);

/// One constant-acceleration step. A zero crossing of v inside the step
/// stops the vehicle at the crossing point; speed never goes negative.
OtherState ca_step(const OtherState& x, double a, double dt);

struct Rollout {
  std::vector<OtherState> states;  // size steps + 1
  std::vector<double> accel;       // accel applied over step k, size steps
};

/// Leaderless IDM rollout: at every step the vehicle applies its free-road
/// IDM acceleration. Speed stays within [0, v_des + eps].
Rollout free_rollout(const OtherState& x0, const IdmParams& p, int steps, double dt);

/// Acceleration a merging vehicle adopts once the ego has entered the zone
/// (ego_s >= ego_interval.start) and leads in the merged frame. Otherwise
/// the vehicle keeps its free-road IDM acceleration. Throws
/// std::invalid_argument for non-merging zones.
double reactive_acceleration(const OtherState& other, double ego_s, double ego_v,
                             const ConflictZone& zone, const IdmParams& p);

}  // namespace cplan
