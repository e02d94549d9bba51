#pragma once

#include <array>
#include <string>
#include <vector>

#include "cplan/behavior.hpp"

namespace cplan {

/// Position, speed, acceleration and jerk at one instant.
struct KnotState {
  double s = 0.0;
  double v = 0.0;
  double a = 0.0;
  double j = 0.0;
};

/// Degree-7 polynomial piece matching (s, v, a, j) at both ends.
class SepticSegment {
 public:
  SepticSegment() = default;

  /// Fits over the absolute interval [t0, t1]. Throws std::invalid_argument
  /// when the interval is shorter than 1 ms (the boundary system degenerates).
  static SepticSegment fit(const KnotState& x0, const KnotState& x1, double t0, double t1);

  KnotState eval(double t) const;  // absolute t, clamped to [t0, t1]
  double t_begin() const { return t0_; }
  double t_end() const { return t1_; }

  double squared_jerk_integral() const;
  double squared_jerk_integral(double ta, double tb) const;  // clamped sub-interval

  const std::array<double, 8>& coeffs() const { return c_; }

 private:
  std::array<double, 8> c_{};  // local time theta = t - t0
  double t0_ = 0.0;
  double t1_ = 0.0;
};

/// Convenience form on [0, tf].
SepticSegment fit_septic(const KnotState& x0, const KnotState& xf, double tf);

/// Chain of septic pieces, contiguous in time.
struct ExecutionTrajectory {
  std::vector<SepticSegment> segments;
  std::vector<int> splits;  // behavior knot indices, starts with 0, ends with tau
  double comfort = 0.0;     // integral of squared jerk over the whole chain
  bool fallback = false;

  double t_begin() const { return segments.front().t_begin(); }
  double t_end() const { return segments.back().t_end(); }
  KnotState eval(double t) const;  // clamped to [t_begin, t_end]
  double comfort_between(double ta, double tb) const;
  std::string split_label() const;  // "0-3-10"
};

/// Split sets over knots {0..tau}: depth 1 keeps one free boundary, each
/// extra level splits the leading segment again. Deduplicated, each set
/// sorted ascending, always containing 0 and tau.
std::vector<std::vector<int>> enumerate_split_sets(int tau, int depth);

/// Builds all interpolation candidates for a behavior plan. Every candidate
/// starts at `start` (the actually driven state at the plan's start time)
/// and meets the plan's knots at its split points with zero jerk, which
/// keeps the chain jerk-continuous across pieces; between knots the pieces
/// deviate slightly from the plan's constant-jerk motion.
std::vector<ExecutionTrajectory> generate_candidates(const BehaviorTrajectory& plan,
                                                     const KnotState& start, int depth);

double comfort_cost(const ExecutionTrajectory& traj);

struct Validation {
  bool ok = true;
  std::string reason;
  double t = 0.0;
  double value = 0.0;
};

/// Samples every 'step' seconds plus both segment endpoints. Speed must stay
/// within [v_lo - 1e-6, v_hi + 1e-6] and non-negative, acceleration within
/// [a_min, a_max], and no sample may fall inside a constraint rectangle.
Validation validate_trajectory(const ExecutionTrajectory& traj,
                               const std::vector<SpatioTemporalConstraint>& constraints,
                               double v_lo, double v_hi, double a_min, double a_max,
                               double step = 0.05);

struct Selection {
  ExecutionTrajectory trajectory;
  bool fallback = false;   // nothing valid: the all-direct chain was returned
  int valid_count = 0;
  int chosen_index = -1;
};

/// Lowest comfort cost among valid candidates; ties prefer the earliest
/// first split. With no valid candidate the all-direct interpolation is
/// returned flagged as fallback.
Selection select_best(const std::vector<ExecutionTrajectory>& candidates,
                      const std::vector<SpatioTemporalConstraint>& constraints, double v_lo,
                      double v_hi, double a_min, double a_max);

}  // namespace cplan
