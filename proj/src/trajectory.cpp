#include "cplan/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

namespace cplan {

SepticSegment SepticSegment::fit(const KnotState& x0, const KnotState& x1, double t0, double t1) {
  const double T = t1 - t0;
  if (T <= 0.0) throw std::invalid_argument("segment duration must be positive");
  if (T < 1e-3) throw std::invalid_argument("degenerate segment duration (< 1 ms)");

  SepticSegment seg;
  seg.t0_ = t0;
  seg.t1_ = t1;
  auto& c = seg.c_;
  c[0] = x0.s;
  c[1] = x0.v;
  c[2] = x0.a / 2.0;
  c[3] = x0.j / 6.0;

  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T, T7 = T6 * T;
  Eigen::Matrix4d M2;
  M2 << T4, T5, T6, T7,
      4 * T3, 5 * T4, 6 * T5, 7 * T6,
      12 * T2, 20 * T3, 30 * T4, 42 * T5,
      24 * T, 60 * T2, 120 * T3, 210 * T4;
  Eigen::Vector4d rhs;
  rhs << x1.s - (c[0] + c[1] * T + c[2] * T2 + c[3] * T3),
      x1.v - (c[1] + 2.0 * c[2] * T + 3.0 * c[3] * T2),
      x1.a - (2.0 * c[2] + 6.0 * c[3] * T),
      x1.j - 6.0 * c[3];
  Eigen::Vector4d hi = M2.partialPivLu().solve(rhs);
  c[4] = hi[0];
  c[5] = hi[1];
  c[6] = hi[2];
  c[7] = hi[3];
  return seg;
}

SepticSegment fit_septic(const KnotState& x0, const KnotState& xf, double tf) {
  return SepticSegment::fit(x0, xf, 0.0, tf);
}

KnotState SepticSegment::eval(double t) const {
  const double th = std::clamp(t - t0_, 0.0, t1_ - t0_);
  const auto& c = c_;
  KnotState x;
  x.s = ((((((c[7] * th + c[6]) * th + c[5]) * th + c[4]) * th + c[3]) * th + c[2]) * th + c[1]) *
            th + c[0];
  x.v = (((((7 * c[7] * th + 6 * c[6]) * th + 5 * c[5]) * th + 4 * c[4]) * th + 3 * c[3]) * th +
         2 * c[2]) * th + c[1];
  x.a = ((((42 * c[7] * th + 30 * c[6]) * th + 20 * c[5]) * th + 12 * c[4]) * th + 6 * c[3]) * th +
        2 * c[2];
  x.j = (((210 * c[7] * th + 120 * c[6]) * th + 60 * c[5]) * th + 24 * c[4]) * th + 6 * c[3];
  return x;
}

double SepticSegment::squared_jerk_integral(double ta, double tb) const {
  double lo = std::clamp(ta - t0_, 0.0, t1_ - t0_);
  double hi = std::clamp(tb - t0_, 0.0, t1_ - t0_);
  if (hi <= lo) return 0.0;
  // jerk is a quartic; its square integrates in closed form
  const double b[5] = {6 * c_[3], 24 * c_[4], 60 * c_[5], 120 * c_[6], 210 * c_[7]};
  auto antiderivative = [&](double x) {
    double total = 0.0;
    double xi = x;  // x^(i+j+1) built incrementally
    for (int i = 0; i < 5; ++i) {
      double xij = xi;
      for (int j = 0; j < 5; ++j) {
        total += b[i] * b[j] * xij / static_cast<double>(i + j + 1);
        xij *= x;
      }
      xi *= x;
    }
    return total;
  };
  return antiderivative(hi) - antiderivative(lo);
}

double SepticSegment::squared_jerk_integral() const {
  return squared_jerk_integral(t0_, t1_);
}

KnotState ExecutionTrajectory::eval(double t) const {
  const double tc = std::clamp(t, t_begin(), t_end());
  for (const auto& seg : segments) {
    if (tc <= seg.t_end() + 1e-12) return seg.eval(tc);
  }
  return segments.back().eval(tc);
}

double ExecutionTrajectory::comfort_between(double ta, double tb) const {
  double total = 0.0;
  for (const auto& seg : segments) total += seg.squared_jerk_integral(ta, tb);
  return total;
}

std::string ExecutionTrajectory::split_label() const {
  std::string out;
  for (size_t i = 0; i < splits.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(splits[i]);
  }
  return out;
}

namespace {

// Suffix split sets starting at knot s: depth 0 keeps every knot (all
// direct pieces), each level frees the first boundary choice.
void enum_suffix(int s, int tau, int depth, std::vector<int>& prefix,
                 std::set<std::vector<int>>& out) {
  if (s == tau) {
    prefix.push_back(tau);
    out.insert(prefix);
    prefix.pop_back();
    return;
  }
  if (depth == 0) {
    size_t mark = prefix.size();
    for (int i = s; i <= tau; ++i) prefix.push_back(i);
    out.insert(prefix);
    prefix.resize(mark);
    return;
  }
  prefix.push_back(s);
  for (int k = s + 1; k <= tau; ++k) {
    enum_suffix(k, tau, depth - 1, prefix, out);
  }
  prefix.pop_back();
}

}  // namespace

std::vector<std::vector<int>> enumerate_split_sets(int tau, int depth) {
  if (tau < 1) throw std::invalid_argument("need at least one step");
  if (depth < 1) throw std::invalid_argument("recursion depth must be at least 1");
  std::set<std::vector<int>> dedup;
  std::vector<int> prefix;
  enum_suffix(0, tau, depth, prefix, dedup);
  return {dedup.begin(), dedup.end()};
}

std::vector<ExecutionTrajectory> generate_candidates(const BehaviorTrajectory& plan,
                                                     const KnotState& start, int depth) {
  const int tau = plan.steps();
  if (tau < 1) throw std::invalid_argument("behavior plan needs at least two states");

  // Plan knots are position/velocity/acceleration states; the interpolation
  // augments them with zero jerk, so adjacent pieces share their boundary
  // state and the chain stays jerk-continuous at every split knot. Only the
  // first knot differs: it carries the actually executing jerk handed over
  // by the caller.
  auto knot_at = [&](int i) -> KnotState {
    if (i == 0) return start;
    const EgoState& e = plan.states[i].ego;
    return {e.s, e.v, e.a, 0.0};
  };

  std::vector<ExecutionTrajectory> out;
  for (const auto& sp : enumerate_split_sets(tau, depth)) {
    ExecutionTrajectory traj;
    traj.splits = sp;
    for (size_t i = 0; i + 1 < sp.size(); ++i) {
      traj.segments.push_back(SepticSegment::fit(knot_at(sp[i]), knot_at(sp[i + 1]),
                                                 plan.knot_time(sp[i]), plan.knot_time(sp[i + 1])));
    }
    traj.comfort = comfort_cost(traj);
    out.push_back(std::move(traj));
  }
  return out;
}

double comfort_cost(const ExecutionTrajectory& traj) {
  double total = 0.0;
  for (const auto& seg : traj.segments) total += seg.squared_jerk_integral();
  return total;
}

Validation validate_trajectory(const ExecutionTrajectory& traj,
                               const std::vector<SpatioTemporalConstraint>& constraints,
                               double v_lo, double v_hi, double a_min, double a_max, double step) {
  auto check = [&](double t) -> Validation {
    KnotState x = traj.eval(t);
    if (x.v > v_hi + 1e-6) return {false, "velocity overshoot", t, x.v};
    if (x.v < v_lo - 1e-6 || x.v < -1e-6) return {false, "velocity undershoot", t, x.v};
    if (x.a > a_max + 1e-9 || x.a < a_min - 1e-9) return {false, "acceleration bound", t, x.a};
    for (const auto& c : constraints) {
      if (c.contains(t, x.s)) return {false, "constraint rectangle", t, x.s};
    }
    return {};
  };

  for (const auto& seg : traj.segments) {
    for (double t = seg.t_begin(); t < seg.t_end() - 1e-12; t += step) {
      Validation v = check(t);
      if (!v.ok) return v;
    }
    Validation v = check(seg.t_end());
    if (!v.ok) return v;
  }
  return {};
}

Selection select_best(const std::vector<ExecutionTrajectory>& candidates,
                      const std::vector<SpatioTemporalConstraint>& constraints, double v_lo,
                      double v_hi, double a_min, double a_max) {
  if (candidates.empty()) throw std::invalid_argument("no candidates");
  Selection sel;
  int direct = -1;
  size_t most_knots = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    if (cand.splits.size() > most_knots) {
      most_knots = cand.splits.size();
      direct = static_cast<int>(i);
    }
    Validation v = validate_trajectory(cand, constraints, v_lo, v_hi, a_min, a_max);
    if (!v.ok) continue;
    ++sel.valid_count;
    if (sel.chosen_index < 0 || cand.comfort < candidates[sel.chosen_index].comfort) {
      sel.chosen_index = static_cast<int>(i);
    }
  }
  if (sel.chosen_index >= 0) {
    sel.trajectory = candidates[sel.chosen_index];
    return sel;
  }
  // nothing valid: fall back to the all-direct chain (always enumerated)
  sel.fallback = true;
  sel.chosen_index = direct;
  sel.trajectory = candidates[direct];
  sel.trajectory.fallback = true;
  return sel;
}

}  // namespace cplan
