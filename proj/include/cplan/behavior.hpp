#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cplan/predictor.hpp"
#include "cplan/scenario.hpp"

namespace cplan {

struct EgoState {
  double s = 0.0;
  double v = 0.0;
  double a = 0.0;
};

struct WorldState {
  EgoState ego;
  std::vector<OtherState> others;  // aligned with ScenarioConfig::other_indices
};

/// Constant-jerk transition: jerk (a_next - a) / dt is held over the step.
/// A zero crossing of v inside the step clamps the state to standstill
/// (s_stop, 0, 0); speed never goes negative.
EgoState cj_step(const EgoState& x, double a_next, double dt);

/// State along a constant-jerk step at local time theta in [0, dt].
/// cj_eval(x, a, dt, dt) == cj_step(x, a, dt).
EgoState cj_eval(const EgoState& x, double a_next, double dt, double theta);

struct CostTerms {
  double follow = 0.0;
  double velocity = 0.0;
  double jerk = 0.0;
  double interaction = 0.0;
  double weighted(const CostWeights& w) const {
    return w.follow * follow + w.velocity * velocity + w.jerk * jerk +
           w.interaction * interaction;
  }
};

/// Normal and ego-conditioned acceleration of one other vehicle along a
/// behavior plan, one entry per step.
struct InteractionPrediction {
  std::vector<double> a_norm;
  std::vector<double> a_inter;
};

struct BehaviorTrajectory {
  double start_time = 0.0;
  double dt = 1.0;
  std::vector<WorldState> states;  // horizon_steps + 1 knots
  std::vector<double> actions;     // accel targets, one per step
  std::vector<CostTerms> costs;    // per step
  double total_cost = 0.0;
  std::vector<InteractionPrediction> predictions;  // per other

  int steps() const { return static_cast<int>(actions.size()); }
  double knot_time(int k) const { return start_time + dt * k; }
  double end_time() const { return knot_time(steps()); }
  double jerk_of_step(int k) const { return (actions[k] - states[k].ego.a) / dt; }

  /// Ego state at absolute time t via the constant-jerk closed form,
  /// clamped to the planned interval.
  EgoState ego_at(double t) const;

  double v_lo() const;  // min knot speed
  double v_hi() const;  // max knot speed
};

struct OtherContext {
  const VehicleSpec* spec = nullptr;
  const PathProfile* path = nullptr;
  const ConflictZone* merge_zone = nullptr;  // first merging zone naming this vehicle
  bool on_ego_path = false;
  Rollout norm;  // unimpeded prediction over the horizon
};

/// Everything one planning cycle needs: per-other free rollouts, derived
/// crossing constraints (absolute time base) and the active config.
struct PlanningContext {
  const ScenarioConfig* scenario = nullptr;
  PlannerConfig cfg;
  CostWeights weights;
  double start_time = 0.0;
  const PathProfile* ego_path = nullptr;
  std::vector<OtherContext> others;
  std::vector<SpatioTemporalConstraint> constraints;
};

PlanningContext make_planning_context(const WorldState& initial, const ScenarioConfig& scenario,
                                      const PlannerConfig& cfg, const CostWeights& weights,
                                      std::vector<SpatioTemporalConstraint> extra = {},
                                      double start_time = 0.0);

/// Result of applying one acceleration target to a world state at step
/// k_parent (absolute knot time t_parent). `feasible` is false when the
/// action window, a speed limit, an overlap with a leader, or a constraint
/// rectangle rules the transition out.
struct StepOutcome {
  WorldState child;
  CostTerms terms;
  double weighted = 0.0;
  double jerk = 0.0;
  std::vector<double> a_norm;   // per other
  std::vector<double> a_inter;  // per other
  bool feasible = false;
};

StepOutcome step_world(const WorldState& parent, double t_parent, int k_parent, double a_next,
                       const PlanningContext& ctx);

/// Blocked-rectangle part of the step cost: infinite when the ego knot
/// (t, s) lies inside any active rectangle, otherwise the courtesy sum
/// sum_i |a_norm[i] - a_inter[i]|.
double interaction_cost(double t, double s, const std::vector<double>& a_norm,
                        const std::vector<double>& a_inter,
                        const std::vector<SpatioTemporalConstraint>& constraints);

/// True when every achievable continuation enters a blocked rectangle
/// within the plan horizon: even instant full throttle cannot clear the
/// band before its window opens, and even instant full braking enters it
/// while the window is still open. Used as a 0-or-infinity admissible
/// heuristic; it never prunes a state with a feasible completion.
bool inevitable_violation(const EgoState& ego, double t, const PlanningContext& ctx);

struct PlanResult {
  std::optional<BehaviorTrajectory> trajectory;
  std::string failure;  // set when no trajectory
  int expanded = 0;     // search vertices taken from the open set
};

/// A* over the acceleration lattice. Deterministic: ties on f are broken by
/// larger s, then smaller |jerk|, then insertion order.
PlanResult plan_behavior(const WorldState& initial, const ScenarioConfig& scenario,
                         const PlannerConfig& cfg, const CostWeights& weights,
                         std::vector<SpatioTemporalConstraint> extra = {},
                         double start_time = 0.0);

/// Same search against an existing context (the context does not depend on
/// the ego part of the initial state, so one context can serve several
/// searches within a planning cycle).
PlanResult plan_behavior(const WorldState& initial, const PlanningContext& ctx);

/// Exhaustive enumeration over all action sequences with the identical cost
/// and feasibility model (no search-side pruning). Refuses horizons above 6
/// steps. Intended as a reference for small problems.
PlanResult brute_force_plan(const WorldState& initial, const ScenarioConfig& scenario,
                            const PlannerConfig& cfg, const CostWeights& weights,
                            std::vector<SpatioTemporalConstraint> extra = {},
                            double start_time = 0.0);

PlanResult brute_force_plan(const WorldState& initial, const PlanningContext& ctx);

}  // namespace cplan
