#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cplan/trajectory.hpp"

namespace cplan {

/// Predicted ego state on the previous behavior trajectory at time t (CJ
/// closed form between knots, exact knot states on knots), combined with
/// freshly observed other-vehicle states. Throws std::out_of_range when t
/// lies outside the previous plan's horizon.
WorldState consistency_state(const BehaviorTrajectory& prev_behavior, double t,
                             const std::vector<OtherState>& observed_others);

struct ReplanResult {
  ExecutionTrajectory trajectory;
  BehaviorTrajectory behavior;
  std::string source;  // "consistency" | "restart" | "emergency"
  bool fallback = false;
  bool emergency = false;
  double consistency_comfort = 0.0;  // best valid J_ex per pool, +inf if none
  double restart_comfort = 0.0;
  std::vector<SpatioTemporalConstraint> constraints;  // active this cycle, absolute time
};

/// One planning cycle at absolute time t. Runs the consistency plan (seeded
/// from prev_behavior when given) and the restart plan concurrently; both
/// candidate pools interpolate from the actually driven state `ego_exec`.
/// The globally best valid candidate wins; exact comfort ties prefer the
/// consistency plan. With no behavior plan at all an emergency-brake chain
/// is returned.
ReplanResult replan(double t, const KnotState& ego_exec, const std::vector<OtherState>& others,
                    const BehaviorTrajectory* prev_behavior, const ScenarioConfig& scenario,
                    const PlannerConfig& cfg, const CostWeights& weights);

struct TickRecord {
  int tick = 0;
  double sim_time = 0.0;
  double plan_ms = 0.0;
  std::string source;
  bool fallback = false;
  bool emergency = false;
  KnotState ego;                    // driven state at the tick instant
  std::vector<OtherState> others;   // ground-truth observation
  std::string candidate;            // split label of the chosen trajectory
  double comfort = 0.0;             // J_ex of the chosen trajectory
  double interaction = 0.0;         // courtesy term of the plan's first step
  BehaviorTrajectory behavior;
  ExecutionTrajectory execution;    // the trajectory tracked until the next tick
  std::vector<SpatioTemporalConstraint> constraints;
};

struct SimulationLog {
  std::string scenario_id;
  double tick_dt = 0.2;
  double duration = 0.0;
  bool reached_goal = false;
  double goal_time = 0.0;
  std::vector<TickRecord> ticks;
};

/// Fixed-frequency closed loop: the ego tracks the latest chosen trajectory
/// exactly between ticks, others advance at constant velocity (ground truth
/// deliberately differs from the IDM prediction model). Ends at `duration`
/// or once the ego passes cfg.goal_s.
SimulationLog simulate(const ScenarioConfig& scenario, double duration, const PlannerConfig& cfg,
                       const CostWeights& weights);
SimulationLog simulate(const ScenarioConfig& scenario, double duration);

/// CSV export: header tick,sim_t,plan_ms,source,fallback,ego_s,ego_v,ego_a,
/// ego_j,veh<i>_s,veh<i>_v,... with one row per tick.
void write_csv(const SimulationLog& log, std::ostream& os);

/// JSON sidecar with per-tick behavior snapshots and cost breakdowns.
std::string log_to_json(const SimulationLog& log, const ScenarioConfig& scenario);

struct RunSummary {
  std::string scenario_id;
  std::string merge_order;  // "ego-first" | "other-first" | "none"
  double min_gap = 0.0;     // merged-frame separation while both are merged
  double total_comfort = 0.0;  // squared-jerk integral of the driven motion
  double interaction_total = 0.0;  // time-integrated courtesy term
  double mean_plan_ms = 0.0;
  double p95_plan_ms = 0.0;
  double max_plan_ms = 0.0;
  int fallback_count = 0;
  int emergency_count = 0;
  bool reached_goal = false;
  double goal_time = 0.0;
};

RunSummary summarize(const SimulationLog& log, const ScenarioConfig& scenario);

}  // namespace cplan
