#include "cplan/replan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <stdexcept>

#include "cplan/logging.hpp"
#include "json.hpp"

namespace cplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

WorldState consistency_state(const BehaviorTrajectory& prev_behavior, double t,
                             const std::vector<OtherState>& observed_others) {
  if (t < prev_behavior.start_time - 1e-9 || t > prev_behavior.end_time() + 1e-9) {
    throw std::out_of_range("time outside the previous plan's horizon");
  }
  WorldState w;
  w.ego = prev_behavior.ego_at(t);
  w.others = observed_others;
  return w;
}

namespace {

struct Pool {
  bool has_plan = false;
  BehaviorTrajectory behavior;
  Selection sel;
};

Pool run_pool(const WorldState& init, const PlanningContext& ctx, const KnotState& start) {
  Pool p;
  PlanResult pr = plan_behavior(init, ctx);
  if (!pr.trajectory) return p;
  p.has_plan = true;
  p.behavior = std::move(*pr.trajectory);
  auto candidates = generate_candidates(p.behavior, start, ctx.cfg.recursion_depth);
  p.sel = select_best(candidates, ctx.constraints, p.behavior.v_lo(), p.behavior.v_hi(),
                      ctx.cfg.a_min, ctx.cfg.a_max);
  return p;
}

// Max-braking chain: ramp the acceleration to a_min within the jerk window
// and hold until standstill. Last-resort output when no plan exists.
void emergency_chain(const KnotState& start, double t, const PlannerConfig& cfg,
                     ReplanResult& out) {
  BehaviorTrajectory B;
  B.start_time = t;
  B.dt = cfg.dt;
  WorldState w;
  w.ego = {start.s, start.v, start.a};
  B.states.push_back(w);
  for (int k = 0; k < cfg.horizon_steps; ++k) {
    double a_next = std::max(cfg.a_min, w.ego.a - cfg.da_max);
    if (w.ego.v <= 1e-12) a_next = 0.0;
    w.ego = cj_step(w.ego, a_next, cfg.dt);
    B.states.push_back(w);
    B.actions.push_back(a_next);
    B.costs.push_back({});
  }
  auto candidates = generate_candidates(B, start, 1);
  size_t direct = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].splits.size() > candidates[direct].splits.size()) direct = i;
  }
  out.behavior = std::move(B);
  out.trajectory = std::move(candidates[direct]);
  out.trajectory.fallback = true;
  out.source = "emergency";
  out.fallback = true;
  out.emergency = true;
}

}  // namespace

ReplanResult replan(double t, const KnotState& ego_exec, const std::vector<OtherState>& others,
                    const BehaviorTrajectory* prev_behavior, const ScenarioConfig& scenario,
                    const PlannerConfig& cfg, const CostWeights& weights) {
  WorldState restart_init;
  restart_init.ego = {ego_exec.s, ego_exec.v, ego_exec.a};
  restart_init.others = others;

  PlanningContext ctx = make_planning_context(restart_init, scenario, cfg, weights, {}, t);

  std::optional<WorldState> cons_init;
  if (prev_behavior && t >= prev_behavior->start_time - 1e-9 &&
      t <= prev_behavior->end_time() + 1e-9) {
    cons_init = consistency_state(*prev_behavior, t, others);
  }

  auto restart_future =
      std::async(std::launch::async, [&] { return run_pool(restart_init, ctx, ego_exec); });
  Pool cons;
  if (cons_init) cons = run_pool(*cons_init, ctx, ego_exec);
  Pool rest = restart_future.get();

  ReplanResult out;
  out.constraints = ctx.constraints;
  bool cons_valid = cons.has_plan && !cons.sel.fallback;
  bool rest_valid = rest.has_plan && !rest.sel.fallback;
  out.consistency_comfort = cons_valid ? cons.sel.trajectory.comfort : kInf;
  out.restart_comfort = rest_valid ? rest.sel.trajectory.comfort : kInf;

  if (cons_valid && (!rest_valid || cons.sel.trajectory.comfort <= rest.sel.trajectory.comfort)) {
    out.trajectory = std::move(cons.sel.trajectory);
    out.behavior = std::move(cons.behavior);
    out.source = "consistency";
  } else if (rest_valid) {
    out.trajectory = std::move(rest.sel.trajectory);
    out.behavior = std::move(rest.behavior);
    out.source = "restart";
  } else if (rest.has_plan || cons.has_plan) {
    // plans exist but nothing validated: drive the flagged direct chain
    Pool& pick = rest.has_plan ? rest : cons;
    out.trajectory = std::move(pick.sel.trajectory);
    out.behavior = std::move(pick.behavior);
    out.source = rest.has_plan ? "restart" : "consistency";
    out.fallback = true;
  } else {
    emergency_chain(ego_exec, t, cfg, out);
    logging::info("replan: no feasible behavior plan at t=" + std::to_string(t) +
                  ", emergency braking");
  }
  return out;
}

SimulationLog simulate(const ScenarioConfig& scenario, double duration, const PlannerConfig& cfg,
                       const CostWeights& weights) {
  if (duration <= 0.0) throw std::invalid_argument("duration must be positive");
  SimulationLog log;
  log.scenario_id = scenario.name;
  log.tick_dt = 1.0 / cfg.replan_hz;
  log.duration = duration;

  const int m = scenario.other_count();
  const VehicleSpec& ego0 = scenario.ego();
  std::optional<BehaviorTrajectory> prev_b;
  std::optional<ExecutionTrajectory> prev_exec;

  for (int tick = 0;; ++tick) {
    double t = tick * log.tick_dt;
    if (t > duration + 1e-9) break;

    std::vector<OtherState> others(m);
    for (int i = 0; i < m; ++i) {
      const VehicleSpec& o = scenario.other(i);
      others[i] = {o.s + o.v * t, o.v};
    }
    KnotState ego = prev_exec ? prev_exec->eval(t) : KnotState{ego0.s, ego0.v, ego0.a, 0.0};

    if (ego.s >= cfg.goal_s) {
      log.reached_goal = true;
      log.goal_time = t;
      break;
    }

    auto clock_start = std::chrono::steady_clock::now();
    ReplanResult r = replan(t, ego, others, prev_b ? &*prev_b : nullptr, scenario, cfg, weights);
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          clock_start)
                    .count();

    TickRecord rec;
    rec.tick = tick;
    rec.sim_time = t;
    rec.plan_ms = ms;
    rec.source = r.source;
    rec.fallback = r.fallback;
    rec.emergency = r.emergency;
    rec.ego = ego;
    rec.others = std::move(others);
    rec.candidate = r.trajectory.split_label();
    rec.comfort = r.trajectory.comfort;
    rec.interaction = r.behavior.costs.empty() ? 0.0 : r.behavior.costs.front().interaction;
    rec.behavior = r.behavior;
    rec.constraints = r.constraints;
    rec.execution = r.trajectory;
    log.ticks.push_back(std::move(rec));

    if (logging::enabled(logging::Level::kDebug)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "tick %d t=%.2f source=%s candidate=%s J_ex=%.4f", tick, t,
                    r.source.c_str(), log.ticks.back().candidate.c_str(), r.trajectory.comfort);
      logging::debug(buf);
    }

    prev_b = std::move(r.behavior);
    prev_exec = std::move(r.trajectory);
  }
  return log;
}

SimulationLog simulate(const ScenarioConfig& scenario, double duration) {
  return simulate(scenario, duration, scenario.planner, scenario.weights);
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace

void write_csv(const SimulationLog& log, std::ostream& os) {
  os << "tick,sim_t,plan_ms,source,fallback,ego_s,ego_v,ego_a,ego_j";
  size_t m = log.ticks.empty() ? 0 : log.ticks.front().others.size();
  for (size_t i = 0; i < m; ++i) os << ",veh" << i << "_s,veh" << i << "_v";
  os << "\n";
  for (const auto& r : log.ticks) {
    os << r.tick << ',' << fmt(r.sim_time) << ',' << fmt(r.plan_ms) << ',' << r.source << ','
       << (r.fallback ? 1 : 0) << ',' << fmt(r.ego.s) << ',' << fmt(r.ego.v) << ','
       << fmt(r.ego.a) << ',' << fmt(r.ego.j);
    for (const auto& o : r.others) os << ',' << fmt(o.s) << ',' << fmt(o.v);
    os << "\n";
  }
}

std::string log_to_json(const SimulationLog& log, const ScenarioConfig& scenario) {
  using json = nlohmann::ordered_json;
  RunSummary sum = summarize(log, scenario);
  json doc;
  doc["scenario"] = log.scenario_id;
  doc["tick_dt"] = log.tick_dt;
  doc["duration"] = log.duration;
  doc["reached_goal"] = log.reached_goal;
  doc["goal_time"] = log.goal_time;
  doc["summary"] = {{"merge_order", sum.merge_order},
                    {"min_gap", sum.min_gap},
                    {"total_comfort", sum.total_comfort},
                    {"interaction_total", sum.interaction_total},
                    {"mean_plan_ms", sum.mean_plan_ms},
                    {"p95_plan_ms", sum.p95_plan_ms},
                    {"max_plan_ms", sum.max_plan_ms},
                    {"fallback_count", sum.fallback_count},
                    {"emergency_count", sum.emergency_count}};
  doc["ticks"] = json::array();
  for (const auto& r : log.ticks) {
    json jt;
    jt["tick"] = r.tick;
    jt["t"] = r.sim_time;
    jt["plan_ms"] = r.plan_ms;
    jt["source"] = r.source;
    jt["fallback"] = r.fallback;
    jt["emergency"] = r.emergency;
    jt["candidate"] = r.candidate;
    jt["comfort"] = r.comfort;
    jt["interaction"] = r.interaction;
    jt["ego"] = {{"s", r.ego.s}, {"v", r.ego.v}, {"a", r.ego.a}, {"j", r.ego.j}};
    jt["others"] = json::array();
    for (const auto& o : r.others) jt["others"].push_back({o.s, o.v});
    jt["constraints"] = json::array();
    for (const auto& c : r.constraints) {
      jt["constraints"].push_back({c.t_start, c.t_end, c.s_start, c.s_end});
    }
    json jb;
    jb["start_time"] = r.behavior.start_time;
    jb["dt"] = r.behavior.dt;
    jb["total_cost"] = r.behavior.total_cost;
    jb["states"] = json::array();
    for (const auto& w : r.behavior.states) {
      jb["states"].push_back({w.ego.s, w.ego.v, w.ego.a});
    }
    jb["actions"] = r.behavior.actions;
    jb["costs"] = json::array();
    for (const auto& c : r.behavior.costs) {
      jb["costs"].push_back({{"follow", c.follow},
                             {"velocity", c.velocity},
                             {"jerk", c.jerk},
                             {"interaction", c.interaction}});
    }
    jt["behavior"] = std::move(jb);
    doc["ticks"].push_back(std::move(jt));
  }
  return doc.dump(2);
}

RunSummary summarize(const SimulationLog& log, const ScenarioConfig& scenario) {
  RunSummary s;
  s.scenario_id = log.scenario_id;
  s.reached_goal = log.reached_goal;
  s.goal_time = log.goal_time;
  s.merge_order = "none";
  s.min_gap = kInf;
  if (log.ticks.empty()) {
    s.min_gap = 0.0;
    return s;
  }

  std::vector<double> times;
  times.reserve(log.ticks.size());
  for (const auto& r : log.ticks) {
    times.push_back(r.plan_ms);
    s.mean_plan_ms += r.plan_ms;
    s.max_plan_ms = std::max(s.max_plan_ms, r.plan_ms);
    if (r.fallback) ++s.fallback_count;
    if (r.emergency) ++s.emergency_count;
    s.interaction_total += r.interaction * log.tick_dt;
  }
  s.mean_plan_ms /= static_cast<double>(times.size());
  std::sort(times.begin(), times.end());
  s.p95_plan_ms = times[static_cast<size_t>(std::ceil(0.95 * times.size())) - 1];

  // comfort of the driven motion: each tick's choice is tracked until the next
  for (size_t i = 0; i + 1 < log.ticks.size(); ++i) {
    s.total_comfort += log.ticks[i].execution.comfort_between(log.ticks[i].sim_time,
                                                              log.ticks[i + 1].sim_time);
  }

  // merge metrics against the first merging zone
  const ConflictZone* mz = nullptr;
  for (const auto& z : scenario.zones) {
    if (z.kind == ZoneKind::kMerging) {
      mz = &z;
      break;
    }
  }
  if (!mz) {
    if (!std::isfinite(s.min_gap)) s.min_gap = 0.0;
    return s;
  }
  const MergeAlign& al = *mz->merge_align;
  const VehicleSpec& ospec = scenario.other(mz->other_index);

  double t_other = kInf;
  if (ospec.s >= al.s_other) {
    t_other = 0.0;
  } else if (ospec.v > 0.0) {
    t_other = (al.s_other - ospec.s) / ospec.v;
  }

  double t_ego = kInf;
  for (size_t i = 0; i + 1 < log.ticks.size() && t_ego == kInf; ++i) {
    const auto& piece = log.ticks[i].execution;
    double lo = log.ticks[i].sim_time;
    double hi = log.ticks[i + 1].sim_time;
    if (piece.eval(hi).s < al.s_ego) continue;
    if (piece.eval(lo).s >= al.s_ego) {
      t_ego = lo;
      break;
    }
    for (int it = 0; it < 60; ++it) {  // bisect the crossing inside the piece
      double mid = 0.5 * (lo + hi);
      (piece.eval(mid).s < al.s_ego ? lo : hi) = mid;
    }
    t_ego = 0.5 * (lo + hi);
  }
  if (t_ego < kInf || t_other < kInf) {
    if (t_ego < t_other) {
      s.merge_order = "ego-first";
    } else if (t_other < t_ego) {
      s.merge_order = "other-first";
    }
  }

  // merged-frame separation while both are past the junction, sampled densely
  for (size_t i = 0; i + 1 < log.ticks.size(); ++i) {
    const auto& piece = log.ticks[i].execution;
    double t1 = log.ticks[i + 1].sim_time;
    for (double t = log.ticks[i].sim_time; t <= t1 + 1e-9; t += 0.05) {
      double em = piece.eval(t).s - al.s_ego;
      double om = (ospec.s + ospec.v * t) - al.s_other;
      if (em >= 0.0 && om >= 0.0) s.min_gap = std::min(s.min_gap, std::fabs(em - om));
    }
  }
  if (!std::isfinite(s.min_gap)) s.min_gap = 0.0;
  return s;
}

}  // namespace cplan
