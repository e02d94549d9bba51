#include "cplan/behavior.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace cplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTiny = 1e-12;

double pos_at(const EgoState& x, double j, double theta) {
  return x.s + x.v * theta + 0.5 * x.a * theta * theta + j * theta * theta * theta / 6.0;
}

// First theta in [0, dt] where speed would cross into negative territory
// under jerk j, +inf when it stays non-negative throughout.
double first_stop(double v0, double a, double j, double dt) {
  if (v0 <= kTiny) {
    if (a < -kTiny) return 0.0;
    if (std::fabs(a) <= kTiny && j < -kTiny) return 0.0;
  }
  if (std::fabs(j) <= kTiny) {
    if (a < -kTiny) {
      double t = -v0 / a;
      if (t <= dt + 1e-12) return std::clamp(t, 0.0, dt);
    }
    return kInf;
  }
  double disc = a * a - 2.0 * j * v0;
  if (j > 0.0) {
    if (disc <= 0.0) return kInf;  // dip stays non-negative
    double r = (-a - std::sqrt(disc)) / j;  // smaller root, downward slope
    if (r >= -1e-12 && r <= dt + 1e-12) return std::clamp(r, 0.0, dt);
    return kInf;
  }
  // j < 0: speed is a downward parabola, crossing at its larger root
  double r = (-a - std::sqrt(disc)) / j;
  if (r >= -1e-12 && r <= dt + 1e-12) return std::clamp(r, 0.0, dt);
  return kInf;
}

}  // namespace

EgoState cj_eval(const EgoState& x, double a_next, double dt, double theta) {
  theta = std::clamp(theta, 0.0, dt);
  double j = (a_next - x.a) / dt;
  double ts = first_stop(x.v, x.a, j, dt);
  if (theta >= ts) {
    return {pos_at(x, j, ts), 0.0, 0.0};
  }
  EgoState out;
  out.s = pos_at(x, j, theta);
  out.v = std::max(0.0, x.v + x.a * theta + 0.5 * j * theta * theta);
  out.a = (theta == dt) ? a_next : x.a + j * theta;
  return out;
}

EgoState cj_step(const EgoState& x, double a_next, double dt) {
  return cj_eval(x, a_next, dt, dt);
}

EgoState BehaviorTrajectory::ego_at(double t) const {
  double span = dt * steps();
  double local = std::clamp(t - start_time, 0.0, span);
  int k = std::min(static_cast<int>(local / dt), steps() - 1);
  double theta = local - dt * k;
  return cj_eval(states[k].ego, actions[k], dt, theta);
}

double BehaviorTrajectory::v_lo() const {
  double lo = kInf;
  for (const auto& w : states) lo = std::min(lo, w.ego.v);
  return lo;
}

double BehaviorTrajectory::v_hi() const {
  double hi = -kInf;
  for (const auto& w : states) hi = std::max(hi, w.ego.v);
  return hi;
}

PlanningContext make_planning_context(const WorldState& initial, const ScenarioConfig& scenario,
                                      const PlannerConfig& cfg, const CostWeights& weights,
                                      std::vector<SpatioTemporalConstraint> extra,
                                      double start_time) {
  PlanningContext ctx;
  ctx.scenario = &scenario;
  ctx.cfg = cfg;
  ctx.weights = weights;
  ctx.start_time = start_time;
  ctx.ego_path = &scenario.path_of(scenario.ego());

  int m = scenario.other_count();
  if (static_cast<int>(initial.others.size()) != m) {
    throw std::invalid_argument("world state does not match scenario vehicle count");
  }
  ctx.others.resize(m);
  for (int i = 0; i < m; ++i) {
    OtherContext& oc = ctx.others[i];
    const VehicleSpec& spec = scenario.other(i);
    oc.spec = &spec;
    oc.path = &scenario.path_of(spec);
    oc.on_ego_path = spec.path_index == scenario.ego().path_index;
    for (const auto& z : scenario.zones) {
      if (z.kind == ZoneKind::kMerging && z.other_index == i) {
        oc.merge_zone = &z;
        break;
      }
    }
    oc.norm = free_rollout(initial.others[i], scenario.idm, cfg.horizon_steps, cfg.dt);
  }

  ctx.constraints = std::move(extra);
  for (const auto& z : scenario.zones) {
    if (z.kind != ZoneKind::kCrossing) continue;
    auto c = derive_crossing_constraint(z, ctx.others[z.other_index].norm.states, cfg.dt, cfg);
    if (c) {
      c->t_start += start_time;
      c->t_end += start_time;
      ctx.constraints.push_back(*c);
    }
  }
  return ctx;
}

namespace {

// Continuous-time sweep of the ego position against a rectangle: with v >= 0
// the position is non-decreasing, so the band is hit iff the position range
// over the overlapping time window touches [s_start, s_end).
bool edge_hits_constraint(const EgoState& ego, double a_next, double t0, double dt,
                          const std::vector<SpatioTemporalConstraint>& cs) {
  for (const auto& c : cs) {
    double lo = std::max(t0, c.t_start);
    double hi = std::min(t0 + dt, c.t_end);
    if (hi <= lo) continue;
    double s_lo = cj_eval(ego, a_next, dt, lo - t0).s;
    if (s_lo >= c.s_end) continue;
    if (s_lo >= c.s_start) return true;
    double s_hi = cj_eval(ego, a_next, dt, hi - t0).s;
    if (s_hi > c.s_start) return true;
  }
  return false;
}

}  // namespace

double interaction_cost(double t, double s, const std::vector<double>& a_norm,
                        const std::vector<double>& a_inter,
                        const std::vector<SpatioTemporalConstraint>& constraints) {
  assert(a_norm.size() == a_inter.size());
  for (const auto& c : constraints) {
    if (c.contains(t, s)) return kInf;
  }
  double sum = 0.0;
  for (size_t i = 0; i < a_norm.size(); ++i) sum += std::fabs(a_norm[i] - a_inter[i]);
  return sum;
}

namespace {

// First T >= 0 with s0 + v T + a T^2 / 2 == target, +inf when unreached.
// Speed clamps at zero under braking, so only the pre-standstill (smaller)
// root counts; no real root means the vehicle stops short.
double first_pos_reach(double s0, double v, double a, double target) {
  if (s0 >= target) return 0.0;
  if (std::fabs(a) <= kTiny) {
    return v > kTiny ? (target - s0) / v : kInf;
  }
  double disc = v * v + 2.0 * a * (target - s0);
  if (disc < 0.0) return kInf;
  double r = (-v + std::sqrt(disc)) / a;
  return r >= 0.0 ? r : kInf;
}

}  // namespace

bool inevitable_violation(const EgoState& ego, double t, const PlanningContext& ctx) {
  const double a_acc = std::max(ctx.cfg.a_max, 0.0);
  const double a_brk = ctx.cfg.a_min;
  const double plan_end = ctx.start_time + ctx.cfg.dt * ctx.cfg.horizon_steps;
  for (const auto& c : ctx.constraints) {
    if (t >= c.t_end) continue;
    if (ego.s >= c.s_end) continue;
    double lead = std::max(0.0, c.t_start - t);
    double reach = ego.s + ego.v * lead + 0.5 * a_acc * lead * lead;
    if (reach >= c.s_end) continue;  // full throttle clears before the window opens
    // Latest possible band entry is under full braking; position under any
    // other input is never behind it. Doomed only when even that entry
    // falls inside the window and inside the plan horizon.
    double enter = first_pos_reach(ego.s, ego.v, a_brk, c.s_start);
    if (enter == kInf) continue;  // can hold short of the band
    double hit = t + enter;
    if (hit < c.t_end && std::max(hit, c.t_start) <= plan_end) return true;
  }
  return false;
}

StepOutcome step_world(const WorldState& parent, double t_parent, int k_parent, double a_next,
                       const PlanningContext& ctx) {
  StepOutcome out;
  const PlannerConfig& cfg = ctx.cfg;
  const double dt = cfg.dt;
  out.jerk = (a_next - parent.ego.a) / dt;
  if (std::fabs(a_next - parent.ego.a) > cfg.da_max + 1e-9) return out;

  out.child.ego = cj_step(parent.ego, a_next, dt);
  const double t_child = t_parent + dt;
  if (out.child.ego.v > speed_limit(*ctx.ego_path, out.child.ego.s, cfg) + 1e-9) return out;
  if (edge_hits_constraint(parent.ego, a_next, t_parent, dt, ctx.constraints)) return out;

  const IdmParams& idm = ctx.scenario->idm;
  const int m = static_cast<int>(ctx.others.size());
  out.child.others.resize(m);
  out.a_norm.resize(m);
  out.a_inter.resize(m);
  for (int i = 0; i < m; ++i) {
    const OtherContext& oc = ctx.others[i];
    double a_norm = k_parent < static_cast<int>(oc.norm.accel.size())
                        ? oc.norm.accel[k_parent]
                        : idm_acceleration(parent.others[i].v, kInf, 0.0, idm).a;
    out.a_norm[i] = a_norm;
    if (oc.merge_zone) {
      double ai = reactive_acceleration(parent.others[i], parent.ego.s, parent.ego.v,
                                        *oc.merge_zone, idm);
      out.a_inter[i] = ai;
      out.child.others[i] = ca_step(parent.others[i], ai, dt);
    } else {
      out.a_inter[i] = a_norm;
      out.child.others[i] = ca_step(parent.others[i], a_norm, dt);
    }
  }

  // hard overlap guards: the ego may not drive through a leader
  for (int i = 0; i < m; ++i) {
    const OtherContext& oc = ctx.others[i];
    if (oc.on_ego_path) {
      bool was_ahead = parent.others[i].s > parent.ego.s;
      if (was_ahead && out.child.others[i].s <= out.child.ego.s) return out;
    } else if (oc.merge_zone) {
      const MergeAlign& al = *oc.merge_zone->merge_align;
      double p_em = parent.ego.s - al.s_ego;
      double p_om = parent.others[i].s - al.s_other;
      double c_em = out.child.ego.s - al.s_ego;
      double c_om = out.child.others[i].s - al.s_other;
      // overtaking in the merged frame while both are past the junction
      if (p_om > p_em && c_em >= c_om && c_om >= 0.0) return out;
    }
  }

  out.terms.jerk = out.jerk * out.jerk;

  double vd = std::min(cfg.v_des, speed_limit(*ctx.ego_path, out.child.ego.s, cfg));
  double dv = out.child.ego.v - vd;
  out.terms.velocity = dv > 0.0 ? dv * dv : -dv;

  // ego as follower: nearest leader on the own path or in a merged frame
  double best_gap = kInf;
  double lead_v = 0.0;
  for (int i = 0; i < m; ++i) {
    const OtherContext& oc = ctx.others[i];
    const OtherState& o = out.child.others[i];
    if (oc.on_ego_path && o.s > out.child.ego.s) {
      double gap = o.s - out.child.ego.s;
      if (gap < best_gap) {
        best_gap = gap;
        lead_v = o.v;
      }
    } else if (oc.merge_zone) {
      const MergeAlign& al = *oc.merge_zone->merge_align;
      double om = o.s - al.s_other;
      double em = out.child.ego.s - al.s_ego;
      if (om > em) {
        double gap = om - em;
        if (gap < best_gap) {
          best_gap = gap;
          lead_v = o.v;
        }
      }
    }
  }
  if (best_gap < kInf) {
    double ratio = idm_desired_gap(out.child.ego.v, out.child.ego.v - lead_v, idm) / best_gap;
    out.terms.follow = ratio * ratio;
  }

  out.terms.interaction =
      interaction_cost(t_child, out.child.ego.s, out.a_norm, out.a_inter, ctx.constraints);

  out.weighted = out.terms.weighted(ctx.weights);
  out.feasible = std::isfinite(out.weighted);
  return out;
}

namespace {

struct SearchNode {
  WorldState world;
  int k = 0;
  double g = 0.0;
  int parent = -1;
  double action = 0.0;
  CostTerms terms;
  std::vector<double> a_norm;
  std::vector<double> a_inter;
};

struct OpenEntry {
  double f = 0.0;
  double s = 0.0;
  double abs_jerk = 0.0;
  int seq = 0;
  int node = -1;
};

struct OpenCompare {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;                       // smaller cost first
    if (a.s != b.s) return a.s < b.s;                       // then larger progress
    if (a.abs_jerk != b.abs_jerk) return a.abs_jerk > b.abs_jerk;  // then calmer
    return a.seq > b.seq;                                   // then insertion order
  }
};

struct ClosedKey {
  int k = 0;
  long long qs = 0;
  long long qv = 0;
  long long qa = 0;
  bool operator==(const ClosedKey&) const = default;
};

struct ClosedKeyHash {
  size_t operator()(const ClosedKey& c) const {
    size_t h = std::hash<long long>()(c.qs);
    h ^= std::hash<long long>()(c.qv) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<long long>()(c.qa) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<int>()(c.k) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

struct ClosedEntry {
  double s, v, a, g;
};

ClosedKey key_of(int k, const EgoState& e) {
  // 0.25 m / 0.1 m/s buckets; exact comparison happens inside the bucket
  return {k, std::llround(e.s / 0.25), std::llround(e.v / 0.1), std::llround(e.a * 1e6)};
}

bool states_equal(const ClosedEntry& ce, const EgoState& e) {
  return std::fabs(ce.s - e.s) <= 1e-9 && std::fabs(ce.v - e.v) <= 1e-9 &&
         std::fabs(ce.a - e.a) <= 1e-9;
}

BehaviorTrajectory reconstruct(const std::vector<SearchNode>& arena, int leaf,
                               const PlanningContext& ctx) {
  std::vector<int> chain;
  for (int i = leaf; i >= 0; i = arena[i].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());

  BehaviorTrajectory B;
  B.start_time = ctx.start_time;
  B.dt = ctx.cfg.dt;
  B.total_cost = arena[leaf].g;
  const int m = static_cast<int>(ctx.others.size());
  B.predictions.resize(m);
  for (size_t i = 0; i < chain.size(); ++i) {
    const SearchNode& n = arena[chain[i]];
    B.states.push_back(n.world);
    if (i == 0) continue;
    B.actions.push_back(n.action);
    B.costs.push_back(n.terms);
    for (int o = 0; o < m; ++o) {
      B.predictions[o].a_norm.push_back(n.a_norm[o]);
      B.predictions[o].a_inter.push_back(n.a_inter[o]);
    }
  }
  return B;
}

}  // namespace

PlanResult plan_behavior(const WorldState& initial, const PlanningContext& ctx) {
  PlanResult result;
  const PlannerConfig& cfg = ctx.cfg;
  const int tau = cfg.horizon_steps;

  std::vector<SearchNode> arena;
  arena.push_back({initial, 0, 0.0, -1, 0.0, {}, {}, {}});
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenCompare> open;
  open.push({0.0, initial.ego.s, 0.0, 0, 0});
  int seq = 1;
  std::unordered_map<ClosedKey, std::vector<ClosedEntry>, ClosedKeyHash> closed;

  auto dominated = [&](int k, const EgoState& e, double g) {
    auto it = closed.find(key_of(k, e));
    if (it == closed.end()) return false;
    for (const auto& ce : it->second) {
      if (states_equal(ce, e) && ce.g <= g + 1e-12) return true;
    }
    return false;
  };

  while (!open.empty()) {
    OpenEntry top = open.top();
    open.pop();
    const SearchNode node = arena[top.node];  // copy: arena grows during expansion
    if (node.k == tau) {
      result.trajectory = reconstruct(arena, top.node, ctx);
      return result;
    }
    if (dominated(node.k, node.world.ego, node.g)) continue;
    closed[key_of(node.k, node.world.ego)].push_back(
        {node.world.ego.s, node.world.ego.v, node.world.ego.a, node.g});
    ++result.expanded;

    const double t_par = ctx.start_time + cfg.dt * node.k;
    for (double a_next : cfg.actions) {
      StepOutcome so = step_world(node.world, t_par, node.k, a_next, ctx);
      if (!so.feasible) continue;
      double g_child = node.g + so.weighted;
      const EgoState child_ego = so.child.ego;
      if (dominated(node.k + 1, child_ego, g_child)) continue;
      if (inevitable_violation(child_ego, t_par + cfg.dt, ctx)) continue;
      arena.push_back({std::move(so.child), node.k + 1, g_child, top.node, a_next, so.terms,
                       std::move(so.a_norm), std::move(so.a_inter)});
      open.push({g_child, child_ego.s, std::fabs(so.jerk), seq++,
                 static_cast<int>(arena.size()) - 1});
    }
  }

  result.failure = "no feasible behavior plan";
  return result;
}

PlanResult plan_behavior(const WorldState& initial, const ScenarioConfig& scenario,
                         const PlannerConfig& cfg, const CostWeights& weights,
                         std::vector<SpatioTemporalConstraint> extra, double start_time) {
  PlanningContext ctx =
      make_planning_context(initial, scenario, cfg, weights, std::move(extra), start_time);
  return plan_behavior(initial, ctx);
}

namespace {

struct BruteStep {
  WorldState world;
  double action = 0.0;
  CostTerms terms;
  std::vector<double> a_norm;
  std::vector<double> a_inter;
};

void brute_dfs(const WorldState& world, int k, double g, const PlanningContext& ctx,
               std::vector<BruteStep>& chain, double& best_g, std::vector<BruteStep>& best,
               int& visited) {
  const int tau = ctx.cfg.horizon_steps;
  ++visited;
  if (k == tau) {
    if (g < best_g) {
      best_g = g;
      best = chain;
    }
    return;
  }
  const double t_par = ctx.start_time + ctx.cfg.dt * k;
  for (double a_next : ctx.cfg.actions) {
    StepOutcome so = step_world(world, t_par, k, a_next, ctx);
    if (!so.feasible) continue;
    chain.push_back({so.child, a_next, so.terms, so.a_norm, so.a_inter});
    brute_dfs(so.child, k + 1, g + so.weighted, ctx, chain, best_g, best, visited);
    chain.pop_back();
  }
}

}  // namespace

PlanResult brute_force_plan(const WorldState& initial, const PlanningContext& ctx) {
  PlanResult result;
  if (ctx.cfg.horizon_steps > 6) {
    result.failure = "horizon too long for exhaustive enumeration";
    return result;
  }
  std::vector<BruteStep> chain, best;
  double best_g = kInf;
  brute_dfs(initial, 0, 0.0, ctx, chain, best_g, best, result.expanded);
  if (best.empty()) {
    result.failure = "no feasible behavior plan";
    return result;
  }

  BehaviorTrajectory B;
  B.start_time = ctx.start_time;
  B.dt = ctx.cfg.dt;
  B.total_cost = best_g;
  const int m = static_cast<int>(ctx.others.size());
  B.predictions.resize(m);
  B.states.push_back(initial);
  for (const auto& st : best) {
    B.states.push_back(st.world);
    B.actions.push_back(st.action);
    B.costs.push_back(st.terms);
    for (int o = 0; o < m; ++o) {
      B.predictions[o].a_norm.push_back(st.a_norm[o]);
      B.predictions[o].a_inter.push_back(st.a_inter[o]);
    }
  }
  result.trajectory = std::move(B);
  return result;
}

PlanResult brute_force_plan(const WorldState& initial, const ScenarioConfig& scenario,
                            const PlannerConfig& cfg, const CostWeights& weights,
                            std::vector<SpatioTemporalConstraint> extra, double start_time) {
  PlanningContext ctx =
      make_planning_context(initial, scenario, cfg, weights, std::move(extra), start_time);
  return brute_force_plan(initial, ctx);
}

}  // namespace cplan
