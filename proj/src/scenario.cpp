#include "cplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cplan {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string index_locus(const char* block, size_t i) {
  return std::string(block) + "[" + std::to_string(i) + "]";
}

const json& require_key(const json& obj, const char* key, const std::string& locus) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ScenarioError(locus + "." + key, "missing required field");
  }
  return obj.at(key);
}

double as_number(const json& v, const std::string& locus) {
  if (!v.is_number()) throw ScenarioError(locus, "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) throw ScenarioError(locus, "value must be finite");
  return x;
}

double number_field(const json& obj, const char* key, const std::string& locus) {
  return as_number(require_key(obj, key, locus), locus + "." + std::string(key));
}

double number_or(const json& obj, const char* key, const std::string& locus, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return as_number(obj.at(key), locus + "." + std::string(key));
}

std::string string_field(const json& obj, const char* key, const std::string& locus) {
  const json& v = require_key(obj, key, locus);
  if (!v.is_string()) throw ScenarioError(locus + "." + std::string(key), "expected a string");
  return v.get<std::string>();
}

Interval interval_field(const json& obj, const char* key, const std::string& locus) {
  const json& v = require_key(obj, key, locus);
  std::string here = locus + "." + std::string(key);
  if (!v.is_array() || v.size() != 2) throw ScenarioError(here, "expected [start, end]");
  Interval iv{as_number(v[0], here), as_number(v[1], here)};
  if (iv.end <= iv.start) throw ScenarioError(here, "interval end must exceed start");
  return iv;
}

}  // namespace

PathProfile::PathProfile(std::string id, std::vector<PathSample> samples)
    : id_(std::move(id)), samples_(std::move(samples)) {
  if (samples_.empty()) throw ScenarioError("paths." + id_, "path has no samples");
  for (size_t i = 0; i < samples_.size(); ++i) {
    const auto& p = samples_[i];
    std::string locus = "paths." + id_ + ".samples[" + std::to_string(i) + "]";
    if (!std::isfinite(p.s) || !std::isfinite(p.kappa) || !std::isfinite(p.v_legal)) {
      throw ScenarioError(locus, "sample values must be finite");
    }
    if (p.v_legal <= 0.0) throw ScenarioError(locus, "legal speed must be positive");
    if (i > 0 && p.s <= samples_[i - 1].s) {
      throw ScenarioError(locus, "arc length must be strictly increasing");
    }
  }
}

double PathProfile::interp(double s, double PathSample::*field) const {
  if (s <= samples_.front().s) return samples_.front().*field;
  if (s >= samples_.back().s) return samples_.back().*field;
  auto hi = std::upper_bound(samples_.begin(), samples_.end(), s,
                             [](double x, const PathSample& p) { return x < p.s; });
  auto lo = hi - 1;
  double w = (s - lo->s) / (hi->s - lo->s);
  return (*lo).*field + w * ((*hi).*field - (*lo).*field);
}

double PathProfile::curvature(double s) const { return interp(s, &PathSample::kappa); }
double PathProfile::legal_speed(double s) const { return interp(s, &PathSample::v_legal); }

const PathProfile& ScenarioConfig::path_by_id(const std::string& id) const {
  for (const auto& p : paths) {
    if (p.id() == id) return p;
  }
  throw ScenarioError("paths", "unknown path id '" + id + "'");
}

ScenarioConfig load_scenario(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1;
    for (size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ScenarioError("line " + std::to_string(line), e.what());
  }
  if (!doc.is_object()) throw ScenarioError("document", "top level must be an object");

  ScenarioConfig cfg;
  cfg.name = name;

  // --- paths ---
  const json& jpaths = require_key(doc, "paths", "document");
  if (!jpaths.is_array() || jpaths.empty()) throw ScenarioError("paths", "expected a non-empty array");
  std::set<std::string> path_ids;
  for (size_t i = 0; i < jpaths.size(); ++i) {
    std::string locus = index_locus("paths", i);
    const json& jp = jpaths[i];
    std::string id = string_field(jp, "id", locus);
    if (id.empty()) throw ScenarioError(locus + ".id", "path id must be non-empty");
    if (!path_ids.insert(id).second) throw ScenarioError(locus + ".id", "duplicate path id '" + id + "'");
    const json& jsamples = require_key(jp, "samples", locus);
    if (!jsamples.is_array() || jsamples.empty()) {
      throw ScenarioError(locus + ".samples", "expected a non-empty array");
    }
    std::vector<PathSample> samples;
    for (size_t k = 0; k < jsamples.size(); ++k) {
      const json& row = jsamples[k];
      std::string sl = locus + ".samples[" + std::to_string(k) + "]";
      if (!row.is_array() || row.size() != 3) throw ScenarioError(sl, "expected [s, kappa, v_legal]");
      samples.push_back({as_number(row[0], sl), as_number(row[1], sl), as_number(row[2], sl)});
    }
    cfg.paths.emplace_back(id, std::move(samples));
  }

  // --- planner (before vehicles/zones so their checks can use bounds) ---
  std::string plocus = "planner";
  const json jplanner = doc.contains("planner") ? doc.at("planner") : json::object();
  if (!jplanner.is_object()) throw ScenarioError(plocus, "expected an object");
  PlannerConfig& pl = cfg.planner;
  pl.dt = number_or(jplanner, "dt", plocus, pl.dt);
  if (pl.dt <= 0.0) throw ScenarioError(plocus + ".dt", "step duration must be positive");
  pl.horizon_steps = static_cast<int>(number_or(jplanner, "tau", plocus, pl.horizon_steps));
  if (pl.horizon_steps < 2) throw ScenarioError(plocus + ".tau", "horizon must span at least 2 steps");
  pl.a_min = number_or(jplanner, "a_min", plocus, pl.a_min);
  pl.a_max = number_or(jplanner, "a_max", plocus, pl.a_max);
  if (pl.a_min >= pl.a_max) throw ScenarioError(plocus + ".a_min", "a_min must be below a_max");
  if (jplanner.contains("actions")) {
    const json& ja = jplanner.at("actions");
    if (!ja.is_array() || ja.empty()) throw ScenarioError(plocus + ".actions", "expected a non-empty array");
    pl.actions.clear();
    for (size_t i = 0; i < ja.size(); ++i) {
      pl.actions.push_back(as_number(ja[i], plocus + ".actions[" + std::to_string(i) + "]"));
    }
  }
  std::sort(pl.actions.begin(), pl.actions.end());
  pl.actions.erase(std::unique(pl.actions.begin(), pl.actions.end()), pl.actions.end());
  for (double a : pl.actions) {
    if (a < pl.a_min || a > pl.a_max) {
      throw ScenarioError(plocus + ".actions", "action outside [a_min, a_max]");
    }
  }
  pl.da_max = number_or(jplanner, "da_max", plocus, pl.da_max);
  if (pl.da_max <= 0.0) throw ScenarioError(plocus + ".da_max", "da_max must be positive");
  pl.v_cap = number_or(jplanner, "v_cap", plocus, pl.v_cap);
  if (pl.v_cap <= 0.0) throw ScenarioError(plocus + ".v_cap", "v_cap must be positive");
  pl.v_des = number_or(jplanner, "v_des", plocus, pl.v_des);
  if (pl.v_des <= 0.0) throw ScenarioError(plocus + ".v_des", "v_des must be positive");
  pl.a_lat_max = number_or(jplanner, "a_lat_max", plocus, pl.a_lat_max);
  if (pl.a_lat_max <= 0.0) throw ScenarioError(plocus + ".a_lat_max", "a_lat_max must be positive");
  pl.recursion_depth = static_cast<int>(number_or(jplanner, "l_r", plocus, pl.recursion_depth));
  if (pl.recursion_depth < 1) throw ScenarioError(plocus + ".l_r", "recursion depth must be at least 1");
  pl.replan_hz = number_or(jplanner, "replan_hz", plocus, pl.replan_hz);
  if (pl.replan_hz <= 0.0) throw ScenarioError(plocus + ".replan_hz", "replan rate must be positive");
  pl.t_safe = number_or(jplanner, "t_safe", plocus, pl.t_safe);
  if (pl.t_safe < 0.0) throw ScenarioError(plocus + ".t_safe", "t_safe must be non-negative");
  pl.d_safe = number_or(jplanner, "d_safe", plocus, pl.d_safe);
  if (pl.d_safe < 0.0) throw ScenarioError(plocus + ".d_safe", "d_safe must be non-negative");
  if (jplanner.contains("goal_s")) pl.goal_s = number_field(jplanner, "goal_s", plocus);

  // --- vehicles ---
  const json& jveh = require_key(doc, "vehicles", "document");
  if (!jveh.is_array() || jveh.empty()) throw ScenarioError("vehicles", "expected a non-empty array");
  std::set<std::string> vehicle_ids;
  std::vector<std::string> ego_ids;
  for (size_t i = 0; i < jveh.size(); ++i) {
    std::string locus = index_locus("vehicles", i);
    const json& jv = jveh[i];
    VehicleSpec v;
    v.id = string_field(jv, "id", locus);
    if (v.id.empty()) throw ScenarioError(locus + ".id", "vehicle id must be non-empty");
    if (!vehicle_ids.insert(v.id).second) {
      throw ScenarioError(locus + ".id", "duplicate vehicle id '" + v.id + "'");
    }
    std::string role = string_field(jv, "role", locus);
    if (role == "ego") {
      v.role = VehicleRole::kEgo;
      ego_ids.push_back(v.id);
      cfg.ego_index = static_cast<int>(i);
    } else if (role == "other") {
      v.role = VehicleRole::kOther;
      cfg.other_indices.push_back(static_cast<int>(i));
    } else {
      throw ScenarioError(locus + ".role", "role must be 'ego' or 'other'");
    }
    v.path_id = string_field(jv, "path", locus);
    v.path_index = -1;
    for (size_t p = 0; p < cfg.paths.size(); ++p) {
      if (cfg.paths[p].id() == v.path_id) v.path_index = static_cast<int>(p);
    }
    if (v.path_index < 0) throw ScenarioError(locus + ".path", "unknown path id '" + v.path_id + "'");
    v.s = number_field(jv, "s", locus);
    v.v = number_field(jv, "v", locus);
    if (v.v < 0.0) throw ScenarioError(locus + ".v", "speed must be non-negative");
    v.a = number_or(jv, "a", locus, 0.0);
    cfg.vehicles.push_back(std::move(v));
  }
  if (ego_ids.empty()) throw ScenarioError("vehicles", "no vehicle marked ego");
  if (ego_ids.size() > 1) {
    std::string list;
    for (size_t i = 0; i < ego_ids.size(); ++i) list += (i ? ", " : "") + ("'" + ego_ids[i] + "'");
    throw ScenarioError("vehicles", "multiple vehicles marked ego: " + list);
  }

  // --- zones ---
  const json jzones = doc.contains("zones") ? doc.at("zones") : json::array();
  if (!jzones.is_array()) throw ScenarioError("zones", "expected an array");
  for (size_t i = 0; i < jzones.size(); ++i) {
    std::string locus = index_locus("zones", i);
    const json& jz = jzones[i];
    ConflictZone z;
    std::string kind = string_field(jz, "kind", locus);
    if (kind == "merging") {
      z.kind = ZoneKind::kMerging;
    } else if (kind == "crossing") {
      z.kind = ZoneKind::kCrossing;
    } else {
      throw ScenarioError(locus + ".kind", "kind must be 'merging' or 'crossing'");
    }
    z.other_id = string_field(jz, "other_id", locus);
    z.other_index = -1;
    for (size_t o = 0; o < cfg.other_indices.size(); ++o) {
      if (cfg.vehicles[cfg.other_indices[o]].id == z.other_id) z.other_index = static_cast<int>(o);
    }
    if (z.other_index < 0) {
      throw ScenarioError(locus + ".other_id", "unknown vehicle id '" + z.other_id + "'");
    }
    z.ego_interval = interval_field(jz, "ego_interval", locus);
    z.other_interval = interval_field(jz, "other_interval", locus);
    if (jz.contains("merge_align")) {
      const json& jm = jz.at("merge_align");
      std::string ml = locus + ".merge_align";
      if (!jm.is_array() || jm.size() != 2) throw ScenarioError(ml, "expected [s_ego, s_other]");
      z.merge_align = MergeAlign{as_number(jm[0], ml), as_number(jm[1], ml)};
    }
    if (z.kind == ZoneKind::kMerging && !z.merge_align) {
      throw ScenarioError(locus, "merging zone requires merge_align");
    }
    cfg.zones.push_back(std::move(z));
  }

  // --- weights ---
  std::string wlocus = "weights";
  const json jw = doc.contains("weights") ? doc.at("weights") : json::object();
  if (!jw.is_object()) throw ScenarioError(wlocus, "expected an object");
  cfg.weights.follow = number_or(jw, "f", wlocus, cfg.weights.follow);
  cfg.weights.velocity = number_or(jw, "v", wlocus, cfg.weights.velocity);
  cfg.weights.jerk = number_or(jw, "jerk", wlocus, cfg.weights.jerk);
  cfg.weights.interaction = number_or(jw, "inter", wlocus, cfg.weights.interaction);
  if (cfg.weights.follow < 0 || cfg.weights.velocity < 0 || cfg.weights.jerk < 0 ||
      cfg.weights.interaction < 0) {
    throw ScenarioError(wlocus, "weights must be non-negative");
  }

  // --- idm ---
  std::string ilocus = "idm";
  const json ji = doc.contains("idm") ? doc.at("idm") : json::object();
  if (!ji.is_object()) throw ScenarioError(ilocus, "expected an object");
  IdmParams& idm = cfg.idm;
  idm.a_idm = number_or(ji, "a", ilocus, idm.a_idm);
  if (idm.a_idm <= 0.0) throw ScenarioError(ilocus + ".a", "IDM acceleration must be positive");
  idm.b_comf = number_or(ji, "b", ilocus, idm.b_comf);
  if (idm.b_comf <= 0.0) throw ScenarioError(ilocus + ".b", "comfortable braking must be positive");
  idm.delta = number_or(ji, "delta", ilocus, idm.delta);
  if (idm.delta < 1.0) throw ScenarioError(ilocus + ".delta", "delta must be at least 1");
  idm.time_headway = number_or(ji, "T", ilocus, idm.time_headway);
  if (idm.time_headway < 0.0) throw ScenarioError(ilocus + ".T", "headway must be non-negative");
  idm.s0 = number_or(ji, "s0", ilocus, idm.s0);
  if (idm.s0 < 0.0) throw ScenarioError(ilocus + ".s0", "minimum gap must be non-negative");
  idm.v_des = number_or(ji, "v_des", ilocus, idm.v_des);
  if (idm.v_des <= 0.0) throw ScenarioError(ilocus + ".v_des", "desired speed must be positive");

  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string stem = path;
  if (auto pos = stem.find_last_of("/\\"); pos != std::string::npos) stem = stem.substr(pos + 1);
  if (auto pos = stem.rfind('.'); pos != std::string::npos) stem = stem.substr(0, pos);
  return load_scenario(ss.str(), stem);
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  ordered_json doc;
  doc["paths"] = ordered_json::array();
  for (const auto& p : cfg.paths) {
    ordered_json jp;
    jp["id"] = p.id();
    jp["samples"] = ordered_json::array();
    for (const auto& s : p.samples()) jp["samples"].push_back({s.s, s.kappa, s.v_legal});
    doc["paths"].push_back(std::move(jp));
  }
  doc["vehicles"] = ordered_json::array();
  for (const auto& v : cfg.vehicles) {
    ordered_json jv;
    jv["id"] = v.id;
    jv["role"] = v.role == VehicleRole::kEgo ? "ego" : "other";
    jv["path"] = v.path_id;
    jv["s"] = v.s;
    jv["v"] = v.v;
    jv["a"] = v.a;
    doc["vehicles"].push_back(std::move(jv));
  }
  doc["zones"] = ordered_json::array();
  for (const auto& z : cfg.zones) {
    ordered_json jz;
    jz["kind"] = z.kind == ZoneKind::kMerging ? "merging" : "crossing";
    jz["other_id"] = z.other_id;
    jz["ego_interval"] = {z.ego_interval.start, z.ego_interval.end};
    jz["other_interval"] = {z.other_interval.start, z.other_interval.end};
    if (z.merge_align) jz["merge_align"] = {z.merge_align->s_ego, z.merge_align->s_other};
    doc["zones"].push_back(std::move(jz));
  }
  const CostWeights& w = cfg.weights;
  doc["weights"] = {{"f", w.follow}, {"v", w.velocity}, {"jerk", w.jerk}, {"inter", w.interaction}};
  const PlannerConfig& pl = cfg.planner;
  ordered_json jp;
  jp["dt"] = pl.dt;
  jp["tau"] = pl.horizon_steps;
  jp["actions"] = pl.actions;
  jp["da_max"] = pl.da_max;
  jp["a_min"] = pl.a_min;
  jp["a_max"] = pl.a_max;
  jp["v_cap"] = pl.v_cap;
  jp["v_des"] = pl.v_des;
  jp["a_lat_max"] = pl.a_lat_max;
  jp["l_r"] = pl.recursion_depth;
  jp["replan_hz"] = pl.replan_hz;
  jp["t_safe"] = pl.t_safe;
  jp["d_safe"] = pl.d_safe;
  if (std::isfinite(pl.goal_s)) jp["goal_s"] = pl.goal_s;
  doc["planner"] = std::move(jp);
  const IdmParams& idm = cfg.idm;
  doc["idm"] = {{"a", idm.a_idm},   {"b", idm.b_comf}, {"delta", idm.delta},
                {"T", idm.time_headway}, {"s0", idm.s0},    {"v_des", idm.v_des}};
  return doc.dump(2);
}

double speed_limit(const PathProfile& path, double s, const PlannerConfig& cfg) {
  double v = std::min(path.legal_speed(s), cfg.v_cap);
  double kappa = std::fabs(path.curvature(s));
  if (kappa > 1e-12) v = std::min(v, std::sqrt(cfg.a_lat_max / kappa));
  return v;
}

namespace {

// First time in [0, cap] at which s0 + v*t + a*t^2/2 reaches `target`,
// assuming non-decreasing position. Returns +inf if unreached.
double first_reach(double s0, double v, double a, double target, double cap) {
  if (s0 >= target) return 0.0;
  double t = kInf;
  if (std::fabs(a) < 1e-12) {
    if (v > 1e-12) t = (target - s0) / v;
  } else {
    double disc = v * v + 2.0 * a * (target - s0);
    if (disc >= 0.0) {
      // smallest positive root for either sign of a
      double r = (-v + std::sqrt(disc)) / a;
      if (r >= 0.0) t = r;
    }
  }
  return (t <= cap + 1e-12) ? std::min(t, cap) : kInf;
}

}  // namespace

std::optional<SpatioTemporalConstraint> derive_crossing_constraint(
    const ConflictZone& zone, const std::vector<OtherState>& rollout, double dt,
    const PlannerConfig& cfg) {
  if (rollout.size() < 2) return std::nullopt;
  const double s_in = zone.other_interval.start;
  const double s_out = zone.other_interval.end;
  if (rollout.front().s >= s_out) return std::nullopt;  // already past the zone
  double t_entry = kInf;
  double t_exit = kInf;
  const double horizon = dt * static_cast<double>(rollout.size() - 1);

  for (size_t k = 0; k + 1 < rollout.size(); ++k) {
    const OtherState& x0 = rollout[k];
    const OtherState& x1 = rollout[k + 1];
    double t0 = dt * static_cast<double>(k);
    // Per-step motion is constant-acceleration; a stop inside the step leaves
    // the endpoint pair inconsistent with full-step CA, so recover the
    // braking rate from the travelled distance and cap motion at the stop.
    double a = (x1.v - x0.v) / dt;
    double cap = dt;
    double mid = x0.s + 0.5 * (x0.v + x1.v) * dt;
    if (std::fabs(mid - x1.s) > 1e-9) {
      double ds = x1.s - x0.s;
      a = (ds > 1e-12) ? -x0.v * x0.v / (2.0 * ds) : 0.0;
      cap = (a < -1e-12) ? -x0.v / a : 0.0;
    }
    if (t_entry == kInf) {
      double r = first_reach(x0.s, x0.v, a, s_in, cap);
      if (r != kInf) t_entry = t0 + r;
    }
    if (t_exit == kInf) {
      double r = first_reach(x0.s, x0.v, a, s_out, cap);
      if (r != kInf) t_exit = t0 + r;
    }
    if (t_entry != kInf && t_exit != kInf) break;
  }

  if (t_entry == kInf) return std::nullopt;  // zone never occupied
  if (t_exit == kInf) t_exit = horizon;      // still inside at the horizon end

  SpatioTemporalConstraint c;
  c.t_start = std::max(0.0, t_entry - cfg.t_safe);
  c.t_end = t_exit + cfg.t_safe;
  c.s_start = zone.ego_interval.start - cfg.d_safe;
  c.s_end = zone.ego_interval.end + cfg.d_safe;
  return c;
}

}  // namespace cplan
