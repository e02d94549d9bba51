#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cplan {

/// Error raised while loading or validating a scenario file. `locus` names
/// the offending location, either a JSON field path ("vehicles[1].v") or a
/// text position ("line 12") for syntax errors.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string locus, const std::string& message)
      : std::runtime_error(locus + ": " + message), locus_(std::move(locus)) {}
  const std::string& locus() const { return locus_; }

 private:
  std::string locus_;
};

/// One sample of a path profile: arc length, curvature and legal speed.
struct PathSample {
  double s = 0.0;
  double kappa = 0.0;
  double v_legal = 0.0;
};

/// Piecewise-linear curvature / legal-speed profile over arc length.
/// Queries outside the sampled range clamp to the first/last sample.
class PathProfile {
 public:
  PathProfile() = default;
  PathProfile(std::string id, std::vector<PathSample> samples);

  const std::string& id() const { return id_; }
  const std::vector<PathSample>& samples() const { return samples_; }

  double curvature(double s) const;
  double legal_speed(double s) const;

 private:
  double interp(double s, double PathSample::*field) const;

  std::string id_;
  std::vector<PathSample> samples_;
};

enum class VehicleRole { kEgo, kOther };

struct VehicleSpec {
  std::string id;
  VehicleRole role = VehicleRole::kOther;
  std::string path_id;
  int path_index = -1;  // resolved at load time
  double s = 0.0;
  double v = 0.0;
  double a = 0.0;
};

enum class ZoneKind { kMerging, kCrossing };

struct Interval {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
};

/// Arc-length alignment between the ego path and another path where they
/// join; positions past these offsets share a common longitudinal frame.
struct MergeAlign {
  double s_ego = 0.0;
  double s_other = 0.0;
};

struct ConflictZone {
  ZoneKind kind = ZoneKind::kCrossing;
  std::string other_id;
  int other_index = -1;  // index into ScenarioConfig::others()
  Interval ego_interval;
  Interval other_interval;
  std::optional<MergeAlign> merge_align;  // required for merging zones
};

/// Blocked region of the ego's (t, s) plane. Both windows are half-open:
/// [t_start, t_end) x [s_start, s_end).
struct SpatioTemporalConstraint {
  double t_start = 0.0;
  double t_end = 0.0;
  double s_start = 0.0;
  double s_end = 0.0;

  bool contains(double t, double s) const {
    return t >= t_start && t < t_end && s >= s_start && s < s_end;
  }
};

struct CostWeights {
  double follow = 5.0;
  double velocity = 1.0;
  double jerk = 1.0;
  double interaction = 20.0;
};

struct PlannerConfig {
  double dt = 1.0;
  int horizon_steps = 10;
  std::vector<double> actions = {-2.0, -1.0, 0.0, 1.0, 2.0};
  double da_max = 1.9;
  double a_min = -2.5;
  double a_max = 2.5;
  double v_cap = 10.0;
  double v_des = 7.5;
  double a_lat_max = 2.0;
  int recursion_depth = 1;
  double replan_hz = 5.0;
  double t_safe = 1.0;
  double d_safe = 2.0;
  double goal_s = std::numeric_limits<double>::infinity();
};

struct IdmParams {
  double a_idm = 0.73;
  double b_comf = 1.67;
  double delta = 4.0;
  double time_headway = 1.5;
  double s0 = 2.0;
  double v_des = 7.5;
};

/// Longitudinal kinematic state of a surrounding vehicle along its path.
struct OtherState {
  double s = 0.0;
  double v = 0.0;
};

struct ScenarioConfig {
  std::string name;
  std::vector<PathProfile> paths;
  std::vector<VehicleSpec> vehicles;  // file order, exactly one ego
  std::vector<ConflictZone> zones;
  CostWeights weights;
  PlannerConfig planner;
  IdmParams idm;

  int ego_index = -1;
  std::vector<int> other_indices;  // indices into `vehicles`, file order

  const VehicleSpec& ego() const { return vehicles.at(ego_index); }
  const VehicleSpec& other(int i) const { return vehicles.at(other_indices.at(i)); }
  int other_count() const { return static_cast<int>(other_indices.size()); }
  const PathProfile& path_of(const VehicleSpec& v) const { return paths.at(v.path_index); }
  const PathProfile& path_by_id(const std::string& id) const;
};

/// Parses and validates a scenario document. Throws ScenarioError with a
/// locus on the first problem found.
ScenarioConfig load_scenario(const std::string& text, const std::string& name = "");
ScenarioConfig load_scenario_file(const std::string& path);

/// Canonical JSON form; load_scenario(serialize_scenario(c)) reproduces c.
std::string serialize_scenario(const ScenarioConfig& config);

/// Pointwise speed bound: min of the legal speed, the lateral-acceleration
/// limit sqrt(a_lat_max / |kappa|), and the global cap.
double speed_limit(const PathProfile& path, double s, const PlannerConfig& cfg);

/// Builds the blocked ego (t, s) rectangle for a crossing zone from a
/// time-indexed rollout of the other vehicle (states at k * dt). Occupancy
/// entry/exit times are resolved analytically inside each constant-
/// acceleration step, then padded by t_safe / d_safe. Returns nothing if
/// the rollout never occupies the zone.
std::optional<SpatioTemporalConstraint> derive_crossing_constraint(
    const ConflictZone& zone, const std::vector<OtherState>& rollout, double dt,
    const PlannerConfig& cfg);

}  // namespace cplan
