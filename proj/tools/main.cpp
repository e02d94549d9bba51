#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cplan/logging.hpp"
#include "cplan/replan.hpp"

namespace fs = std::filesystem;
using namespace cplan;

namespace {

void print_error(const std::string& kind, const std::string& locus, const std::string& message) {
  nlohmann::ordered_json e;
  e["error"] = {{"kind", kind}, {"locus", locus}, {"message", message}};
  std::cerr << e.dump() << std::endl;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

// Far-away vehicles on their own corridor: they inflate the planner's state
// space without interacting with the scenario.
void append_dummies(ScenarioConfig& scn, int n, unsigned seed) {
  if (n <= 0) return;
  const std::string pid = "dummy_corridor";
  int path_index = -1;
  for (size_t i = 0; i < scn.paths.size(); ++i) {
    if (scn.paths[i].id() == pid) path_index = static_cast<int>(i);
  }
  if (path_index < 0) {
    scn.paths.emplace_back(pid, std::vector<PathSample>{{0.0, 0.0, scn.planner.v_cap},
                                                        {5000.0, 0.0, scn.planner.v_cap}});
    path_index = static_cast<int>(scn.paths.size()) - 1;
  }
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> pos(300.0, 2000.0);
  std::uniform_real_distribution<double> vel(4.0, 9.0);
  for (int i = 0; i < n; ++i) {
    VehicleSpec v;
    v.id = "dummy" + std::to_string(i);
    v.role = VehicleRole::kOther;
    v.path_id = pid;
    v.path_index = path_index;
    v.s = pos(rng);
    v.v = vel(rng);
    v.a = 0.0;
    scn.other_indices.push_back(static_cast<int>(scn.vehicles.size()));
    scn.vehicles.push_back(std::move(v));
  }
}

void print_summary(const RunSummary& s, const std::string& tag) {
  std::cout << "[" << s.scenario_id << (tag.empty() ? "" : " " + tag) << "]"
            << " merge=" << s.merge_order << " min_gap=" << fmt(s.min_gap) << "m"
            << " J_ex(driven)=" << fmt(s.total_comfort)
            << " interaction=" << fmt(s.interaction_total) << " plan_ms(mean/p95/max)="
            << fmt(s.mean_plan_ms) << "/" << fmt(s.p95_plan_ms) << "/" << fmt(s.max_plan_ms)
            << " fallbacks=" << s.fallback_count << " emergencies=" << s.emergency_count;
  if (s.reached_goal) {
    std::cout << " goal=" << fmt(s.goal_time) << "s";
  } else {
    std::cout << " goal=not reached";
  }
  std::cout << "\n";
}

int do_run(const std::string& path, const std::string& out_dir, double duration, unsigned seed,
           int dummies, double replan_hz, const std::string& sweep) {
  ScenarioConfig scn;
  try {
    scn = load_scenario_file(path);
  } catch (const ScenarioError& e) {
    print_error("scenario", e.locus(), e.what());
    return 2;
  }
  append_dummies(scn, dummies, seed);
  PlannerConfig cfg = scn.planner;
  if (replan_hz > 0.0) cfg.replan_hz = replan_hz;

  struct RunSpec {
    std::string tag;
    CostWeights weights;
    double value = 0.0;
  };
  std::vector<RunSpec> runs;
  std::string sweep_name;
  if (sweep.empty()) {
    runs.push_back({"", scn.weights, 0.0});
  } else {
    auto eq = sweep.find('=');
    if (eq == std::string::npos) {
      print_error("cli", "--sweep-weight", "expected NAME=v1,v2,...");
      return 2;
    }
    sweep_name = sweep.substr(0, eq);
    std::string rest = sweep.substr(eq + 1);
    size_t pos = 0;
    while (pos <= rest.size()) {
      auto comma = rest.find(',', pos);
      std::string item = rest.substr(pos, comma == std::string::npos ? comma : comma - pos);
      if (item.empty()) {
        print_error("cli", "--sweep-weight", "empty value in list");
        return 2;
      }
      char* end = nullptr;
      double value = std::strtod(item.c_str(), &end);
      if (end == item.c_str() || *end != '\0') {
        print_error("cli", "--sweep-weight", "not a number: '" + item + "'");
        return 2;
      }
      CostWeights w = scn.weights;
      if (sweep_name == "f") {
        w.follow = value;
      } else if (sweep_name == "v") {
        w.velocity = value;
      } else if (sweep_name == "jerk") {
        w.jerk = value;
      } else if (sweep_name == "inter") {
        w.interaction = value;
      } else {
        print_error("cli", "--sweep-weight", "unknown weight '" + sweep_name + "'");
        return 2;
      }
      runs.push_back({sweep_name + fmt(value), w, value});
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    print_error("io", out_dir, ec.message());
    return 3;
  }

  std::vector<std::pair<RunSpec, RunSummary>> results;
  for (const auto& spec : runs) {
    logging::info("running " + scn.name + (spec.tag.empty() ? "" : " [" + spec.tag + "]"));
    SimulationLog log = simulate(scn, duration, cfg, spec.weights);
    RunSummary sum = summarize(log, scn);

    std::string base = scn.name + (spec.tag.empty() ? "" : "_" + spec.tag);
    fs::path csv_path = fs::path(out_dir) / (base + ".csv");
    fs::path json_path = fs::path(out_dir) / (base + ".json");
    std::ofstream csv(csv_path);
    if (!csv) {
      print_error("io", csv_path.string(), "cannot open for writing");
      return 3;
    }
    write_csv(log, csv);
    std::ofstream js(json_path);
    if (!js) {
      print_error("io", json_path.string(), "cannot open for writing");
      return 3;
    }
    js << log_to_json(log, scn);

    print_summary(sum, spec.tag);
    results.emplace_back(spec, sum);
  }

  if (results.size() > 1) {
    std::cout << "sweep " << sweep_name << ":";
    for (const auto& [spec, sum] : results) {
      std::cout << " " << fmt(spec.value) << " -> " << sum.merge_order << " (interaction "
                << fmt(sum.interaction_total) << ")";
    }
    std::cout << "\n";
  }
  return 0;
}

int do_verify(const std::string& path) {
  ScenarioConfig scn;
  try {
    scn = load_scenario_file(path);
  } catch (const ScenarioError& e) {
    print_error("scenario", e.locus(), e.what());
    return 2;
  }
  std::cout << "OK " << scn.name << ": paths=" << scn.paths.size()
            << " vehicles=" << scn.vehicles.size() << " (others=" << scn.other_count() << ")"
            << " zones=" << scn.zones.size() << "\n";

  const VehicleSpec& ego = scn.ego();
  const PathProfile& ep = scn.path_of(ego);
  std::cout << "speed limit along " << ep.id() << ":\n";
  for (const auto& sample : ep.samples()) {
    std::cout << "  s=" << fmt(sample.s) << " v_max=" << fmt(speed_limit(ep, sample.s, scn.planner))
              << "\n";
  }
  double v0_limit = speed_limit(ep, ego.s, scn.planner);
  if (ego.v > v0_limit + 1e-9) {
    std::cout << "warning: initial ego speed " << fmt(ego.v) << " exceeds the local limit "
              << fmt(v0_limit) << "\n";
  }

  for (const auto& z : scn.zones) {
    const VehicleSpec& other = scn.other(z.other_index);
    if (z.kind == ZoneKind::kMerging) {
      std::cout << "merging zone other=" << other.id << " ego=[" << fmt(z.ego_interval.start)
                << "," << fmt(z.ego_interval.end) << "] align=(" << fmt(z.merge_align->s_ego)
                << "," << fmt(z.merge_align->s_other) << ")\n";
      continue;
    }
    Rollout roll = free_rollout({other.s, other.v}, scn.idm, scn.planner.horizon_steps,
                                scn.planner.dt);
    auto c = derive_crossing_constraint(z, roll.states, scn.planner.dt, scn.planner);
    if (c) {
      std::cout << "crossing constraint other=" << other.id << ": t=[" << fmt(c->t_start) << ","
                << fmt(c->t_end) << ") s=[" << fmt(c->s_start) << "," << fmt(c->s_end) << ")\n";
    } else {
      std::cout << "crossing zone other=" << other.id
                << ": no constraint derived (zone never occupied within the horizon)\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"longitudinal behavior and trajectory planner for intersections"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "simulate a scenario closed-loop and export logs");
  std::string scenario_path;
  std::string out_dir = "out";
  std::string sweep;
  double duration = 30.0;
  double replan_hz = 0.0;
  unsigned seed = 0;
  int dummies = 0;
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory for CSV/JSON logs");
  run->add_option("--duration", duration, "simulated seconds");
  run->add_option("--seed", seed, "seed for dummy-vehicle placement");
  run->add_option("--sweep-weight", sweep, "NAME=v1,v2,... rerun per weight value");
  run->add_option("--dummy-vehicles", dummies, "append far-away vehicles to the state space");
  run->add_option("--replan-hz", replan_hz, "override the replanning frequency");

  auto* verify = app.add_subcommand("verify", "validate a scenario file and print derived data");
  std::string verify_path;
  verify->add_option("scenario", verify_path, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return do_run(scenario_path, out_dir, duration, seed, dummies, replan_hz, sweep);
    }
    return do_verify(verify_path);
  } catch (const std::exception& e) {
    print_error("internal", "", e.what());
    return 1;
  }
}
