#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cplan/predictor.hpp"
#include "cplan/replan.hpp"

namespace py = pybind11;
using namespace cplan;

namespace {

WorldState initial_world(const ScenarioConfig& scn) {
  WorldState w;
  w.ego = {scn.ego().s, scn.ego().v, scn.ego().a};
  for (int i = 0; i < scn.other_count(); ++i) {
    w.others.push_back({scn.other(i).s, scn.other(i).v});
  }
  return w;
}

KnotState to_knot(const py::tuple& t) {
  if (t.size() != 4) throw py::value_error("expected a (s, v, a, j) tuple");
  return {t[0].cast<double>(), t[1].cast<double>(), t[2].cast<double>(), t[3].cast<double>()};
}

py::dict plan_dict(const BehaviorTrajectory& b) {
  py::list states;
  for (const auto& w : b.states) states.append(py::make_tuple(w.ego.s, w.ego.v, w.ego.a));
  py::dict d;
  d["start_time"] = b.start_time;
  d["dt"] = b.dt;
  d["actions"] = b.actions;
  d["states"] = states;
  d["total_cost"] = b.total_cost;
  return d;
}

py::dict summary_dict(const RunSummary& s) {
  py::dict d;
  d["scenario"] = s.scenario_id;
  d["merge_order"] = s.merge_order;
  d["min_gap"] = s.min_gap;
  d["total_comfort"] = s.total_comfort;
  d["interaction_total"] = s.interaction_total;
  d["mean_plan_ms"] = s.mean_plan_ms;
  d["p95_plan_ms"] = s.p95_plan_ms;
  d["max_plan_ms"] = s.max_plan_ms;
  d["fallback_count"] = s.fallback_count;
  d["emergency_count"] = s.emergency_count;
  d["reached_goal"] = s.reached_goal;
  d["goal_time"] = s.goal_time;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "longitudinal behavior and trajectory planning core";

  py::register_exception<ScenarioError>(m, "ScenarioError");

  py::class_<IdmParams>(m, "IdmParams")
      .def(py::init<>())
      .def_readwrite("a_idm", &IdmParams::a_idm)
      .def_readwrite("b_comf", &IdmParams::b_comf)
      .def_readwrite("delta", &IdmParams::delta)
      .def_readwrite("time_headway", &IdmParams::time_headway)
      .def_readwrite("s0", &IdmParams::s0)
      .def_readwrite("v_des", &IdmParams::v_des);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_readonly("name", &ScenarioConfig::name)
      .def_property_readonly("other_count", &ScenarioConfig::other_count)
      .def("serialize", [](const ScenarioConfig& c) { return serialize_scenario(c); });

  py::class_<SepticSegment>(m, "SepticSegment")
      .def("eval",
           [](const SepticSegment& seg, double t) {
             KnotState k = seg.eval(t);
             return py::make_tuple(k.s, k.v, k.a, k.j);
           })
      .def("coeffs", [](const SepticSegment& seg) { return seg.coeffs(); })
      .def("squared_jerk_integral",
           [](const SepticSegment& seg) { return seg.squared_jerk_integral(); })
      .def_property_readonly("t_begin", &SepticSegment::t_begin)
      .def_property_readonly("t_end", &SepticSegment::t_end);

  m.def("load_scenario", &load_scenario, py::arg("text"), py::arg("name") = "");
  m.def("load_scenario_file", &load_scenario_file, py::arg("path"));

  m.def(
      "speed_limit",
      [](const ScenarioConfig& scn, const std::string& path_id, double s) {
        return speed_limit(scn.path_by_id(path_id), s, scn.planner);
      },
      py::arg("scenario"), py::arg("path_id"), py::arg("s"));

  m.def("idm_desired_gap", &idm_desired_gap, py::arg("v"), py::arg("dv"), py::arg("params"));
  m.def(
      "idm_acceleration",
      [](double v, double gap, double dv, const IdmParams& p) {
        IdmResult r = idm_acceleration(v, gap, dv, p);
        return py::make_tuple(r.a, r.interaction, r.invalid_gap);
      },
      py::arg("v"), py::arg("gap"), py::arg("dv"), py::arg("params"));

  m.def(
      "cj_step",
      [](double s, double v, double a, double a_next, double dt) {
        EgoState e = cj_step({s, v, a}, a_next, dt);
        return py::make_tuple(e.s, e.v, e.a);
      },
      py::arg("s"), py::arg("v"), py::arg("a"), py::arg("a_next"), py::arg("dt"));

  m.def(
      "fit_septic",
      [](const py::tuple& x0, const py::tuple& xf, double tf) {
        return fit_septic(to_knot(x0), to_knot(xf), tf);
      },
      py::arg("x0"), py::arg("xf"), py::arg("tf"));

  m.def(
      "plan_behavior",
      [](const ScenarioConfig& scn) -> py::object {
        WorldState init = initial_world(scn);
        PlanningContext ctx = make_planning_context(init, scn, scn.planner, scn.weights);
        PlanResult pr = plan_behavior(init, ctx);
        if (!pr.trajectory) return py::none();
        return plan_dict(*pr.trajectory);
      },
      py::arg("scenario"));

  m.def(
      "simulate_summary",
      [](const ScenarioConfig& scn, double duration) {
        SimulationLog log = simulate(scn, duration);
        return summary_dict(summarize(log, scn));
      },
      py::arg("scenario"), py::arg("duration"));

  m.def(
      "simulate_csv",
      [](const ScenarioConfig& scn, double duration) {
        SimulationLog log = simulate(scn, duration);
        std::ostringstream os;
        write_csv(log, os);
        return os.str();
      },
      py::arg("scenario"), py::arg("duration"));

  m.def(
      "simulate_json",
      [](const ScenarioConfig& scn, double duration) {
        return log_to_json(simulate(scn, duration), scn);
      },
      py::arg("scenario"), py::arg("duration"));
}
