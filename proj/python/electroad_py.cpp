#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "electroad/cli.hpp"
#include "electroad/errors.hpp"
#include "electroad/scenario_io.hpp"

namespace py = pybind11;
using namespace electroad;

namespace {

Scenario scenario_from(const std::string& text) { return parse_scenario(nlohmann::json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Voltage profiles and voltage stability limits of electrified roads";

    auto error = py::register_exception<Error>(m, "ElectroadError");
    py::register_exception<SchemaError>(m, "SchemaError", error.ptr());
    py::register_exception<UnitError>(m, "UnitError", error.ptr());
    auto nonconv = py::register_exception<NonConvergence>(m, "NonConvergence", error.ptr());
    py::register_exception<StepNonConvergence>(m, "StepNonConvergence", nonconv.ptr());
    py::register_exception<NoSolution>(m, "NoSolution", error.ptr());
    py::register_exception<TraceStall>(m, "TraceStall", error.ptr());
    py::register_exception<InfeasibleAtOne>(m, "InfeasibleAtOne", error.ptr());

    py::class_<Scenario>(m, "Scenario")
        .def(py::init([](const std::string& json_text) { return scenario_from(json_text); }),
             py::arg("json_text") = "{}")
        .def("to_json", [](const Scenario& s) { return serialize_scenario(s).dump(); })
        .def_property_readonly("num_nodes", [](const Scenario& s) { return s.network.num_nodes; })
        .def_property_readonly("time_steps", [](const Scenario& s) { return s.time_steps; })
        .def_property_readonly("road_length_km", [](const Scenario& s) { return s.network.road_length_km; })
        .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; });

    m.def("default_scenario", &default_scenario);
    m.def("load_scenario", [](const std::string& path) { return parse_scenario_file(path); }, py::arg("path"));

    m.def(
        "two_bus_roots",
        [](double v1, double p, double q, double r, double x) {
            const auto roots = two_bus_roots({v1, p, q, r, x});
            return py::make_tuple(roots.u_high, roots.u_low);
        },
        py::arg("v1"), py::arg("p"), py::arg("q"), py::arg("r"), py::arg("x"));
    m.def(
        "two_bus_pr_equivalence_check",
        [](double v1, double p, double q, double r, double x, double scale) {
            return two_bus_pr_equivalence_check({v1, p, q, r, x}, scale);
        },
        py::arg("v1"), py::arg("p"), py::arg("q"), py::arg("r"), py::arg("x"), py::arg("scale"));

    m.def(
        "simulate_profiles", [](const Scenario& s) { return simulate_profiles(s).voltage; },
        "Voltage magnitudes, one row per time step and one column per bus.", py::arg("scenario"));
    m.def(
        "lower_bound_line",
        [](const Scenario& s) { return lower_bound_line(s, simulate_profiles(s)).values; }, py::arg("scenario"));
    m.def(
        "swing",
        [](const Scenario& s, int bus) { return swing_series(simulate_profiles(s), bus).values; },
        py::arg("scenario"), py::arg("bus"));
    m.def(
        "monte_carlo_envelope",
        [](const Scenario& s, int samples, int step) {
            const auto env = monte_carlo_envelope(s, samples, {step}).front();
            return py::make_tuple(env.min, env.mean, env.max);
        },
        py::arg("scenario"), py::arg("samples"), py::arg("step"));

    m.def(
        "nose_curve",
        [](const Scenario& s, double start_km, double stop_km) {
            const auto curve = trace_nose_curve(s, start_km, stop_km);
            std::vector<std::tuple<double, double, std::string>> pts;
            for (const auto& p : curve.points) pts.emplace_back(p.length_km, p.end_voltage, to_string(p.branch));
            return py::make_tuple(curve.nose.length_km, curve.nose.end_voltage, pts);
        },
        "Returns (nose_length_km, nose_voltage, [(length_km, voltage, branch), ...]).", py::arg("scenario"),
        py::arg("start_km"), py::arg("stop_km"));
    m.def(
        "critical_length",
        [](const Scenario& s) {
            const auto cl = critical_length(s);
            return py::make_tuple(cl.length_km, cl.bracket_km);
        },
        py::arg("scenario"));
    m.def(
        "max_vehicle_count",
        [](const Scenario& s, double length_km, int cap) { return max_vehicle_count(s, length_km, cap).max_count; },
        py::arg("scenario"), py::arg("length_km"), py::arg("cap") = 20);
    m.def(
        "collapse_trajectory",
        [](const Scenario& s, const std::vector<double>& positions_km, double threshold) {
            DrivePlan plan;
            for (std::size_t k = 0; k < positions_km.size(); ++k)
                plan.steps.push_back({static_cast<int>(k) + 1, positions_km[k]});
            CollapseOptions opts;
            opts.collapse_threshold = threshold;
            const auto tr = collapse_trajectory(s, plan, opts);
            std::vector<std::tuple<double, double, std::string>> pts;
            for (const auto& p : tr.points) pts.emplace_back(p.position_km, p.min_voltage, to_string(p.branch));
            return py::make_tuple(tr.collapsed, pts);
        },
        py::arg("scenario"), py::arg("positions_km"), py::arg("threshold") = 0.1);

    m.def(
        "run_command",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run_command(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        "Runs a command-line subcommand in process; returns (exit_code, stdout, stderr).", py::arg("args"));
}
