#include "electroad/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "electroad/errors.hpp"
#include "electroad/profile.hpp"
#include "electroad/scenario_io.hpp"
#include "electroad/stability.hpp"

namespace electroad {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Context {
    std::string scenario_path;
    std::string out_dir = ".";

    Scenario load() const { return scenario_path.empty() ? default_scenario() : parse_scenario_file(scenario_path); }
};

json base_report(const std::string& command, const Scenario& scn) {
    json r;
    r["schema"] = kReportSchema;
    r["command"] = command;
    r["scenario"] = serialize_scenario(scn);
    r["outputs"] = json::array();
    return r;
}

class Emitter {
public:
    explicit Emitter(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    std::string emit(const std::string& name, const std::string& content) {
        const fs::path p = dir_ / name;
        write_file_atomic(p, content);
        written_.push_back(p.string());
        return p.string();
    }

    void finish(json report) {
        const fs::path p = dir_ / "report.json";
        written_.push_back(p.string());
        report["outputs"] = written_;
        write_file_atomic(p, report.dump(2) + "\n");
    }

private:
    fs::path dir_;
    std::vector<std::string> written_;
};

json convergence_summary(const ProfileSeries& series) {
    json steps = json::array();
    int max_it = 0;
    double max_res = 0.0;
    for (std::size_t t = 0; t < series.solutions.size(); ++t) {
        const auto& v = series.solutions[t];
        steps.push_back({{"time_step", t + 1}, {"iterations", v.iterations}, {"residual", v.residual_norm}});
        max_it = std::max(max_it, v.iterations);
        max_res = std::max(max_res, v.residual_norm);
    }
    return {{"steps", steps}, {"max_iterations", max_it}, {"max_residual", max_res}};
}

int cmd_profile(const Context& ctx, bool envelope, bool lower_bound, int samples, std::ostream& out) {
    const Scenario scn = ctx.load();
    const ProfileSeries series = simulate_profiles(scn);
    Emitter emit(ctx.out_dir);
    json report = base_report("profile", scn);
    report["convergence"] = convergence_summary(series);

    std::vector<Envelope> env;
    if (envelope) {
        if (!scn.variation) throw SchemaError("variation", "--envelope requires a variation section");
        env = monte_carlo_envelope(scn, samples > 0 ? samples : scn.variation->samples);
        report["headline"]["envelope_samples"] = samples > 0 ? samples : scn.variation->samples;
    }
    const std::string path = emit.emit("profile.csv", profile_csv(series, envelope ? &env : nullptr));
    report["headline"]["min_voltage_pu"] = series.voltage.minCoeff();
    if (lower_bound) {
        const LowerBoundLine line = lower_bound_line(scn, series);
        emit.emit("lower_bound.csv", lower_bound_csv(line));
        report["headline"]["i_max_pu"] = line.i_max;
    }
    emit.finish(report);
    out << path << '\n';
    return kExitOk;
}

int cmd_swing(const Context& ctx, int bus, std::ostream& out) {
    const Scenario scn = ctx.load();
    const ProfileSeries series = simulate_profiles(scn);
    const SwingSeries swing = swing_series(series, bus);
    Emitter emit(ctx.out_dir);
    json report = base_report("swing", scn);
    report["convergence"] = convergence_summary(series);
    report["headline"] = {{"bus", bus}, {"swing_peak_to_peak_pu", swing.peak_to_peak}};
    const std::string path = emit.emit("swing.csv", swing_csv(swing));
    emit.finish(report);
    out << path << '\n';
    return kExitOk;
}

int cmd_cpf_length(const Context& ctx, double start_km, double stop_km, std::ostream& out) {
    const Scenario scn = ctx.load();
    const double start = start_km > 0.0 ? start_km : scn.network.road_length_km;
    const double stop = stop_km > 0.0 ? stop_km : 1000.0 * start;
    const NoseCurve curve = trace_nose_curve(scn, start, stop);
    CriticalOptions copts;
    copts.start_km = start;
    copts.stop_factor = stop / start;
    const CriticalLength crit = critical_length(scn, copts);

    Emitter emit(ctx.out_dir);
    json report = base_report("cpf-length", scn);
    report["headline"] = {{"nose_length_km", curve.nose.length_km},
                          {"nose_voltage_pu", curve.nose.end_voltage},
                          {"critical_length_km", crit.length_km},
                          {"bracket_km", crit.bracket_km},
                          {"upper_points", curve.branch(CurveBranch::upper).size()},
                          {"lower_points", curve.branch(CurveBranch::lower).size()}};
    report["notes"] = {"infeasibility beyond the critical length is certified operationally (Newton fails from "
                       "the flat start and 8 random starts); it is not a proof",
                       "absolute thresholds scale with the declared voltage base"};
    const std::string path = emit.emit("nose_curve.csv", nose_curve_csv(curve));
    emit.finish(report);
    out << path << '\n';
    return kExitOk;
}

int cmd_cpf_count(const Context& ctx, double length_km, int cap, std::ostream& out) {
    const Scenario scn = ctx.load();
    const VehicleCountResult res = max_vehicle_count(scn, length_km, cap);
    Emitter emit(ctx.out_dir);
    json report = base_report("cpf-count", scn);
    json table = json::array();
    for (std::size_t k = 0; k < res.counts.size(); ++k)
        table.push_back({{"count", res.counts[k]}, {"feasible", static_cast<bool>(res.feasible[k])}});
    report["headline"] = {{"length_km", length_km}, {"cap", cap}, {"max_count", res.max_count}};
    report["feasibility"] = table;
    report["notes"] = {"feasibility is certified operationally (flat start plus 8 random starts); not a proof"};
    emit.finish(report);
    out << res.max_count << '\n';
    return kExitOk;
}

int cmd_collapse(const Context& ctx, const std::string& plan_path, double threshold, std::ostream& out) {
    const Scenario scn = ctx.load();
    const DrivePlan plan = parse_drive_plan_file(plan_path);
    CollapseOptions opts;
    opts.collapse_threshold = threshold;
    const CollapseTrajectory traj = collapse_trajectory(scn, plan, opts);
    Emitter emit(ctx.out_dir);
    json report = base_report("collapse", scn);
    report["headline"] = {{"collapsed", traj.collapsed},
                          {"critical_step", traj.critical_step},
                          {"collapse_step", traj.collapse_step},
                          {"nose_length_km", traj.nose_length_km},
                          {"collapse_threshold_pu", threshold}};
    const std::string path = emit.emit("trajectory.csv", trajectory_csv(traj));
    emit.finish(report);
    out << path << '\n';
    return kExitOk;
}

int cmd_two_bus(const TwoBusCase& c, std::ostream& out) {
    try {
        const TwoBusRoots roots = two_bus_roots(c);
        out << "u_high,u_low,v2_high,v2_low\n"
            << format_number(roots.u_high) << ',' << format_number(roots.u_low) << ','
            << format_number(std::sqrt(std::max(roots.u_high, 0.0))) << ','
            << format_number(std::sqrt(std::max(roots.u_low, 0.0))) << '\n';
    } catch (const NoSolution&) {
        out << "NoSolution\n";
    }
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Steady-state voltage profiles and voltage stability limits of electrified roads", "electroad"};
    app.require_subcommand(1);
    Context ctx;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", ctx.scenario_path, "Scenario JSON file (defaults to the base case)");
        sub->add_option("--out-dir", ctx.out_dir, "Directory for CSV files and report.json")->capture_default_str();
    };

    bool envelope = false, lower_bound = false;
    int samples = 0;
    auto* profile = app.add_subcommand("profile", "Voltage profile for every time step");
    add_common(profile);
    profile->add_flag("--envelope", envelope, "Add Monte Carlo min/mean/max columns");
    profile->add_flag("--lower-bound", lower_bound, "Also emit lower_bound.csv");
    profile->add_option("--samples", samples, "Monte Carlo samples (defaults to variation.samples)")
        ->check(CLI::PositiveNumber);

    int bus = 0;
    auto* swing = app.add_subcommand("swing", "Voltage of one bus over time");
    add_common(swing);
    swing->add_option("--bus", bus, "Bus index")->required();

    double start_km = 0.0, stop_km = 0.0;
    auto* cpf_length = app.add_subcommand("cpf-length", "Voltage versus road length through the nose");
    add_common(cpf_length);
    cpf_length->add_option("--start-km", start_km, "Trace start length (defaults to the scenario length)");
    cpf_length->add_option("--stop-km", stop_km, "Upper bound for the fold search");

    double length_km = 0.0;
    int cap = 20;
    auto* cpf_count = app.add_subcommand("cpf-count", "Maximum number of vehicles on a fixed-length road");
    add_common(cpf_count);
    cpf_count->add_option("--length-km", length_km, "Road length")->required()->check(CLI::PositiveNumber);
    cpf_count->add_option("--cap", cap, "Largest fleet size to test")->capture_default_str()->check(CLI::PositiveNumber);

    std::string plan_path;
    double threshold = 0.1;
    auto* collapse = app.add_subcommand("collapse", "Quasi-steady-state tracking along a drive plan");
    add_common(collapse);
    collapse->add_option("--plan", plan_path, "Drive plan JSON")->required();
    collapse->add_option("--threshold", threshold, "Collapse threshold (pu)")->capture_default_str();

    TwoBusCase two;
    auto* two_bus = app.add_subcommand("two-bus", "Roots of the two-bus voltage quadratic");
    two_bus->add_option("--p", two.p, "Active load (pu)")->required();
    two_bus->add_option("--q", two.q, "Reactive load (pu)")->required();
    two_bus->add_option("--r", two.r, "Line resistance (pu)")->required();
    two_bus->add_option("--x", two.x, "Line reactance (pu)")->required();
    two_bus->add_option("--v1", two.v1, "Slack voltage (pu)")->capture_default_str();

    std::vector<std::string> argv_store{"electroad"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "electroad: " << e.what() << '\n';
        return kExitSchema;
    }

    try {
        if (*profile) return cmd_profile(ctx, envelope, lower_bound, samples, out);
        if (*swing) return cmd_swing(ctx, bus, out);
        if (*cpf_length) return cmd_cpf_length(ctx, start_km, stop_km, out);
        if (*cpf_count) return cmd_cpf_count(ctx, length_km, cap, out);
        if (*collapse) return cmd_collapse(ctx, plan_path, threshold, out);
        if (*two_bus) return cmd_two_bus(two, out);
    } catch (const SchemaError& e) {
        err << "electroad: schema error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const UnitError& e) {
        err << "electroad: unit error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const InvalidInput& e) {
        err << "electroad: invalid input: " << e.what() << '\n';
        return kExitSchema;
    } catch (const PositionOutOfRange& e) {
        err << "electroad: " << e.what() << '\n';
        return kExitSchema;
    } catch (const StepNonConvergence& e) {
        err << "electroad: no converged solution: " << e.what() << '\n';
        return kExitNonConvergence;
    } catch (const std::exception& e) {
        err << "electroad: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace electroad
