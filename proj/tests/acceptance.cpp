// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.
// Usage: acceptance [scenario_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "electroad/cli.hpp"
#include "electroad/errors.hpp"
#include "electroad/scenario_io.hpp"
#include "oracles.hpp"

using namespace electroad;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned.
constexpr double kMonotoneTol = 1e-9;
constexpr double kLowerBoundTol = 1e-6;
constexpr double kSymmetryTol = 1e-10;
constexpr double kHarpTol = 1e-9;
constexpr double kNewtonVsQuadratic = 1e-8;
constexpr double kVietaTol = 1e-12;
constexpr double kResidualTol = 1e-8;
constexpr double kMergeTol = 1e-6;
constexpr double kNoseRelTol = 1e-3;
constexpr double kBracketKm = 1e-3;
constexpr double kRuntimeLimitS = 30.0;
constexpr double kHysteresisMin = 0.1;
constexpr double kCollapseThreshold = 0.1;
constexpr double kNoHysteresisTol = 1e-8;
constexpr double kJacobianRelTol = 1e-5;
constexpr double kBalanceTol = 1e-8;

fs::path g_scenarios = "scenarios";

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Scenario load(const std::string& name) { return parse_scenario_file(g_scenarios / name); }

double balance_error(const Network& net, const InjectionVector& inj, const VoltageSolution& v) {
    Complex load{}, shunt{};
    for (int b = 2; b <= net.size(); ++b) load -= inj.at(b);
    for (int b = 1; b <= net.size(); ++b)
        shunt += Complex(0.0, -net.bus(b).shunt_susceptance) * v.magnitude[b - 1] * v.magnitude[b - 1];
    return std::abs(slack_injection(net, v) - (load + series_losses(net, v) + shunt));
}

Network two_bus_network(const TwoBusCase& c) {
    return Network({{1, BusKind::slack, 0}, {2, BusKind::pq, 0}}, {{1, 2, c.r, c.x}}, PerUnitBase(1e3, 1e6), c.v1);
}

InjectionVector two_bus_load(const TwoBusCase& c) {
    auto inj = InjectionVector::zeros(2);
    inj.add(2, {-c.p, -c.q});
    return inj;
}

// ---------------------------------------------------------------------------------------------

Outcome half_leaf_veins() {
    Outcome o;
    const Scenario scn = load("base.json");
    const auto s = simulate_profiles(scn);
    o.require(s.steps() == 9 && s.buses() == 10, "9 x 10 profile");
    double worst_i = 0.0, worst_t = 0.0;
    for (int t = 1; t <= s.steps(); ++t)
        for (int b = 2; b <= s.buses(); ++b) worst_i = std::max(worst_i, s.at(t, b) - s.at(t, b - 1));
    for (int b = 1; b <= s.buses(); ++b)
        for (int t = 2; t <= s.steps(); ++t) worst_t = std::max(worst_t, s.at(t, b) - s.at(t - 1, b));
    o.require(worst_i <= kMonotoneTol, "non-increasing along the road (max rise " + num(worst_i) + ")");
    o.require(worst_t <= kMonotoneTol, "non-increasing in time (max rise " + num(worst_t) + ")");
    Eigen::Index r = 0, c = 0;
    s.voltage.minCoeff(&r, &c);
    o.require(r + 1 == 9 && c + 1 == 10, "minimum at (t9, bus 10)");
    const auto lb = lower_bound_line(scn, s);
    double over = -1e300;
    for (int b = 1; b <= s.buses(); ++b) over = std::max(over, lb.values[b - 1] - s.voltage.col(b - 1).minCoeff());
    o.require(over <= kLowerBoundTol, "lower bound under the pointwise minimum");
    o.note("max bound excess over minimum " + num(over) + " pu");
    return o;
}

Outcome harp() {
    Outcome o;
    const Scenario scn = load("two_way.json");
    const auto s = simulate_profiles(scn);
    const int T = s.steps();
    double asym = 0.0;
    for (int t = 1; t <= T; ++t)
        for (int b = 1; b <= s.buses(); ++b) asym = std::max(asym, std::abs(s.at(t, b) - s.at(T + 1 - t, b)));
    o.require(asym <= kSymmetryTol, "time symmetry");
    o.note("time asymmetry " + num(asym));

    const int meet = (T + 1) / 2;
    double above = 0.0, below = 0.0;
    int above_t = 0, above_b = 0;
    for (int t = 1; t <= T; ++t)
        for (int b = 1; b <= s.buses(); ++b) {
            const double up = s.at(t, b) - s.at(1, b);
            if (up > above) {
                above = up;
                above_t = t;
                above_b = b;
            }
            below = std::max(below, s.at(meet, b) - s.at(t, b));
        }
    o.require(below <= kHarpTol, "meeting-step profile is the lower envelope (excess " + num(below) + ")");
    o.require(above <= kHarpTol, "t1 profile is the upper envelope (t" + std::to_string(above_t) + " exceeds it at bus " +
                                     std::to_string(above_b) + " by " + num(above) + " pu)");
    const auto sw = swing_series(s, 6);
    o.require(sw.peak_to_peak > 0.0, "bus-6 swing");
    o.note("bus-6 swing peak-to-peak " + num(sw.peak_to_peak) + " pu");
    return o;
}

Outcome compensation_ordering() {
    Outcome o;
    const Scenario base = load("base.json");
    const auto bus6 = [](const Scenario& s) { return simulate_profiles(s).at(s.time_steps, 6); };
    Scenario pv = base, onboard = base, bank = base;
    pv.compensation.pv_kw_per_vehicle = 2.0;
    onboard.compensation.onboard_capacitor_kvar_per_vehicle = 100.0;
    bank.compensation.capacitor_banks = {{6, 300.0}};
    const double v0 = bus6(base), v1 = bus6(pv), v2 = bus6(onboard), v3 = bus6(bank);
    o.require(v3 >= v2 && v2 >= v1 && v1 >= v0, "bank >= on-board >= PV >= none");
    o.note("none " + num(v0) + ", PV " + num(v1) + ", on-board " + num(v2) + ", bank " + num(v3));
    return o;
}

Outcome envelope_growth() {
    Outcome o;
    Scenario narrow = load("variation.json");
    Scenario wide = narrow;
    narrow.variation->fraction = 0.25;
    wide.variation->fraction = 0.5;
    const auto en = monte_carlo_envelope(narrow, 200);
    const auto ew = monte_carlo_envelope(wide, 200);
    const auto [light, heavy] = extreme_profiles(wide);
    double min_gain = 1e300, outside = 0.0;
    for (std::size_t k = 0; k < ew.size(); ++k) {
        const int t = ew[k].step;
        for (int b = 1; b <= narrow.network.num_nodes; ++b) {
            if (b > 1) {
                const double gain = (ew[k].max[b - 1] - ew[k].min[b - 1]) - (en[k].max[b - 1] - en[k].min[b - 1]);
                min_gain = std::min(min_gain, gain);
            }
            outside = std::max({outside, heavy.at(t, b) - ew[k].min[b - 1], ew[k].max[b - 1] - light.at(t, b),
                                heavy.at(t, b) - en[k].min[b - 1], en[k].max[b - 1] - light.at(t, b)});
        }
    }
    o.require(min_gain > 0.0, "width strictly grows on every load bus");
    o.require(outside <= 1e-12, "envelopes within the extreme-load profiles");
    o.note("smallest width gain " + num(min_gain) + " pu over 9 steps x 9 load buses, 200 samples");
    return o;
}

Outcome two_bus_oracle() {
    Outcome o;
    std::mt19937_64 rng(20190517);
    std::uniform_real_distribution<double> up(0.01, 1.0), tphi(-0.5, 1.0), ur(0.01, 0.5), tth(0.05, 3.0),
        v1d(0.95, 1.05), scale(0.1, 4.0);
    int feasible = 0, infeasible = 0;
    double newton_err = 0.0, vieta_sum = 0.0, vieta_prod = 0.0;
    int symmetry_fail = 0, infeasible_fail = 0, newton_fail = 0;
    while (feasible < 1000) {
        const double p = up(rng), r = ur(rng);
        const TwoBusCase c{v1d(rng), p, p * tphi(rng), r, r * tth(rng)};
        const auto [b, cc] = oracle::two_bus_coefficients(c.v1, c.p, c.q, c.r, c.x);
        if (b * b - 4.0 * cc < 0.0) {
            ++infeasible;
            try {
                solve(two_bus_network(c), two_bus_load(c));
                ++infeasible_fail;
            } catch (const NonConvergence&) {
            } catch (const SingularJacobian&) {
                ++infeasible_fail;
            }
            continue;
        }
        ++feasible;
        const auto roots = two_bus_roots(c);
        vieta_sum = std::max(vieta_sum, std::abs(roots.u_high + roots.u_low + b));
        vieta_prod = std::max(vieta_prod, std::abs(roots.u_high * roots.u_low - cc));
        if (!two_bus_pr_equivalence_check(c, scale(rng))) ++symmetry_fail;
        try {
            const auto sol = solve(two_bus_network(c), two_bus_load(c));
            newton_err = std::max(newton_err, std::abs(sol.magnitude[1] - std::sqrt(roots.u_high)));
        } catch (const Error&) {
            ++newton_fail;
        }
    }
    o.require(newton_fail == 0 && newton_err <= kNewtonVsQuadratic,
              "Newton vs sqrt(U_high) (" + std::to_string(newton_fail) + " failures, max err " + num(newton_err) + ")");
    o.require(vieta_sum <= kVietaTol && vieta_prod <= kVietaTol,
              "Vieta (sum " + num(vieta_sum) + ", product " + num(vieta_prod) + ")");
    o.require(symmetry_fail == 0, "P.R exchange symmetry");
    o.require(infeasible > 0 && infeasible_fail == 0,
              "infeasible instances raise NonConvergence (" + std::to_string(infeasible_fail) + " of " +
                  std::to_string(infeasible) + " did not)");
    o.note(std::to_string(feasible) + " feasible, " + std::to_string(infeasible) + " infeasible; max Newton error " +
           num(newton_err));
    return o;
}

Outcome nose_curve() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario scn = load("stress.json");
    const auto curve = trace_nose_curve(scn, scn.network.road_length_km, 1000.0 * scn.network.road_length_km);
    const double nose = curve.nose.length_km;

    const double probe = 0.8 * nose;
    const auto sols = solutions_at_length(scn, curve, probe);
    FeederSpec f = scn.feeder();
    f.road_length_km = probe;
    const PowerFlowModel model(build_network(f));
    const auto inj = critical_injections(scn);
    double worst_res = 0.0;
    for (const auto& s : sols) worst_res = std::max(worst_res, residual(model, inj, s).cwiseAbs().maxCoeff());
    const bool distinct = sols.size() == 2 && std::abs(sols[0].magnitude.back() - sols[1].magnitude.back()) > 1e-3;
    o.require(distinct && worst_res <= kResidualTol, "two solutions below critical (residual " + num(worst_res) + ")");

    // the branches meet at the fold: first lower point against the nose
    const auto lower = curve.branch(CurveBranch::lower);
    const double merge = lower.empty() ? 1.0 : std::abs(lower.front()->end_voltage - curve.nose.end_voltage);
    o.require(merge <= kMergeTol, "branch merge at the nose (gap " + num(merge) + " pu)");

    const Scenario two = load("two_bus_stress.json");
    const auto two_curve = trace_nose_curve(two, two.network.road_length_km, 1000.0 * two.network.road_length_km);
    const double p = two.ev.p_kw * 1e3 / (two.network.s_base_mva * 1e6);
    const double z_base = std::pow(two.network.v_base_kv * 1e3, 2) / (two.network.s_base_mva * 1e6);
    const double analytic = oracle::two_bus_critical_resistance(two.network.slack_v_pu, p, two.ev.q_kvar / two.ev.p_kw,
                                                                two.network.x_ohm_per_km / two.network.r_ohm_per_km) *
                            z_base / two.network.r_ohm_per_km;
    const double rel = std::abs(two_curve.nose.length_km - analytic) / analytic;
    o.require(rel <= kNoseRelTol, "two-bus nose vs analytic (rel err " + num(rel) + ")");

    const auto cl = critical_length(scn);
    o.require(cl.bracket_km <= kBracketKm, "critical-length bracket " + num(cl.bracket_km * 1e3) + " m");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= kRuntimeLimitS, "runtime " + num(secs) + " s");
    o.note("nose " + num(nose) + " km at " + num(curve.nose.end_voltage) + " pu; critical " + num(cl.length_km) +
           " km; two-bus " + num(two_curve.nose.length_km) + " km vs " + num(analytic) + " km; " + num(secs) + " s");
    return o;
}

Outcome pv_monotonicity() {
    Outcome o;
    const Scenario base = load("stress.json");
    std::vector<double> lengths;
    for (double dp : {0.0, 1.0, 2.0}) {
        Scenario s = base;
        s.compensation.pv_kw_per_vehicle = dp;
        lengths.push_back(critical_length(s).length_km);
    }
    o.require(lengths[0] < lengths[1] && lengths[1] < lengths[2], "critical length strictly increases with PV");
    o.note("0/1/2 kW: " + num(lengths[0]) + " / " + num(lengths[1]) + " / " + num(lengths[2]) + " km");
    return o;
}

Outcome vehicle_count() {
    Outcome o;
    const Scenario scn = load("stress.json");
    int previous = 1 << 30;
    bool monotone = true, consistent = true;
    std::string series;
    int at_4km = -1;
    for (double km : {1.0, 2.0, 3.0, 4.0, 5.0}) {
        const auto res = max_vehicle_count(scn, km, 20);
        monotone = monotone && res.max_count <= previous;
        previous = res.max_count;
        for (int m = 1; m <= res.max_count; ++m) consistent = consistent && res.feasible[m - 1];
        if (res.max_count < 20) consistent = consistent && !res.feasible[res.max_count];
        series += (series.empty() ? "" : ", ") + num(km) + " km: " + std::to_string(res.max_count);
        if (km == 4.0) at_4km = res.max_count;
    }
    o.require(monotone, "non-increasing in road length");
    o.require(consistent, "every count up to the maximum is feasible");
    o.note(series);
    o.note("reference: four EVs on a 4-km road; this artifact gives " + std::to_string(at_4km) +
           " at a 1 kV base (non-binding: reference bases unstated)");
    return o;
}

Outcome hysteresis() {
    Outcome o;
    const Scenario scn = load("stress.json");
    const auto plan = parse_drive_plan_file(g_scenarios / "collapse_plan.json");
    CollapseOptions opts;
    opts.collapse_threshold = kCollapseThreshold;
    const auto tr = collapse_trajectory(scn, plan, opts);
    o.require(tr.critical_step > 0, "plan crosses the nose");

    // return position: last step on the way back that revisits a position from before the crossing
    int ret = -1;
    for (std::size_t k = tr.points.size(); k-- > 0;) {
        if (tr.critical_step < 0 || static_cast<int>(k) < tr.critical_step) break;
        if (tr.points[k].branch != TrackBranch::collapsed && tr.points[k].position_km <= 6.0) {
            ret = static_cast<int>(k);
        }
    }
    double gap = 0.0;
    if (ret >= 0) {
        FeederSpec f = scn.feeder();
        f.road_length_km = tr.points[ret].position_km;
        const auto flat = solve(build_network(f), critical_injections(scn));
        gap = std::abs(flat.min_magnitude() - tr.points[ret].min_voltage);
        o.note("at " + num(tr.points[ret].position_km) + " km: tracked " + num(tr.points[ret].min_voltage) +
               " pu vs flat start " + num(flat.min_magnitude()) + " pu");
    }
    o.require(gap > kHysteresisMin, "hysteresis at the return position");

    bool monotone = true;
    double lowest = 1e300;
    for (std::size_t k = std::max(tr.critical_step, 1); k < tr.points.size(); ++k) {
        if (tr.points[k].branch == TrackBranch::collapsed) break;
        monotone = monotone && tr.points[k].min_voltage <= tr.points[k - 1].min_voltage + 1e-12;
        lowest = std::min(lowest, tr.points[k].min_voltage);
    }
    o.require(monotone, "min voltage non-increasing after the crossing");
    o.require(tr.collapsed, "reaches the collapse threshold");

    const auto safe = collapse_trajectory(scn, parse_drive_plan_file(g_scenarios / "safe_plan.json"), opts);
    double worst = 0.0;
    for (std::size_t i = 0; i < safe.points.size(); ++i)
        for (std::size_t j = i + 1; j < safe.points.size(); ++j)
            if (safe.points[i].position_km == safe.points[j].position_km)
                worst = std::max(worst, std::abs(safe.points[i].min_voltage - safe.points[j].min_voltage));
    o.require(!safe.collapsed && safe.critical_step < 0 && worst <= kNoHysteresisTol,
              "control plan shows no hysteresis (" + num(worst) + ")");
    o.note("critical step " + std::to_string(tr.critical_step) + ", collapse step " + std::to_string(tr.collapse_step));
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome numerics() {
    Outcome o;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> z(0.005, 0.15), ld(0.0, 0.3), vm(0.85, 1.05), va(-0.15, 0.05),
        sh(0.0, 0.3);
    std::uniform_int_distribution<int> nd(2, 6);
    double worst_j = 0.0, worst_balance = 0.0;
    int solves = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = nd(rng);
        std::vector<Bus> buses;
        std::vector<Branch> branches;
        for (int i = 1; i <= n; ++i)
            buses.push_back({i, i == 1 ? BusKind::slack : BusKind::pq, trial % 2 && i > 1 ? sh(rng) : 0.0});
        for (int i = 1; i < n; ++i) branches.push_back({i, i + 1, z(rng), z(rng)});
        const Network net(buses, branches, PerUnitBase(6e3, 1e6), 1.0);
        auto inj = InjectionVector::zeros(n);
        for (int b = 2; b <= n; ++b) inj.add(b, {-ld(rng), -ld(rng)});
        auto v = VoltageSolution::flat(n, 1.0);
        for (int i = 1; i < n; ++i) {
            v.magnitude[i] = vm(rng);
            v.angle[i] = va(rng);
        }
        const PowerFlowModel model(net);
        const auto f = [&](const Eigen::VectorXd& x) { return residual(model, inj, unpack_state(x, 1.0)); };
        const Eigen::MatrixXd fd = oracle::finite_difference_jacobian(f, pack_state(v), 1e-6);
        const Eigen::MatrixXd j = jacobian(model, v);
        for (int r = 0; r < j.rows(); ++r)
            for (int c = 0; c < j.cols(); ++c)
                worst_j = std::max(worst_j, std::abs(j(r, c) - fd(r, c)) / std::max(1.0, std::abs(fd(r, c))));
        try {
            const auto sol = solve(net, inj);
            worst_balance = std::max(worst_balance, balance_error(net, inj, sol));
            ++solves;
        } catch (const Error&) {
        }
    }
    for (const char* name : {"base.json", "two_way.json", "compensated_bank.json", "stress.json"}) {
        const Scenario scn = load(name);
        const Network net = scn.build_network();
        const auto s = simulate_profiles(scn);
        for (int t = 1; t <= scn.time_steps; ++t) {
            worst_balance = std::max(worst_balance, balance_error(net, snapshot_injections(scn, t), s.solutions[t - 1]));
            ++solves;
        }
    }
    o.require(worst_j <= kJacobianRelTol, "Jacobian vs finite differences (" + num(worst_j) + ")");
    o.require(worst_balance <= kBalanceTol, "slack power balance (" + num(worst_balance) + " pu)");

    const fs::path root = fs::temp_directory_path() / "electroad_acceptance";
    bool identical = true;
    const std::vector<std::vector<std::string>> commands = {
        {"profile", "--scenario", (g_scenarios / "variation.json").string(), "--envelope", "--lower-bound"},
        {"cpf-length", "--scenario", (g_scenarios / "stress.json").string()},
        {"collapse", "--scenario", (g_scenarios / "stress.json").string(), "--plan",
         (g_scenarios / "collapse_plan.json").string()}};
    for (std::size_t c = 0; c < commands.size(); ++c) {
        const fs::path dir = root / std::to_string(c);
        fs::remove_all(dir);
        fs::create_directories(dir);
        auto args = commands[c];
        args.push_back("--out-dir");
        args.push_back(dir.string());
        std::map<std::string, std::string> first;
        for (int rep = 0; rep < 2; ++rep) {
            std::ostringstream out, err;
            identical = identical && run_command(args, out, err) == kExitOk;
            for (const auto& entry : fs::directory_iterator(dir)) {
                const std::string name = entry.path().filename().string();
                if (rep == 0)
                    first[name] = slurp(entry.path());
                else
                    identical = identical && first.count(name) && first[name] == slurp(entry.path());
            }
        }
    }
    fs::remove_all(root);
    o.require(identical, "byte-identical CLI outputs");
    o.note("Jacobian max rel err " + num(worst_j) + "; balance max " + num(worst_balance) + " pu over " +
           std::to_string(solves) + " solves");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_scenarios = argv[1];
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"half-leaf veins", half_leaf_veins},
        {"harp shape and repetition", harp},
        {"compensation ordering", compensation_ordering},
        {"envelope growth", envelope_growth},
        {"two-bus oracle", two_bus_oracle},
        {"nose curve", nose_curve},
        {"PV monotonicity", pv_monotonicity},
        {"max vehicle count", vehicle_count},
        {"collapse hysteresis", hysteresis},
        {"numerics", numerics},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
