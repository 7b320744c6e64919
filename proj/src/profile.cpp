#include "electroad/profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "electroad/concurrency.hpp"
#include "electroad/errors.hpp"

namespace electroad {

namespace {

ProfileSeries run_steps(const Scenario& scn, const DeviationSource& deviations, const SolverConfig& cfg, int sample) {
    scn.validate();
    const Network net = scn.build_network();
    const PowerFlowModel model(net);
    const int steps = scn.time_steps;
    const int n = net.size();

    ProfileSeries series;
    series.voltage.resize(steps, n);
    series.solutions.reserve(steps);
    for (int t = 1; t <= steps; ++t) {
        std::vector<VehicleDeviation> draw;
        if (deviations) draw = deviations(t);
        const InjectionVector inj = snapshot_injections(scn, t, draw);
        try {
            VoltageSolution v = solve(model, inj, cfg);
            for (int i = 0; i < n; ++i) series.voltage(t - 1, i) = v.magnitude[i];
            series.solutions.push_back(std::move(v));
        } catch (const NonConvergence& e) {
            throw StepNonConvergence("step " + std::to_string(t) + ": " + e.what(), t, sample);
        } catch (const SingularJacobian& e) {
            throw StepNonConvergence("step " + std::to_string(t) + ": " + e.what(), t, sample);
        }
    }
    return series;
}

}  // namespace

ProfileSeries simulate_profiles(const Scenario& scn, const DeviationSource& deviations, const SolverConfig& cfg) {
    return run_steps(scn, deviations, cfg, -1);
}

ProfileSeries simulate_sample(const Scenario& scn, int sample) {
    if (!scn.variation) throw InvalidInput("scenario has no variation settings");
    const VariationSpec spec = *scn.variation;
    const int vehicles = scn.vehicle_count();
    DeviationSource source = [&](int step) { return sample_variation(spec, scn.ev, vehicles, step, sample); };
    return run_steps(scn, source, SolverConfig{}, sample);
}

LowerBoundLine lower_bound_line(const Scenario& scn, const ProfileSeries& series) {
    const Network net = scn.build_network();
    if (series.buses() != net.size()) throw InvalidInput("profile series does not match the scenario network");

    LowerBoundLine line;
    line.v1 = net.slack_voltage();
    const Branch& head = net.branches().front();
    for (const auto& v : series.solutions) {
        const Complex current = (v.phasor(head.from_bus - 1) - v.phasor(head.to_bus - 1)) / head.impedance();
        line.i_max = std::max(line.i_max, std::abs(current));
    }
    for (const Complex& z : cumulative_impedance(net)) {
        line.z.push_back(std::abs(z));
        line.values.push_back(line.v1 - line.i_max * std::abs(z));
    }
    return line;
}

SwingSeries swing_series(const ProfileSeries& series, int bus) {
    if (bus < 1 || bus > series.buses()) throw InvalidInput("bus " + std::to_string(bus) + " outside the feeder");
    SwingSeries out;
    for (int t = 1; t <= series.steps(); ++t) out.values.push_back(series.at(t, bus));
    if (!out.values.empty()) {
        const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
        out.peak_to_peak = *hi - *lo;
    }
    return out;
}

std::vector<int> representative_steps(int time_steps) {
    std::vector<int> steps{1, (time_steps + 1) / 2, time_steps};
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    return steps;
}

std::vector<Envelope> monte_carlo_envelope(const Scenario& scn, int samples, std::vector<int> steps) {
    if (!scn.variation) throw InvalidInput("Monte Carlo envelope requires variation settings");
    if (samples < 1) throw InvalidInput("samples must be at least 1");
    if (steps.empty())
        for (int t = 1; t <= scn.time_steps; ++t) steps.push_back(t);
    for (int t : steps)
        if (t < 1 || t > scn.time_steps) throw InvalidInput("selected step outside the simulation");

    std::vector<ProfileSeries> runs(static_cast<std::size_t>(samples));
    parallel_for(runs.size(), [&](std::size_t s) { runs[s] = simulate_sample(scn, static_cast<int>(s)); });

    const int n = scn.network.num_nodes;
    std::vector<Envelope> out;
    for (int t : steps) {
        Envelope env;
        env.step = t;
        env.min.assign(n, INFINITY);
        env.max.assign(n, -INFINITY);
        env.mean.assign(n, 0.0);
        for (const auto& run : runs) {
            for (int i = 0; i < n; ++i) {
                const double v = run.voltage(t - 1, i);
                env.min[i] = std::min(env.min[i], v);
                env.max[i] = std::max(env.max[i], v);
                env.mean[i] += v;
            }
        }
        for (int i = 0; i < n; ++i) {
            env.mean[i] /= samples;
            // Rounding in the running sum must not push the mean outside [min, max].
            env.mean[i] = std::clamp(env.mean[i], env.min[i], env.max[i]);
        }
        out.push_back(std::move(env));
    }
    return out;
}

std::pair<ProfileSeries, ProfileSeries> extreme_profiles(const Scenario& scn) {
    const double f = scn.variation ? scn.variation->fraction : 0.0;
    const int vehicles = scn.vehicle_count();
    auto fixed = [&](double sign) {
        return [=, &scn](int) {
            return std::vector<VehicleDeviation>(static_cast<std::size_t>(vehicles),
                                                 VehicleDeviation{sign * f * scn.ev.p_kw, sign * f * scn.ev.q_kvar});
        };
    };
    return {simulate_profiles(scn, fixed(+1.0)), simulate_profiles(scn, fixed(-1.0))};
}

}  // namespace electroad
