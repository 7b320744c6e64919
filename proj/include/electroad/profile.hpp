#pragma once

// Time-stepped voltage profiles and the quantities derived from them.

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "electroad/powerflow.hpp"
#include "electroad/road.hpp"

namespace electroad {

struct ProfileSeries {
    Eigen::MatrixXd voltage;                 // voltage(t-1, bus-1), pu
    std::vector<VoltageSolution> solutions;  // one converged solve per step

    int steps() const noexcept { return static_cast<int>(voltage.rows()); }
    int buses() const noexcept { return static_cast<int>(voltage.cols()); }
    /// 1-based step and bus.
    double at(int t, int bus) const { return voltage(t - 1, bus - 1); }
};

struct LowerBoundLine {
    double v1 = 1.0;
    double i_max = 0.0;          // pu
    std::vector<double> z;       // |cumulative impedance| from the slack, pu
    std::vector<double> values;  // v1 - i_max * z
};

struct SwingSeries {
    std::vector<double> values;  // V[t][bus] for t = 1..T
    double peak_to_peak = 0.0;
};

struct Envelope {
    int step = 1;
    std::vector<double> min;
    std::vector<double> mean;
    std::vector<double> max;
};

/// Returns the per-vehicle deviations for a 1-based step; an empty function means none.
using DeviationSource = std::function<std::vector<VehicleDeviation>(int step)>;

/// Flat-start solve per step. Throws StepNonConvergence naming the failing step.
ProfileSeries simulate_profiles(const Scenario& scn, const DeviationSource& deviations = {},
                                const SolverConfig& cfg = {});

/// Profiles for one Monte Carlo draw of the scenario's variation settings.
ProfileSeries simulate_sample(const Scenario& scn, int sample);

/// I_max is the largest slack-branch current magnitude over all steps.
LowerBoundLine lower_bound_line(const Scenario& scn, const ProfileSeries& series);

SwingSeries swing_series(const ProfileSeries& series, int bus);

/// Steps {1, mid, T} with duplicates removed.
std::vector<int> representative_steps(int time_steps);

/// Per-bus min/mean/max over `samples` independent draws, for each selected step
/// (all steps when `steps` is empty). Requires scn.variation.
std::vector<Envelope> monte_carlo_envelope(const Scenario& scn, int samples, std::vector<int> steps = {});

/// Deterministic profiles with every vehicle at its lightest and heaviest load within the variation interval.
std::pair<ProfileSeries, ProfileSeries> extreme_profiles(const Scenario& scn);

}  // namespace electroad
