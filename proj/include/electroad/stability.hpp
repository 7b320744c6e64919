#pragma once

// Long-term voltage stability of an electrified road: the analytic two-bus quadratic,
// voltage versus road-length nose curves, critical length, maximum fleet size and
// quasi-steady-state collapse tracking.

#include <optional>
#include <string>
#include <vector>

#include "electroad/continuation.hpp"
#include "electroad/powerflow.hpp"
#include "electroad/road.hpp"

namespace electroad {

/// Slack bus feeding one PQ load through R + jX, all per unit.
struct TwoBusCase {
    double v1 = 1.0;
    double p = 0.0;
    double q = 0.0;
    double r = 0.0;
    double x = 0.0;

    double tan_phi() const { return q / p; }
    double tan_theta() const { return x / r; }
    /// Load P + jQ scaled by s at constant power factor.
    TwoBusCase with_load_scaled(double s) const { return {v1, p * s, q * s, r, x}; }
    /// Line R + jX scaled by s at constant X/R.
    TwoBusCase with_line_scaled(double s) const { return {v1, p, q, r * s, x * s}; }
};

/// U^2 + b U + c = 0 in U = V2^2.
struct TwoBusQuadratic {
    double b = 0.0;
    double c = 0.0;

    double discriminant() const { return b * b - 4.0 * c; }
};

struct TwoBusRoots {
    double u_high = 0.0;
    double u_low = 0.0;
};

/// Coefficients in the constant power-factor, constant X/R form; when p or r is zero the
/// ratios are undefined and the equivalent expanded form 2(PR + QX), (P^2 + Q^2)(R^2 + X^2) is used.
TwoBusQuadratic two_bus_quadratic(const TwoBusCase& c);

/// Both real roots in U; throws NoSolution when the discriminant is negative.
TwoBusRoots two_bus_roots(const TwoBusCase& c);

/// True iff scaling P (with Q) by `scale` gives the same roots as scaling R (with X), within 1e-12.
bool two_bus_pr_equivalence_check(const TwoBusCase& c, double scale);

/// Load of the scenario with every fleet at its final-step position and no random variation.
InjectionVector critical_injections(const Scenario& scn);

/// Certificate of infeasibility: Newton fails from the flat start and from `extra_starts`
/// seeded random starts with magnitudes in [0.3, 1.1] pu.
bool certified_infeasible(const PowerFlowModel& model, const InjectionVector& inj, int extra_starts = 8,
                          const std::vector<VoltageSolution>& hints = {});

enum class CurveBranch { upper, lower };
std::string to_string(CurveBranch b);

struct CurvePoint {
    double length_km = 0.0;
    double end_voltage = 0.0;  // magnitude at the last bus
    VoltageSolution solution;
    CurveBranch branch = CurveBranch::upper;
};

struct NoseCurve {
    double start_km = 0.0;
    std::vector<CurvePoint> points;  // arc order: upper branch, nose (on both branches), lower branch
    CurvePoint nose;

    std::vector<const CurvePoint*> branch(CurveBranch b) const;
};

struct TraceOptions {
    ArcSettings arc;
    double lower_floor_voltage = 0.02;  // stop the lower branch once any bus drops below this
    int max_points = 20000;
};

/// Traces the end-bus voltage against road length from `start_km` through the fold and back
/// along the lower branch to `start_km`. Throws TraceStall if the step underflows or `stop_km`
/// is reached before the fold.
NoseCurve trace_nose_curve(const Scenario& scn, double start_km, double stop_km, const TraceOptions& opts = {});

/// Solutions at `length_km` obtained by Newton from the nearest upper- and lower-branch points
/// (at most one per branch; distinct).
std::vector<VoltageSolution> solutions_at_length(const Scenario& scn, const NoseCurve& curve, double length_km);

struct CriticalLength {
    double length_km = 0.0;       // largest length certified feasible
    double bracket_km = 0.0;      // width of the feasible/infeasible bracket
    double nose_length_km = 0.0;  // fold location from the trace
    double nose_voltage = 0.0;
};

struct CriticalOptions {
    double start_km = 0.0;        // 0: scenario road length
    double bracket_km = 1e-3;     // target bracket width
    double stop_factor = 1000.0;  // trace range end as a multiple of start
};

CriticalLength critical_length(const Scenario& scn, const CriticalOptions& opts = {});

struct VehicleCountResult {
    int max_count = 0;
    std::vector<int> counts;     // 1..cap
    std::vector<bool> feasible;  // per count
};

/// Placement used for fleet-size studies: m vehicles ending at the last node, trailing at the
/// scenario's spacing and wrapping back onto the road end once the PQ nodes are used up.
std::vector<int> end_of_road_positions(int count, int num_nodes, int spacing_nodes);

/// Largest m <= cap whose end-of-road configuration has a solution. Throws InfeasibleAtOne.
VehicleCountResult max_vehicle_count(const Scenario& scn, double road_length_km, int cap);

struct PlanStep {
    int step = 0;
    double position_km = 0.0;
};

/// Positions of the fleet head over time. The feeder is taken to end at the fleet head, so a
/// position is the effective road length behind the fleet.
struct DrivePlan {
    std::vector<PlanStep> steps;

    void validate() const;
};

enum class TrackBranch { upper, lower, collapsed };
std::string to_string(TrackBranch b);

struct TrajectoryPoint {
    int step = 0;
    double position_km = 0.0;
    double min_voltage = 0.0;
    TrackBranch branch = TrackBranch::upper;
    std::optional<VoltageSolution> solution;
};

struct CollapseTrajectory {
    std::vector<TrajectoryPoint> points;
    bool collapsed = false;
    int critical_step = -1;  // first plan step past the nose, or -1
    int collapse_step = -1;
    double nose_length_km = 0.0;  // 0 when the nose was never reached
};

struct CollapseOptions {
    double collapse_threshold = 0.1;
    ArcSettings arc;
};

/// Warm-started tracking along the plan. Past the nose the state moves to the lower branch and
/// stays there; collapse is declared below the threshold or on loss of convergence.
CollapseTrajectory collapse_trajectory(const Scenario& scn, const DrivePlan& plan, const CollapseOptions& opts = {});

}  // namespace electroad
