#pragma once

// Polar Newton-Raphson power flow for a feeder with one slack bus and PQ buses.
//
// Unknowns are ordered [theta_2..theta_n, V_2..V_n]; mismatches [dP_2..dP_n, dQ_2..dQ_n],
// each specified-minus-computed. Loads are negative injections.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "electroad/grid.hpp"

namespace electroad {

/// Per-bus specified injection in pu, 0-based storage; the slack entry is ignored by the solver.
struct InjectionVector {
    std::vector<double> p;
    std::vector<double> q;

    static InjectionVector zeros(int n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
    int size() const noexcept { return static_cast<int>(p.size()); }
    /// Adds `s` (pu) at 1-based `bus`.
    void add(int bus, Complex s);
    Complex at(int bus) const { return {p.at(bus - 1), q.at(bus - 1)}; }
};

struct VoltageSolution {
    std::vector<double> magnitude;  // pu, 0-based by bus
    std::vector<double> angle;      // radians
    int iterations = 0;
    double residual_norm = 0.0;

    static VoltageSolution flat(int n, double slack_voltage);
    int size() const noexcept { return static_cast<int>(magnitude.size()); }
    Complex phasor(int index0) const { return std::polar(magnitude[index0], angle[index0]); }
    double min_magnitude() const;
};

struct SolverConfig {
    double tolerance = 1e-8;  // infinity norm of the mismatch, pu
    int max_iterations = 50;
    std::optional<VoltageSolution> warm_start;  // flat start when empty

    void validate() const;
};

/// Admittance matrix plus slack reference: everything the Newton iteration needs.
class PowerFlowModel {
public:
    explicit PowerFlowModel(const Network& net);
    PowerFlowModel(AdmittanceMatrix y, double slack_voltage);

    int size() const noexcept { return static_cast<int>(y_.rows()); }
    const AdmittanceMatrix& admittance() const noexcept { return y_; }
    double slack_voltage() const noexcept { return slack_voltage_; }

private:
    AdmittanceMatrix y_;
    double slack_voltage_;
};

/// Computed complex power injection S_i = v_i conj((Y v)_i) for every bus.
Eigen::VectorXcd bus_power(const PowerFlowModel& model, const VoltageSolution& v);

Eigen::VectorXd residual(const PowerFlowModel& model, const InjectionVector& inj, const VoltageSolution& v);
Eigen::VectorXd residual(const Network& net, const InjectionVector& inj, const VoltageSolution& v);

/// d(mismatch)/d(theta, V) over the PQ buses.
Eigen::MatrixXd jacobian(const PowerFlowModel& model, const VoltageSolution& v);
Eigen::MatrixXd jacobian(const Network& net, const VoltageSolution& v);

/// Stops once the mismatch is within tolerance, then applies one polishing correction (counted in
/// `iterations`) when it reduces the mismatch. Throws NonConvergence or SingularJacobian.
VoltageSolution solve(const PowerFlowModel& model, const InjectionVector& inj, const SolverConfig& cfg = {});
VoltageSolution solve(const Network& net, const InjectionVector& inj, const SolverConfig& cfg = {});

/// Complex power delivered by the slack bus at a solution.
Complex slack_injection(const Network& net, const VoltageSolution& v);

/// Total series loss over all branches.
Complex series_losses(const Network& net, const VoltageSolution& v);

/// State vector [theta_2..theta_n, V_2..V_n] and its inverse (slack entries taken from `like`).
Eigen::VectorXd pack_state(const VoltageSolution& v);
VoltageSolution unpack_state(const Eigen::VectorXd& x, double slack_voltage);

}  // namespace electroad
