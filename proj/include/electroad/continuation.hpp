#pragma once

// Pseudo-arclength continuation of the feeder power flow in road length.
//
// Every series impedance scales with road length (node count fixed), so Y(L) = Y_1km / L + jB_shunt.
// Arcs live in (x, mu) with x = [theta_2..theta_n, V_2..V_n] and mu = L / L_ref.

#include <optional>

#include <Eigen/Dense>

#include "electroad/grid.hpp"
#include "electroad/powerflow.hpp"
#include "electroad/road.hpp"

namespace electroad {

/// Power flow equations of a feeder as a function of its road length, under a fixed load.
class LengthFamily {
public:
    LengthFamily(const FeederSpec& feeder, InjectionVector load);

    int buses() const noexcept { return static_cast<int>(series_1km_.rows()); }
    int state_size() const noexcept { return 2 * (buses() - 1); }
    double slack_voltage() const noexcept { return slack_voltage_; }
    const InjectionVector& load() const noexcept { return load_; }

    PowerFlowModel model_at(double length_km) const;
    Eigen::VectorXd residual(const Eigen::VectorXd& x, double length_km) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, double length_km) const;
    /// d(residual)/d(length) at fixed x.
    Eigen::VectorXd length_derivative(const Eigen::VectorXd& x, double length_km) const;

private:
    AdmittanceMatrix series_1km_;
    Eigen::VectorXd shunt_;
    double slack_voltage_;
    InjectionVector load_;
};

struct ArcSettings {
    double initial_step = 0.01;  // arclength; about 1% of the reference length near a regular point
    double min_step = 1e-4;
    double corrector_tolerance = 1e-10;
    int max_corrector_iterations = 15;
};

struct ArcPoint {
    Eigen::VectorXd x;
    double mu = 1.0;
    Eigen::VectorXd tangent;  // unit, size state_size + 1; last entry is d(mu)/ds
    int corrector_iterations = 0;

    double tangent_mu() const { return tangent(tangent.size() - 1); }
};

class ArcTracer {
public:
    ArcTracer(const LengthFamily& family, double reference_length_km, ArcSettings settings = {});

    double reference_length() const noexcept { return reference_length_km_; }
    double length_of(const ArcPoint& p) const { return p.mu * reference_length_km_; }
    const ArcSettings& settings() const noexcept { return settings_; }
    const LengthFamily& family() const noexcept { return family_; }

    /// Point at a solved state with tangent oriented along `direction` (+1: mu increasing).
    ArcPoint make_point(const Eigen::VectorXd& x, double mu, double direction) const;

    /// Predictor step of arclength h from `from`, then bordered Newton corrector. The result's
    /// tangent is oriented continuously with from.tangent. Empty on corrector failure.
    std::optional<ArcPoint> advance(const ArcPoint& from, double h) const;

    /// Refines a fold bracketed by `before` (tangent_mu > 0 relative to `sign`) and the arclength
    /// step h that produced a point past it. Returns the points just before and after the fold.
    std::pair<ArcPoint, ArcPoint> locate_fold(const ArcPoint& before, double h, double sign) const;

    VoltageSolution solution(const ArcPoint& p) const { return unpack_state(p.x, family_.slack_voltage()); }

private:
    Eigen::VectorXd oriented_tangent(const Eigen::VectorXd& x, double mu, const Eigen::VectorXd& reference) const;
    Eigen::MatrixXd bordered(const Eigen::VectorXd& x, double mu, const Eigen::VectorXd& last_row) const;

    const LengthFamily& family_;
    double reference_length_km_;
    ArcSettings settings_;
};

}  // namespace electroad
