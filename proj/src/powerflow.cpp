#include "electroad/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "electroad/errors.hpp"

namespace electroad {

namespace {

constexpr double kMinMagnitude = 1e-4;
constexpr double kMaxMagnitude = 10.0;
constexpr double kSingularRcond = 1e-13;

Eigen::VectorXcd phasors(const VoltageSolution& v) {
    Eigen::VectorXcd out(v.size());
    for (int i = 0; i < v.size(); ++i) out(i) = v.phasor(i);
    return out;
}

bool within_band(const VoltageSolution& v) {
    return std::all_of(v.magnitude.begin(), v.magnitude.end(),
                       [](double m) { return std::isfinite(m) && m > kMinMagnitude && m < kMaxMagnitude; });
}

void check_dimensions(const PowerFlowModel& model, const InjectionVector& inj, const VoltageSolution& v) {
    const int n = model.size();
    if (inj.size() != n || static_cast<int>(inj.q.size()) != n)
        throw InvalidInput("injection vector has " + std::to_string(inj.size()) + " entries, network has " +
                           std::to_string(n));
    if (v.size() != n || static_cast<int>(v.angle.size()) != n) throw InvalidInput("voltage vector size mismatch");
}

}  // namespace

void InjectionVector::add(int bus, Complex s) {
    p.at(bus - 1) += s.real();
    q.at(bus - 1) += s.imag();
}

VoltageSolution VoltageSolution::flat(int n, double slack_voltage) {
    VoltageSolution v;
    v.magnitude.assign(n, 1.0);
    v.angle.assign(n, 0.0);
    if (n > 0) v.magnitude[0] = slack_voltage;
    return v;
}

double VoltageSolution::min_magnitude() const { return *std::min_element(magnitude.begin(), magnitude.end()); }

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw InvalidInput("solver tolerance must be positive");
    if (max_iterations < 1) throw InvalidInput("max_iterations must be at least 1");
}

PowerFlowModel::PowerFlowModel(const Network& net) : y_(build_admittance(net)), slack_voltage_(net.slack_voltage()) {}

PowerFlowModel::PowerFlowModel(AdmittanceMatrix y, double slack_voltage) : y_(std::move(y)), slack_voltage_(slack_voltage) {
    if (y_.rows() != y_.cols() || y_.rows() < 2) throw InvalidInput("admittance matrix must be square, n >= 2");
}

Eigen::VectorXcd bus_power(const PowerFlowModel& model, const VoltageSolution& v) {
    const Eigen::VectorXcd vc = phasors(v);
    const Eigen::VectorXcd current = model.admittance() * vc;
    return vc.cwiseProduct(current.conjugate());
}

Eigen::VectorXd residual(const PowerFlowModel& model, const InjectionVector& inj, const VoltageSolution& v) {
    check_dimensions(model, inj, v);
    const int m = model.size() - 1;
    const Eigen::VectorXcd s = bus_power(model, v);
    Eigen::VectorXd f(2 * m);
    for (int i = 0; i < m; ++i) {
        f(i) = inj.p[i + 1] - s(i + 1).real();
        f(m + i) = inj.q[i + 1] - s(i + 1).imag();
    }
    return f;
}

Eigen::VectorXd residual(const Network& net, const InjectionVector& inj, const VoltageSolution& v) {
    return residual(PowerFlowModel(net), inj, v);
}

Eigen::MatrixXd jacobian(const PowerFlowModel& model, const VoltageSolution& v) {
    const int n = model.size();
    if (v.size() != n) throw InvalidInput("voltage vector size mismatch");
    const auto& y = model.admittance();
    const Eigen::VectorXcd vc = phasors(v);
    const Eigen::VectorXcd current = y * vc;
    Eigen::VectorXcd unit(n);
    for (int i = 0; i < n; ++i) unit(i) = std::polar(1.0, v.angle[i]);

    // dS/dtheta = j diag(v) conj(diag(I) - Y diag(v)),  dS/dV = diag(v) conj(Y diag(u)) + conj(diag(I)) diag(u)
    Eigen::MatrixXcd ds_dtheta = -(y * vc.asDiagonal());
    ds_dtheta.diagonal() += current;
    ds_dtheta = (Complex(0.0, 1.0) * (vc.asDiagonal() * ds_dtheta.conjugate())).eval();

    Eigen::MatrixXcd ds_dv = vc.asDiagonal() * (y * unit.asDiagonal()).conjugate();
    ds_dv.diagonal() += current.conjugate().cwiseProduct(unit);

    const int m = n - 1;
    Eigen::MatrixXd j(2 * m, 2 * m);
    j.block(0, 0, m, m) = -ds_dtheta.block(1, 1, m, m).real();
    j.block(0, m, m, m) = -ds_dv.block(1, 1, m, m).real();
    j.block(m, 0, m, m) = -ds_dtheta.block(1, 1, m, m).imag();
    j.block(m, m, m, m) = -ds_dv.block(1, 1, m, m).imag();
    return j;
}

Eigen::MatrixXd jacobian(const Network& net, const VoltageSolution& v) { return jacobian(PowerFlowModel(net), v); }

Eigen::VectorXd pack_state(const VoltageSolution& v) {
    const int m = v.size() - 1;
    Eigen::VectorXd x(2 * m);
    for (int i = 0; i < m; ++i) {
        x(i) = v.angle[i + 1];
        x(m + i) = v.magnitude[i + 1];
    }
    return x;
}

VoltageSolution unpack_state(const Eigen::VectorXd& x, double slack_voltage) {
    const int m = static_cast<int>(x.size() / 2);
    VoltageSolution v = VoltageSolution::flat(m + 1, slack_voltage);
    for (int i = 0; i < m; ++i) {
        v.angle[i + 1] = x(i);
        v.magnitude[i + 1] = x(m + i);
    }
    return v;
}

VoltageSolution solve(const PowerFlowModel& model, const InjectionVector& inj, const SolverConfig& cfg) {
    cfg.validate();
    const int n = model.size();
    VoltageSolution v = cfg.warm_start ? *cfg.warm_start : VoltageSolution::flat(n, model.slack_voltage());
    check_dimensions(model, inj, v);
    v.magnitude[0] = model.slack_voltage();
    v.angle[0] = 0.0;
    if (!within_band(v)) throw NonConvergence("start point outside the admissible voltage band", 0);

    Eigen::VectorXd f = residual(model, inj, v);
    double norm = f.lpNorm<Eigen::Infinity>();
    for (int it = 0;; ++it) {
        if (norm <= cfg.tolerance) {
            // One extra correction once converged, kept only if it helps: brings the mismatch to
            // round-off so aggregate quantities (slack balance) meet the same tolerance.
            if (it > 0 && norm > 0.0) {
                Eigen::PartialPivLU<Eigen::MatrixXd> lu(jacobian(model, v));
                if (lu.rcond() > kSingularRcond) {
                    VoltageSolution polished =
                        unpack_state(pack_state(v) + lu.solve(-f), model.slack_voltage());
                    if (within_band(polished)) {
                        const double pn = residual(model, inj, polished).lpNorm<Eigen::Infinity>();
                        if (pn < norm) {
                            v = std::move(polished);
                            norm = pn;
                            ++it;
                        }
                    }
                }
            }
            v.iterations = it;
            v.residual_norm = norm;
            return v;
        }
        if (it == cfg.max_iterations)
            throw NonConvergence("Newton iteration cap reached (residual " + std::to_string(norm) + ")", it);

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jacobian(model, v));
        const double rcond = lu.rcond();
        if (!(rcond > kSingularRcond)) throw SingularJacobian("power flow Jacobian is singular");
        const Eigen::VectorXd step = lu.solve(-f);
        if (!step.allFinite()) throw SingularJacobian("power flow Jacobian is singular");

        const Eigen::VectorXd x = pack_state(v);
        VoltageSolution trial = unpack_state(x + step, model.slack_voltage());
        Eigen::VectorXd f_trial;
        double trial_norm = 0.0;
        bool ok = within_band(trial);
        if (ok) {
            f_trial = residual(model, inj, trial);
            trial_norm = f_trial.lpNorm<Eigen::Infinity>();
            ok = std::isfinite(trial_norm) && trial_norm <= norm;
        }
        if (!ok) {
            trial = unpack_state(x + 0.5 * step, model.slack_voltage());
            if (!within_band(trial))
                throw NonConvergence("voltage left the admissible band during iteration", it + 1);
            f_trial = residual(model, inj, trial);
            trial_norm = f_trial.lpNorm<Eigen::Infinity>();
            if (!std::isfinite(trial_norm)) throw NonConvergence("non-finite mismatch", it + 1);
        }
        v = std::move(trial);
        f = std::move(f_trial);
        norm = trial_norm;
    }
}

VoltageSolution solve(const Network& net, const InjectionVector& inj, const SolverConfig& cfg) {
    return solve(PowerFlowModel(net), inj, cfg);
}

Complex slack_injection(const Network& net, const VoltageSolution& v) {
    return bus_power(PowerFlowModel(net), v)(net.slack_index() - 1);
}

Complex series_losses(const Network& net, const VoltageSolution& v) {
    Complex total{};
    for (const auto& br : net.branches()) {
        const Complex dv = v.phasor(br.from_bus - 1) - v.phasor(br.to_bus - 1);
        const Complex i = dv / br.impedance();
        total += br.impedance() * std::norm(i);
    }
    return total;
}

}  // namespace electroad
