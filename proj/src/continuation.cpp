#include "electroad/continuation.hpp"

#include <cmath>

#include "electroad/errors.hpp"

namespace electroad {

namespace {

bool state_admissible(const Eigen::VectorXd& x, double mu) {
    if (!x.allFinite() || !std::isfinite(mu) || mu <= 0.0) return false;
    const int m = static_cast<int>(x.size() / 2);
    for (int i = 0; i < m; ++i)
        if (!(x(m + i) > 1e-4 && x(m + i) < 10.0)) return false;
    return true;
}

}  // namespace

LengthFamily::LengthFamily(const FeederSpec& feeder, InjectionVector load) : load_(std::move(load)) {
    FeederSpec unit = feeder;
    unit.road_length_km = 1.0;
    const Network net = build_network(unit);
    series_1km_ = build_series_admittance(net);
    shunt_ = shunt_susceptances(net);
    slack_voltage_ = net.slack_voltage();
    if (load_.size() != net.size()) throw InvalidInput("load vector does not match the feeder");
}

PowerFlowModel LengthFamily::model_at(double length_km) const {
    if (!(length_km > 0.0)) throw InvalidInput("road length must be positive");
    AdmittanceMatrix y = series_1km_ / length_km;
    for (int i = 0; i < buses(); ++i) y(i, i) += Complex(0.0, shunt_(i));
    return PowerFlowModel(std::move(y), slack_voltage_);
}

Eigen::VectorXd LengthFamily::residual(const Eigen::VectorXd& x, double length_km) const {
    return electroad::residual(model_at(length_km), load_, unpack_state(x, slack_voltage_));
}

Eigen::MatrixXd LengthFamily::jacobian(const Eigen::VectorXd& x, double length_km) const {
    return electroad::jacobian(model_at(length_km), unpack_state(x, slack_voltage_));
}

Eigen::VectorXd LengthFamily::length_derivative(const Eigen::VectorXd& x, double length_km) const {
    // Mismatch = S_spec - S_shunt - S_series(L) with S_series(L) = S_series(1 km) / L.
    const VoltageSolution v = unpack_state(x, slack_voltage_);
    const PowerFlowModel series(series_1km_, slack_voltage_);
    const Eigen::VectorXcd s1 = bus_power(series, v);
    const int m = buses() - 1;
    const double scale = 1.0 / (length_km * length_km);
    Eigen::VectorXd d(2 * m);
    for (int i = 0; i < m; ++i) {
        d(i) = s1(i + 1).real() * scale;
        d(m + i) = s1(i + 1).imag() * scale;
    }
    return d;
}

ArcTracer::ArcTracer(const LengthFamily& family, double reference_length_km, ArcSettings settings)
    : family_(family), reference_length_km_(reference_length_km), settings_(settings) {
    if (!(reference_length_km_ > 0.0)) throw InvalidInput("reference length must be positive");
}

Eigen::MatrixXd ArcTracer::bordered(const Eigen::VectorXd& x, double mu, const Eigen::VectorXd& last_row) const {
    const int m = family_.state_size();
    const double length = mu * reference_length_km_;
    Eigen::MatrixXd a(m + 1, m + 1);
    a.topLeftCorner(m, m) = family_.jacobian(x, length);
    a.topRightCorner(m, 1) = family_.length_derivative(x, length) * reference_length_km_;
    a.bottomRows(1) = last_row.transpose();
    return a;
}

Eigen::VectorXd ArcTracer::oriented_tangent(const Eigen::VectorXd& x, double mu, const Eigen::VectorXd& reference) const {
    const int m = family_.state_size();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs(m) = 1.0;
    Eigen::VectorXd t = bordered(x, mu, reference).partialPivLu().solve(rhs);
    if (!t.allFinite() || t.norm() == 0.0) throw SingularJacobian("cannot form the arc tangent");
    t.normalize();
    if (t.dot(reference) < 0.0) t = -t;
    return t;
}

ArcPoint ArcTracer::make_point(const Eigen::VectorXd& x, double mu, double direction) const {
    const int m = family_.state_size();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m + 1);
    e(m) = direction >= 0.0 ? 1.0 : -1.0;
    ArcPoint p;
    p.x = x;
    p.mu = mu;
    p.tangent = oriented_tangent(x, mu, e);
    return p;
}

std::optional<ArcPoint> ArcTracer::advance(const ArcPoint& from, double h) const {
    const int m = family_.state_size();
    Eigen::VectorXd z_pred(m + 1);
    z_pred << from.x, from.mu;
    z_pred += h * from.tangent;
    Eigen::VectorXd z = z_pred;

    for (int it = 0; it <= settings_.max_corrector_iterations; ++it) {
        const Eigen::VectorXd x = z.head(m);
        const double mu = z(m);
        if (!state_admissible(x, mu)) return std::nullopt;
        const Eigen::VectorXd f = family_.residual(x, mu * reference_length_km_);
        const double arc = from.tangent.dot(z - z_pred);
        if (f.lpNorm<Eigen::Infinity>() <= settings_.corrector_tolerance && std::abs(arc) <= 1e-12) {
            ArcPoint p;
            p.x = x;
            p.mu = mu;
            p.corrector_iterations = it;
            try {
                p.tangent = oriented_tangent(x, mu, from.tangent);
            } catch (const SingularJacobian&) {
                return std::nullopt;
            }
            return p;
        }
        if (it == settings_.max_corrector_iterations) break;
        Eigen::VectorXd g(m + 1);
        g << f, arc;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bordered(x, mu, from.tangent));
        if (!(lu.rcond() > 1e-14)) return std::nullopt;
        z -= lu.solve(g);
    }
    return std::nullopt;
}

std::pair<ArcPoint, ArcPoint> ArcTracer::locate_fold(const ArcPoint& before, double h, double sign) const {
    double lo = 0.0, hi = h;
    ArcPoint lo_pt = before;
    std::optional<ArcPoint> hi_pt = advance(before, h);
    if (!hi_pt) throw TraceStall("fold bracket lost during refinement");
    // The tangent's mu-component changes sign at the fold; bisect the arclength on it.
    for (int k = 0; k < 60 && hi - lo > 1e-12; ++k) {
        const double mid = 0.5 * (lo + hi);
        auto p = advance(before, mid);
        if (!p) break;
        if (sign * p->tangent_mu() > 0.0) {
            lo = mid;
            lo_pt = *p;
        } else {
            hi = mid;
            hi_pt = *p;
        }
    }
    return {lo_pt, *hi_pt};
}

}  // namespace electroad
