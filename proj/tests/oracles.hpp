#pragma once

// Independent reference computations used only by the tests. None of these call into the
// solver paths they are used to check.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Central finite differences of f around x.
inline Eigen::MatrixXd finite_difference_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                                  const Eigen::VectorXd& x, double step = 1e-6) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd j(f0.size(), x.size());
    for (int k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += step;
        xm(k) -= step;
        j.col(k) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return j;
}

/// Textbook quadratic formula for U^2 + b U + c = 0; returns {larger, smaller} or empty.
inline std::vector<double> quadratic_roots(double b, double c) {
    const double d = b * b - 4.0 * c;
    if (d < 0.0) return {};
    return {(-b + std::sqrt(d)) / 2.0, (-b - std::sqrt(d)) / 2.0};
}

/// Two-bus coefficients written directly from P, Q, R, X (no tangent/secant form).
inline std::pair<double, double> two_bus_coefficients(double v1, double p, double q, double r, double x) {
    return {2.0 * (p * r + q * x) - v1 * v1, (p * p + q * q) * (r * r + x * x)};
}

/// Resistance at which the two-bus discriminant vanishes, for fixed P, tan(phi), tan(theta).
/// With a = P R: (V1^2 - 2 a k)^2 = 4 a^2 s^2, k = 1 + tan(phi) tan(theta), s = sec(phi) sec(theta),
/// whose admissible root is a = V1^2 / (2 (k + s)).
inline double two_bus_critical_resistance(double v1, double p, double tan_phi, double tan_theta) {
    const double k = 1.0 + tan_phi * tan_theta;
    const double s = std::sqrt((1.0 + tan_phi * tan_phi) * (1.0 + tan_theta * tan_theta));
    return v1 * v1 / (2.0 * (k + s)) / p;
}

/// Backward/forward sweep on a uniform feeder: bus 1 at v1, identical series z per segment,
/// per-bus constant-power consumption `load` (0-based; entry 0 ignored). Fixed-point, no Newton.
inline std::vector<double> sweep_magnitudes(std::complex<double> z, const std::vector<std::complex<double>>& load,
                                            double v1, int iterations = 500) {
    const int n = static_cast<int>(load.size());
    std::vector<std::complex<double>> v(n, v1);
    for (int it = 0; it < iterations; ++it) {
        std::vector<std::complex<double>> branch(n, 0.0);
        std::complex<double> acc = 0.0;
        for (int i = n - 1; i >= 1; --i) {
            acc += std::conj(load[i] / v[i]);
            branch[i] = acc;
        }
        for (int i = 1; i < n; ++i) v[i] = v[i - 1] - z * branch[i];
    }
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = std::abs(v[i]);
    return out;
}

}  // namespace oracle
