#pragma once

// Radial feeder model: per-unit bases, buses, branches and the bus admittance matrix.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace electroad {

using Complex = std::complex<double>;
using AdmittanceMatrix = Eigen::MatrixXcd;

/// Voltage and power bases. The impedance base is derived, never stored independently.
class PerUnitBase {
public:
    /// Throws InvalidInput unless both bases are strictly positive and finite.
    PerUnitBase(double v_base_volts, double s_base_va);

    double v_base() const noexcept { return v_base_; }
    double s_base() const noexcept { return s_base_; }
    double z_base() const noexcept { return v_base_ * v_base_ / s_base_; }

    bool operator==(const PerUnitBase&) const = default;

private:
    double v_base_;
    double s_base_;
};

double to_per_unit(double value_ohms, const PerUnitBase& base);

enum class BusKind { slack, pq };

struct Bus {
    int index = 1;  // 1-based
    BusKind kind = BusKind::pq;
    double shunt_susceptance = 0.0;  // pu, capacitive positive
};

struct Branch {
    int from_bus = 1;
    int to_bus = 2;
    double r = 0.0;  // pu
    double x = 0.0;  // pu

    Complex impedance() const { return {r, x}; }
};

/// Single-feeder radial network. Bus 1 is the slack; buses are indexed 1..n.
class Network {
public:
    /// Validates the radial invariants (one slack, contiguous indices, path-shaped tree).
    Network(std::vector<Bus> buses, std::vector<Branch> branches, PerUnitBase base, double slack_voltage);

    int size() const noexcept { return static_cast<int>(buses_.size()); }
    const std::vector<Bus>& buses() const noexcept { return buses_; }
    const std::vector<Branch>& branches() const noexcept { return branches_; }
    const Bus& bus(int index) const { return buses_.at(static_cast<std::size_t>(index - 1)); }
    const PerUnitBase& base() const noexcept { return base_; }
    double slack_voltage() const noexcept { return slack_voltage_; }
    int slack_index() const noexcept { return slack_index_; }

    /// Copy with every series impedance multiplied by `factor` (shunts unchanged).
    Network with_impedance_scale(double factor) const;
    /// Copy with a shunt susceptance added at `bus`.
    Network with_added_shunt(int bus, double susceptance_pu) const;

private:
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    PerUnitBase base_;
    double slack_voltage_;
    int slack_index_ = 1;
};

struct CapacitorBank {
    int bus = 1;
    double kvar = 0.0;

    bool operator==(const CapacitorBank&) const = default;
};

/// Physical description of an electrified road feeder.
struct FeederSpec {
    double road_length_km = 2.0;
    int num_nodes = 10;
    double r_ohm_per_km = 0.568;
    double x_ohm_per_km = 0.133;
    double v_base_kv = 6.0;
    double s_base_mva = 1.0;
    double slack_v_pu = 1.0;
    std::vector<CapacitorBank> capacitor_banks;

    PerUnitBase base() const { return PerUnitBase(v_base_kv * 1e3, s_base_mva * 1e6); }
    double segment_km() const { return road_length_km / (num_nodes - 1); }

    bool operator==(const FeederSpec&) const = default;
};

/// n evenly spaced nodes give n-1 branches of length L/(n-1); banks become constant shunt susceptance.
Network build_network(const FeederSpec& spec);

/// Capacitor rating in kVAr as per-unit susceptance at nominal voltage.
double capacitor_susceptance_pu(double kvar, const PerUnitBase& base);

AdmittanceMatrix build_admittance(const Network& net);

/// Series (branch) part of the admittance matrix only.
AdmittanceMatrix build_series_admittance(const Network& net);

/// Per-bus shunt susceptances, 0-based.
Eigen::VectorXd shunt_susceptances(const Network& net);

/// Cumulative series impedance from the slack to each bus (0-based, first entry 0).
std::vector<Complex> cumulative_impedance(const Network& net);

}  // namespace electroad
