#include "electroad/grid.hpp"

#include <cmath>
#include <string>

#include "electroad/errors.hpp"

namespace electroad {

PerUnitBase::PerUnitBase(double v_base_volts, double s_base_va) : v_base_(v_base_volts), s_base_(s_base_va) {
    if (!(std::isfinite(v_base_) && v_base_ > 0.0)) throw InvalidInput("v_base must be positive");
    if (!(std::isfinite(s_base_) && s_base_ > 0.0)) throw InvalidInput("s_base must be positive");
}

double to_per_unit(double value_ohms, const PerUnitBase& base) { return value_ohms / base.z_base(); }

Network::Network(std::vector<Bus> buses, std::vector<Branch> branches, PerUnitBase base, double slack_voltage)
    : buses_(std::move(buses)), branches_(std::move(branches)), base_(base), slack_voltage_(slack_voltage) {
    const int n = size();
    if (n < 2) throw InvalidInput("network needs at least 2 buses");
    if (static_cast<int>(branches_.size()) != n - 1)
        throw InvalidInput("radial network must have exactly n-1 branches");
    if (!(std::isfinite(slack_voltage_) && slack_voltage_ > 0.0)) throw InvalidInput("slack voltage must be positive");

    int slack_count = 0;
    for (int i = 0; i < n; ++i) {
        if (buses_[i].index != i + 1) throw InvalidInput("bus indices must be contiguous 1..n");
        if (buses_[i].kind == BusKind::slack) {
            ++slack_count;
            slack_index_ = i + 1;
        }
    }
    if (slack_count != 1) throw InvalidInput("network needs exactly one slack bus");
    if (slack_index_ != 1) throw InvalidInput("the slack bus must be bus 1 on a feeder");

    // Path graph check: each bus has degree <= 2 and the branch set connects 1..n.
    std::vector<int> degree(n + 1, 0);
    std::vector<int> parent(n + 1);
    for (int i = 0; i <= n; ++i) parent[i] = i;
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& br : branches_) {
        if (br.from_bus < 1 || br.from_bus > n || br.to_bus < 1 || br.to_bus > n)
            throw InvalidInput("branch endpoint out of range");
        if (br.from_bus == br.to_bus) throw InvalidInput("branch endpoints must differ");
        if (!(br.r >= 0.0)) throw InvalidInput("branch resistance must be non-negative");
        if (++degree[br.from_bus] > 2 || ++degree[br.to_bus] > 2) throw InvalidInput("network is not a single feeder");
        const int a = find(br.from_bus), b = find(br.to_bus);
        if (a == b) throw InvalidInput("branch set contains a loop");
        parent[a] = b;
    }
    for (int i = 2; i <= n; ++i)
        if (find(i) != find(1)) throw InvalidInput("network is not connected");
}

Network Network::with_impedance_scale(double factor) const {
    if (!(factor > 0.0)) throw InvalidInput("impedance scale must be positive");
    auto branches = branches_;
    for (auto& br : branches) {
        br.r *= factor;
        br.x *= factor;
    }
    return Network(buses_, std::move(branches), base_, slack_voltage_);
}

Network Network::with_added_shunt(int bus, double susceptance_pu) const {
    if (bus < 1 || bus > size()) throw InvalidInput("shunt bus out of range");
    auto buses = buses_;
    buses[bus - 1].shunt_susceptance += susceptance_pu;
    return Network(std::move(buses), branches_, base_, slack_voltage_);
}

double capacitor_susceptance_pu(double kvar, const PerUnitBase& base) { return kvar * 1e3 / base.s_base(); }

Network build_network(const FeederSpec& spec) {
    if (spec.num_nodes < 2) throw InvalidInput("feeder needs at least 2 nodes");
    if (!(std::isfinite(spec.road_length_km) && spec.road_length_km > 0.0))
        throw InvalidInput("road length must be positive");
    if (!(spec.r_ohm_per_km >= 0.0)) throw InvalidInput("cable resistance must be non-negative");

    const PerUnitBase base = spec.base();
    const double seg = spec.segment_km();
    const double r = to_per_unit(spec.r_ohm_per_km * seg, base);
    const double x = to_per_unit(spec.x_ohm_per_km * seg, base);

    std::vector<Bus> buses;
    buses.reserve(spec.num_nodes);
    for (int i = 1; i <= spec.num_nodes; ++i) buses.push_back({i, i == 1 ? BusKind::slack : BusKind::pq, 0.0});
    for (const auto& bank : spec.capacitor_banks) {
        if (bank.bus < 1 || bank.bus > spec.num_nodes)
            throw InvalidInput("capacitor bank at bus " + std::to_string(bank.bus) + " is outside the feeder");
        buses[bank.bus - 1].shunt_susceptance += capacitor_susceptance_pu(bank.kvar, base);
    }

    std::vector<Branch> branches;
    branches.reserve(spec.num_nodes - 1);
    for (int k = 1; k < spec.num_nodes; ++k) branches.push_back({k, k + 1, r, x});

    return Network(std::move(buses), std::move(branches), base, spec.slack_v_pu);
}

AdmittanceMatrix build_series_admittance(const Network& net) {
    const int n = net.size();
    AdmittanceMatrix y = AdmittanceMatrix::Zero(n, n);
    for (const auto& br : net.branches()) {
        if (br.r == 0.0 && br.x == 0.0) throw InvalidInput("zero-impedance branch");
        const Complex ys = 1.0 / br.impedance();
        const int i = br.from_bus - 1, k = br.to_bus - 1;
        y(i, i) += ys;
        y(k, k) += ys;
        y(i, k) -= ys;
        y(k, i) -= ys;
    }
    return y;
}

Eigen::VectorXd shunt_susceptances(const Network& net) {
    Eigen::VectorXd b(net.size());
    for (const auto& bus : net.buses()) b(bus.index - 1) = bus.shunt_susceptance;
    return b;
}

AdmittanceMatrix build_admittance(const Network& net) {
    AdmittanceMatrix y = build_series_admittance(net);
    for (const auto& bus : net.buses()) y(bus.index - 1, bus.index - 1) += Complex(0.0, bus.shunt_susceptance);
    return y;
}

std::vector<Complex> cumulative_impedance(const Network& net) {
    // Branches of a feeder built by build_network run k -> k+1; walk the path from the slack.
    const int n = net.size();
    std::vector<std::vector<std::pair<int, Complex>>> adj(n + 1);
    for (const auto& br : net.branches()) {
        adj[br.from_bus].push_back({br.to_bus, br.impedance()});
        adj[br.to_bus].push_back({br.from_bus, br.impedance()});
    }
    std::vector<Complex> z(n, Complex{});
    std::vector<bool> seen(n + 1, false);
    std::vector<int> stack{net.slack_index()};
    seen[net.slack_index()] = true;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& [v, zb] : adj[u]) {
            if (seen[v]) continue;
            seen[v] = true;
            z[v - 1] = z[u - 1] + zb;
            stack.push_back(v);
        }
    }
    return z;
}

}  // namespace electroad
