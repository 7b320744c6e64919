#include "electroad/road.hpp"

#include <cmath>
#include <random>
#include <string>

#include "electroad/errors.hpp"

namespace electroad {

void Scenario::validate() const {
    if (network.num_nodes < 2) throw InvalidInput("feeder needs at least 2 nodes");
    if (!(network.road_length_km > 0.0)) throw InvalidInput("road length must be positive");
    if (time_steps < 1) throw InvalidInput("time_steps must be at least 1");
    if (!(ev.p_kw >= 0.0)) throw InvalidInput("vehicle active power must be non-negative");
    for (const auto& f : fleets) {
        if (f.size < 1) throw InvalidInput("fleet size must be at least 1");
        if (f.spacing_nodes < 1) throw InvalidInput("fleet spacing must be at least 1 node");
        if (f.head_start_node < 1 || f.head_start_node > network.num_nodes)
            throw InvalidInput("fleet head start node outside the feeder");
    }
    for (const auto& bank : compensation.capacitor_banks)
        if (bank.bus < 1 || bank.bus > network.num_nodes)
            throw InvalidInput("capacitor bank bus " + std::to_string(bank.bus) + " outside the feeder");
    if (variation) {
        if (!(variation->fraction >= 0.0 && variation->fraction <= 1.0))
            throw InvalidInput("variation fraction must lie in [0, 1]");
        if (variation->samples < 1) throw InvalidInput("variation samples must be at least 1");
    }
}

FeederSpec Scenario::feeder() const {
    FeederSpec spec = network;
    spec.capacitor_banks.insert(spec.capacitor_banks.end(), compensation.capacitor_banks.begin(),
                                compensation.capacitor_banks.end());
    return spec;
}

int Scenario::vehicle_count() const {
    int total = 0;
    for (const auto& f : fleets) total += f.size;
    return total;
}

std::vector<int> fleet_positions(const Fleet& fleet, int t, int n) {
    if (t < 1) throw InvalidInput("time steps are 1-based");
    const int sign = fleet.direction == Direction::forward ? 1 : -1;
    const int head = fleet.head_start_node + sign * (t - 1);
    std::vector<int> nodes;
    nodes.reserve(fleet.size);
    for (int k = 0; k < fleet.size; ++k) {
        const int node = head - sign * k * fleet.spacing_nodes;
        if (node < 1 || node > n)
            throw PositionOutOfRange("vehicle " + std::to_string(k + 1) + " at node " + std::to_string(node) +
                                     " (step " + std::to_string(t) + ") is outside 1.." + std::to_string(n));
        nodes.push_back(node);
    }
    return nodes;
}

std::vector<VehicleDeviation> sample_variation(const VariationSpec& spec, const EvParams& ev, int vehicle_count,
                                               int step, int sample) {
    std::vector<VehicleDeviation> out(static_cast<std::size_t>(vehicle_count));
    if (spec.fraction == 0.0) return out;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int k = 0; k < vehicle_count; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(step),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        const double up = unit(rng);
        const double uq = unit(rng);
        out[k] = {spec.fraction * ev.p_kw * up, spec.fraction * ev.q_kvar * uq};
    }
    return out;
}

InjectionVector injections_at(const Scenario& scn, int n, std::span<const int> nodes,
                              std::span<const VehicleDeviation> draw) {
    if (!draw.empty() && draw.size() != nodes.size())
        throw InvalidInput("variation draw does not match the vehicle count");
    const double s_base = scn.network.s_base_mva * 1e3;
    InjectionVector inj = InjectionVector::zeros(n);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        double p = scn.ev.p_kw - scn.compensation.pv_kw_per_vehicle;
        double q = scn.ev.q_kvar - scn.compensation.onboard_capacitor_kvar_per_vehicle;
        if (!draw.empty()) {
            p -= draw[k].dp_kw;
            q -= draw[k].dq_kvar;
        }
        // The slack absorbs anything placed on it; its entry is never read by the solver.
        if (nodes[k] == 1) continue;
        inj.add(nodes[k], Complex(-p / s_base, -q / s_base));
    }
    return inj;
}

InjectionVector snapshot_injections(const Scenario& scn, int t, std::span<const VehicleDeviation> draw) {
    if (t < 1 || t > scn.time_steps)
        throw InvalidInput("time step " + std::to_string(t) + " outside 1.." + std::to_string(scn.time_steps));
    const int n = scn.network.num_nodes;
    std::vector<int> nodes;
    for (const auto& fleet : scn.fleets) {
        const auto pos = fleet_positions(fleet, t, n);
        nodes.insert(nodes.end(), pos.begin(), pos.end());
    }
    return injections_at(scn, n, nodes, draw);
}

}  // namespace electroad
