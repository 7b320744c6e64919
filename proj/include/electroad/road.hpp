#pragma once

// Electrified road with moving constant-power vehicles: one injection snapshot per time step.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "electroad/grid.hpp"
#include "electroad/powerflow.hpp"

namespace electroad {

struct EvParams {
    double p_kw = 30.0;
    double q_kvar = 15.0;

    bool operator==(const EvParams&) const = default;
};

enum class Direction { forward, reverse };

struct Fleet {
    int size = 2;
    Direction direction = Direction::forward;
    int head_start_node = 2;  // node of the lead vehicle at t = 1
    int spacing_nodes = 1;    // gap between consecutive vehicles, in segments

    bool operator==(const Fleet&) const = default;
};

struct Compensation {
    double pv_kw_per_vehicle = 0.0;                   // reduces active consumption
    double onboard_capacitor_kvar_per_vehicle = 0.0;  // reduces reactive consumption, may overcompensate
    std::vector<CapacitorBank> capacitor_banks;      // applied as network shunts

    bool operator==(const Compensation&) const = default;
};

struct VariationSpec {
    double fraction = 0.5;  // half-width of the deviation interval relative to base power
    std::uint64_t seed = 1;
    int samples = 200;

    bool operator==(const VariationSpec&) const = default;
};

struct Scenario {
    FeederSpec network;
    EvParams ev;
    std::vector<Fleet> fleets{Fleet{}};
    Compensation compensation;
    std::optional<VariationSpec> variation;
    int time_steps = 9;

    /// Throws InvalidInput on inconsistent settings; positions are checked lazily.
    void validate() const;
    /// Feeder with the compensation capacitor banks applied as shunts.
    FeederSpec feeder() const;
    Network build_network() const { return electroad::build_network(feeder()); }
    int vehicle_count() const;

    bool operator==(const Scenario&) const = default;
};

/// Random power deviation of one vehicle, subtracted from its base consumption.
struct VehicleDeviation {
    double dp_kw = 0.0;
    double dq_kvar = 0.0;
};

/// Occupied nodes of `fleet` at 1-based step `t`, lead vehicle first. Throws PositionOutOfRange.
std::vector<int> fleet_positions(const Fleet& fleet, int t, int n);

/// Independent uniform deviations on [-fraction*base, +fraction*base] per vehicle, reproducible from
/// (seed, sample, step, vehicle index).
std::vector<VehicleDeviation> sample_variation(const VariationSpec& spec, const EvParams& ev, int vehicle_count,
                                               int step, int sample = 0);

/// Vehicle loads at step `t` as negative injections. `draw` is indexed by vehicle across fleets
/// in declaration order; empty means no variation.
InjectionVector snapshot_injections(const Scenario& scn, int t, std::span<const VehicleDeviation> draw = {});

/// Same as snapshot_injections but with the vehicles placed at explicit nodes.
InjectionVector injections_at(const Scenario& scn, int n, std::span<const int> nodes,
                              std::span<const VehicleDeviation> draw = {});

}  // namespace electroad
