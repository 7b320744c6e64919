#include "electroad/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "electroad/concurrency.hpp"
#include "electroad/errors.hpp"

namespace electroad {

// ---------------------------------------------------------------------------------------------
// Two-bus quadratic

TwoBusQuadratic two_bus_quadratic(const TwoBusCase& c) {
    TwoBusQuadratic out;
    if (c.p > 0.0 && c.r > 0.0) {
        const double tp = c.tan_phi();
        const double tt = c.tan_theta();
        const double pr = c.p * c.r;
        out.b = 2.0 * pr * (tp * tt + 1.0) - c.v1 * c.v1;
        out.c = pr * pr * (1.0 + tp * tp) * (1.0 + tt * tt);
    } else {
        out.b = 2.0 * (c.p * c.r + c.q * c.x) - c.v1 * c.v1;
        out.c = (c.p * c.p + c.q * c.q) * (c.r * c.r + c.x * c.x);
    }
    return out;
}

TwoBusRoots two_bus_roots(const TwoBusCase& c) {
    const TwoBusQuadratic quad = two_bus_quadratic(c);
    const double disc = quad.discriminant();
    if (disc < 0.0) throw NoSolution("two-bus discriminant is negative: no steady-state voltage exists");
    const double root = std::sqrt(disc);
    // Cancellation-free pair: the large-magnitude root first, the other from the product.
    const double big = -0.5 * (quad.b + std::copysign(root, quad.b));
    TwoBusRoots out;
    if (big == 0.0) return out;
    const double other = quad.c / big;
    out.u_high = std::max(big, other);
    out.u_low = std::min(big, other);
    return out;
}

bool two_bus_pr_equivalence_check(const TwoBusCase& c, double scale) {
    if (!(scale > 0.0)) throw InvalidInput("scale must be positive");
    auto roots_or_none = [](const TwoBusCase& k) -> std::optional<TwoBusRoots> {
        try {
            return two_bus_roots(k);
        } catch (const NoSolution&) {
            return std::nullopt;
        }
    };
    const auto a = roots_or_none(c.with_load_scaled(scale));
    const auto b = roots_or_none(c.with_line_scaled(scale));
    if (!a || !b) return !a && !b;
    auto close = [](double u, double v) { return std::abs(u - v) <= 1e-12 * std::max({std::abs(u), std::abs(v), 1e-300}); };
    return close(a->u_high, b->u_high) && close(a->u_low, b->u_low);
}

// ---------------------------------------------------------------------------------------------
// Feasibility helpers

InjectionVector critical_injections(const Scenario& scn) { return snapshot_injections(scn, scn.time_steps); }

namespace {

bool converges(const PowerFlowModel& model, const InjectionVector& inj, std::optional<VoltageSolution> start) {
    SolverConfig cfg;
    cfg.warm_start = std::move(start);
    try {
        solve(model, inj, cfg);
        return true;
    } catch (const NonConvergence&) {
        return false;
    } catch (const SingularJacobian&) {
        return false;
    }
}

CurvePoint to_curve_point(const ArcTracer& tracer, const ArcPoint& p, CurveBranch branch) {
    CurvePoint c;
    c.length_km = tracer.length_of(p);
    c.solution = tracer.solution(p);
    c.end_voltage = c.solution.magnitude.back();
    c.branch = branch;
    return c;
}

}  // namespace

bool certified_infeasible(const PowerFlowModel& model, const InjectionVector& inj, int extra_starts,
                          const std::vector<VoltageSolution>& hints) {
    if (converges(model, inj, std::nullopt)) return false;
    for (const auto& h : hints)
        if (converges(model, inj, h)) return false;
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> magnitude(0.3, 1.1);
    std::uniform_real_distribution<double> angle(-0.5, 0.0);
    const int n = model.size();
    for (int k = 0; k < extra_starts; ++k) {
        VoltageSolution start = VoltageSolution::flat(n, model.slack_voltage());
        for (int i = 1; i < n; ++i) {
            start.magnitude[i] = magnitude(rng);
            start.angle[i] = angle(rng);
        }
        if (converges(model, inj, start)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------------------------
// Nose curve

std::string to_string(CurveBranch b) { return b == CurveBranch::upper ? "upper" : "lower"; }

std::vector<const CurvePoint*> NoseCurve::branch(CurveBranch b) const {
    std::vector<const CurvePoint*> out;
    for (const auto& p : points)
        if (p.branch == b) out.push_back(&p);
    return out;
}

NoseCurve trace_nose_curve(const Scenario& scn, double start_km, double stop_km, const TraceOptions& opts) {
    scn.validate();
    if (!(start_km > 0.0)) throw InvalidInput("trace start length must be positive");
    if (!(stop_km > start_km)) throw InvalidInput("trace range end must exceed its start");

    const InjectionVector load = critical_injections(scn);
    const LengthFamily family(scn.feeder(), load);
    const ArcTracer tracer(family, start_km, opts.arc);
    const double h0 = opts.arc.initial_step;
    const double h_min = opts.arc.min_step;

    VoltageSolution v0;
    try {
        v0 = solve(family.model_at(start_km), load);
    } catch (const Error& e) {
        throw InvalidInput(std::string("no power flow solution at the trace start length: ") + e.what());
    }

    NoseCurve curve;
    curve.start_km = start_km;
    ArcPoint cur = tracer.make_point(pack_state(v0), 1.0, +1.0);
    curve.points.push_back(to_curve_point(tracer, cur, CurveBranch::upper));

    double h = h0;
    for (;;) {
        if (static_cast<int>(curve.points.size()) >= opts.max_points)
            throw TraceStall("point budget exhausted before reaching the fold");
        auto next = tracer.advance(cur, h);
        if (!next) {
            h *= 0.5;
            if (h < h_min) throw TraceStall("continuation step underflow before the fold");
            continue;
        }
        if (next->tangent_mu() <= 0.0) {
            const auto [before, after] = tracer.locate_fold(cur, h, +1.0);
            curve.nose = to_curve_point(tracer, before, CurveBranch::upper);
            curve.points.push_back(curve.nose);
            curve.points.push_back(to_curve_point(tracer, after, CurveBranch::lower));
            cur = after;
            break;
        }
        if (tracer.length_of(*next) > stop_km) throw TraceStall("range end reached before the fold");
        curve.points.push_back(to_curve_point(tracer, *next, CurveBranch::upper));
        cur = *next;
        h = std::min(2.0 * h, h0);
    }

    h = h0;
    const double upper_start_voltage = curve.points.front().end_voltage;
    while (static_cast<int>(curve.points.size()) < opts.max_points) {
        auto next = tracer.advance(cur, h);
        if (!next) {
            h *= 0.5;
            if (h < h_min) break;
            continue;
        }
        if (next->tangent_mu() > 0.0) break;  // a second fold ends the lower branch
        if (next->mu <= 1.0) {
            // Land exactly on the start length with a natural-parameter corrector.
            const double t_mu = cur.tangent_mu();
            const int m = family.state_size();
            VoltageSolution guess =
                unpack_state(cur.x + (1.0 - cur.mu) / t_mu * cur.tangent.head(m), family.slack_voltage());
            SolverConfig cfg;
            cfg.warm_start = guess;
            try {
                VoltageSolution v = solve(family.model_at(start_km), load, cfg);
                if (v.magnitude.back() < upper_start_voltage - 1e-6) {
                    CurvePoint c;
                    c.length_km = start_km;
                    c.end_voltage = v.magnitude.back();
                    c.solution = std::move(v);
                    c.branch = CurveBranch::lower;
                    curve.points.push_back(std::move(c));
                }
            } catch (const Error&) {
            }
            break;
        }
        curve.points.push_back(to_curve_point(tracer, *next, CurveBranch::lower));
        cur = *next;
        if (curve.points.back().solution.min_magnitude() < opts.lower_floor_voltage) break;
        h = std::min(2.0 * h, h0);
    }
    return curve;
}

std::vector<VoltageSolution> solutions_at_length(const Scenario& scn, const NoseCurve& curve, double length_km) {
    const InjectionVector load = critical_injections(scn);
    const LengthFamily family(scn.feeder(), load);
    const PowerFlowModel model = family.model_at(length_km);

    std::vector<VoltageSolution> out;
    for (CurveBranch b : {CurveBranch::upper, CurveBranch::lower}) {
        const auto pts = curve.branch(b);
        if (pts.empty()) continue;
        const CurvePoint* best = *std::min_element(pts.begin(), pts.end(), [&](const auto* a, const auto* c) {
            return std::abs(a->length_km - length_km) < std::abs(c->length_km - length_km);
        });
        SolverConfig cfg;
        cfg.warm_start = best->solution;
        try {
            VoltageSolution v = solve(model, load, cfg);
            const bool duplicate = std::any_of(out.begin(), out.end(), [&](const VoltageSolution& w) {
                return std::abs(w.magnitude.back() - v.magnitude.back()) < 1e-6;
            });
            if (!duplicate) out.push_back(std::move(v));
        } catch (const Error&) {
        }
    }
    return out;
}

CriticalLength critical_length(const Scenario& scn, const CriticalOptions& opts) {
    const double start = opts.start_km > 0.0 ? opts.start_km : scn.network.road_length_km;
    const NoseCurve curve = trace_nose_curve(scn, start, start * opts.stop_factor);
    const InjectionVector load = critical_injections(scn);
    const LengthFamily family(scn.feeder(), load);
    const double nose = curve.nose.length_km;

    auto hints_near = [&](double length) {
        std::vector<VoltageSolution> hints{curve.nose.solution};
        for (CurveBranch b : {CurveBranch::upper, CurveBranch::lower}) {
            const auto pts = curve.branch(b);
            const CurvePoint* best = nullptr;
            for (const auto* p : pts)
                if (p->length_km <= length && (!best || p->length_km > best->length_km)) best = p;
            if (best) hints.push_back(best->solution);
        }
        return hints;
    };
    auto feasible = [&](double length) {
        return !certified_infeasible(family.model_at(length), load, 8, hints_near(length));
    };

    // Asymmetric so the first midpoint is not the traced nose itself.
    double lo = nose * 0.98;
    double hi = nose * 1.01;
    for (int k = 0; k < 40 && !feasible(lo); ++k) lo = start + 0.5 * (lo - start);
    for (int k = 0; k < 40 && feasible(hi); ++k) hi *= 1.01;
    while (hi - lo > opts.bracket_km) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            lo = mid;
        else
            hi = mid;
    }
    return {lo, hi - lo, nose, curve.nose.end_voltage};
}

// ---------------------------------------------------------------------------------------------
// Fleet size

std::vector<int> end_of_road_positions(int count, int num_nodes, int spacing_nodes) {
    if (num_nodes < 2) throw InvalidInput("feeder needs at least 2 nodes");
    if (spacing_nodes < 1) throw InvalidInput("spacing must be at least 1");
    std::vector<int> nodes;
    nodes.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int k = 0; k < count; ++k) nodes.push_back(num_nodes - (k * spacing_nodes) % (num_nodes - 1));
    return nodes;
}

VehicleCountResult max_vehicle_count(const Scenario& scn, double road_length_km, int cap) {
    scn.validate();
    if (cap < 1) throw InvalidInput("vehicle cap must be at least 1");
    FeederSpec feeder = scn.feeder();
    feeder.road_length_km = road_length_km;
    const PowerFlowModel model(build_network(feeder));
    const int n = feeder.num_nodes;
    const int spacing = scn.fleets.empty() ? 1 : scn.fleets.front().spacing_nodes;

    VehicleCountResult out;
    std::vector<char> ok(static_cast<std::size_t>(cap), 0);
    parallel_for(ok.size(), [&](std::size_t k) {
        const auto nodes = end_of_road_positions(static_cast<int>(k) + 1, n, spacing);
        ok[k] = certified_infeasible(model, injections_at(scn, n, nodes)) ? 0 : 1;
    });
    for (int m = 1; m <= cap; ++m) {
        out.counts.push_back(m);
        out.feasible.push_back(ok[m - 1] != 0);
    }
    if (!out.feasible.front()) throw InfeasibleAtOne("a single vehicle at the road end has no voltage solution");
    out.max_count = cap;
    for (int m = 1; m <= cap; ++m) {
        if (!out.feasible[m - 1]) {
            out.max_count = m - 1;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Collapse tracking

std::string to_string(TrackBranch b) {
    switch (b) {
        case TrackBranch::upper: return "upper";
        case TrackBranch::lower: return "lower";
        case TrackBranch::collapsed: return "collapsed";
    }
    return "collapsed";
}

void DrivePlan::validate() const {
    if (steps.empty()) throw InvalidInput("drive plan is empty");
    for (std::size_t k = 0; k < steps.size(); ++k) {
        if (!(steps[k].position_km > 0.0 && std::isfinite(steps[k].position_km)))
            throw InvalidInput("drive plan positions must be positive");
        if (k > 0 && steps[k].step <= steps[k - 1].step)
            throw InvalidInput("drive plan steps must be strictly increasing");
    }
}

namespace {

struct WalkResult {
    enum class Kind { reached, fold, stalled } kind = Kind::stalled;
    ArcPoint point;     // at the target, or just past the fold
    ArcPoint at_fold;   // just before the fold
    VoltageSolution solution;
};

WalkResult walk(const ArcTracer& tracer, ArcPoint from, double target_mu) {
    const LengthFamily& family = tracer.family();
    const double dir = target_mu > from.mu ? 1.0 : -1.0;
    if (from.tangent_mu() * dir < 0.0) from.tangent = -from.tangent;
    const double h0 = tracer.settings().initial_step;
    const int m = family.state_size();

    WalkResult out;
    double h = h0;
    ArcPoint cur = std::move(from);
    for (int guard = 0; guard < 1000000; ++guard) {
        auto next = tracer.advance(cur, h);
        if (!next) {
            h *= 0.5;
            if (h < tracer.settings().min_step) return out;
            continue;
        }
        if (next->tangent_mu() * dir <= 0.0) {
            auto [before, after] = tracer.locate_fold(cur, h, dir);
            out.kind = WalkResult::Kind::fold;
            out.at_fold = std::move(before);
            out.point = std::move(after);
            return out;
        }
        if ((next->mu - target_mu) * dir >= 0.0) {
            // Natural-parameter corrector at the exact target from the tangent predictor.
            const VoltageSolution guess = unpack_state(
                cur.x + (target_mu - cur.mu) / cur.tangent_mu() * cur.tangent.head(m), family.slack_voltage());
            SolverConfig cfg;
            cfg.warm_start = guess;
            try {
                out.solution = solve(family.model_at(target_mu * tracer.reference_length()), family.load(), cfg);
            } catch (const Error&) {
                return out;
            }
            out.point = tracer.make_point(pack_state(out.solution), target_mu, dir);
            out.kind = WalkResult::Kind::reached;
            return out;
        }
        cur = std::move(*next);
        h = std::min(2.0 * h, h0);
    }
    return out;
}

}  // namespace

CollapseTrajectory collapse_trajectory(const Scenario& scn, const DrivePlan& plan, const CollapseOptions& opts) {
    scn.validate();
    plan.validate();
    const InjectionVector load = critical_injections(scn);
    const LengthFamily family(scn.feeder(), load);
    const double ref = plan.steps.front().position_km;
    const ArcTracer tracer(family, ref, opts.arc);

    CollapseTrajectory out;
    TrackBranch state = TrackBranch::upper;
    bool pinned = false;  // held at the nose while the plan stays beyond it
    ArcPoint cur;
    VoltageSolution current;
    double nose_mu = std::numeric_limits<double>::infinity();

    auto push = [&](const PlanStep& s, double vmin, TrackBranch b, std::optional<VoltageSolution> sol) {
        out.points.push_back({s.step, s.position_km, vmin, b, std::move(sol)});
    };
    auto collapse_now = [&](const PlanStep& s, double vmin, std::optional<VoltageSolution> sol) {
        state = TrackBranch::collapsed;
        out.collapsed = true;
        out.collapse_step = s.step;
        push(s, vmin, TrackBranch::collapsed, std::move(sol));
    };

    for (std::size_t k = 0; k < plan.steps.size(); ++k) {
        const PlanStep& s = plan.steps[k];
        if (state == TrackBranch::collapsed) {
            push(s, 0.0, TrackBranch::collapsed, std::nullopt);
            continue;
        }
        if (k == 0) {
            try {
                current = solve(family.model_at(s.position_km), load);
                cur = tracer.make_point(pack_state(current), 1.0, +1.0);
            } catch (const Error&) {
                collapse_now(s, 0.0, std::nullopt);
                continue;
            }
        } else {
            const double target = s.position_km / ref;
            if (pinned && target >= nose_mu) {
                push(s, current.min_magnitude(), state, current);
                continue;
            }
            if (target != cur.mu) {
                WalkResult w = walk(tracer, cur, target);
                if (w.kind == WalkResult::Kind::stalled) {
                    collapse_now(s, 0.0, std::nullopt);
                    continue;
                }
                if (w.kind == WalkResult::Kind::fold) {
                    const bool forward = target > cur.mu;
                    if (state == TrackBranch::lower && !forward) {
                        // A second fold on the way back: no viable branch remains.
                        collapse_now(s, 0.0, std::nullopt);
                        continue;
                    }
                    if (state == TrackBranch::upper) {
                        out.critical_step = s.step;
                        out.nose_length_km = tracer.length_of(w.at_fold);
                    }
                    state = TrackBranch::lower;
                    pinned = true;
                    nose_mu = w.at_fold.mu;
                    current = tracer.solution(w.at_fold);
                    cur = std::move(w.point);
                } else {
                    pinned = false;
                    current = std::move(w.solution);
                    cur = std::move(w.point);
                }
            }
        }
        const double vmin = current.min_magnitude();
        if (vmin < opts.collapse_threshold)
            collapse_now(s, vmin, current);
        else
            push(s, vmin, state, current);
    }
    return out;
}

}  // namespace electroad
