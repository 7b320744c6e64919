#include "electroad/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "electroad/errors.hpp"

namespace electroad {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items())
        if (!keys.count(key)) throw SchemaError(join(path, key), "unknown key");
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw SchemaError(join(path, key), "expected a number");
    return v.get<double>();
}

long long get_integer(const json& obj, const std::string& path, const char* key, long long fallback,
                      bool required = false) {
    if (!obj.contains(key)) {
        if (required) throw SchemaError(join(path, key), "required key missing");
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw SchemaError(join(path, key), "expected an integer");
    return v.get<long long>();
}

void require_min(long long value, long long min, const std::string& key_path) {
    if (value < min) throw SchemaError(key_path, "must be at least " + std::to_string(min));
}

void require_positive(double value, const std::string& key_path) {
    if (!(value > 0.0)) throw UnitError(key_path, "must be positive");
}

void require_non_negative(double value, const std::string& key_path) {
    if (!(value >= 0.0)) throw UnitError(key_path, "must be non-negative");
}

std::string direction_name(Direction d) { return d == Direction::forward ? "forward" : "reverse"; }

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("", "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("", path.string() + ": invalid JSON: " + e.what());
    }
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Scenario default_scenario() { return Scenario{}; }

Scenario parse_scenario(const json& doc) {
    reject_unknown(doc, "", {"network", "ev", "fleets", "compensation", "variation", "simulation"});
    Scenario scn = default_scenario();

    if (doc.contains("network")) {
        const json& net = doc.at("network");
        const std::string p = "network";
        reject_unknown(net, p,
                       {"road_length_km", "num_nodes", "r_ohm_per_km", "x_ohm_per_km", "v_base_kv", "s_base_mva",
                        "slack_v_pu"});
        auto& f = scn.network;
        f.road_length_km = get_number(net, p, "road_length_km", f.road_length_km);
        const long long nodes = get_integer(net, p, "num_nodes", f.num_nodes);
        require_min(nodes, 2, join(p, "num_nodes"));
        if (nodes > 100000) throw SchemaError(join(p, "num_nodes"), "too many nodes");
        f.num_nodes = static_cast<int>(nodes);
        f.r_ohm_per_km = get_number(net, p, "r_ohm_per_km", f.r_ohm_per_km);
        f.x_ohm_per_km = get_number(net, p, "x_ohm_per_km", f.x_ohm_per_km);
        f.v_base_kv = get_number(net, p, "v_base_kv", f.v_base_kv);
        f.s_base_mva = get_number(net, p, "s_base_mva", f.s_base_mva);
        f.slack_v_pu = get_number(net, p, "slack_v_pu", f.slack_v_pu);
        require_positive(f.road_length_km, join(p, "road_length_km"));
        require_non_negative(f.r_ohm_per_km, join(p, "r_ohm_per_km"));
        require_non_negative(f.x_ohm_per_km, join(p, "x_ohm_per_km"));
        if (f.r_ohm_per_km == 0.0 && f.x_ohm_per_km == 0.0)
            throw UnitError(join(p, "r_ohm_per_km"), "cable impedance must be non-zero");
        require_positive(f.v_base_kv, join(p, "v_base_kv"));
        require_positive(f.s_base_mva, join(p, "s_base_mva"));
        require_positive(f.slack_v_pu, join(p, "slack_v_pu"));
    }
    const int n = scn.network.num_nodes;

    if (doc.contains("ev")) {
        const json& ev = doc.at("ev");
        reject_unknown(ev, "ev", {"p_kw", "q_kvar"});
        scn.ev.p_kw = get_number(ev, "ev", "p_kw", scn.ev.p_kw);
        scn.ev.q_kvar = get_number(ev, "ev", "q_kvar", scn.ev.q_kvar);
        require_non_negative(scn.ev.p_kw, "ev.p_kw");
    }

    if (doc.contains("fleets")) {
        const json& fleets = doc.at("fleets");
        if (!fleets.is_array()) throw SchemaError("fleets", "expected an array");
        scn.fleets.clear();
        for (std::size_t k = 0; k < fleets.size(); ++k) {
            const std::string p = "fleets[" + std::to_string(k) + "]";
            const json& f = fleets[k];
            reject_unknown(f, p, {"size", "direction", "head_start_node", "spacing_nodes"});
            Fleet fleet;
            const long long size = get_integer(f, p, "size", 0, true);
            require_min(size, 1, join(p, "size"));
            fleet.size = static_cast<int>(std::min<long long>(size, 1000000));
            if (!f.contains("direction")) throw SchemaError(join(p, "direction"), "required key missing");
            if (!f.at("direction").is_string()) throw SchemaError(join(p, "direction"), "expected a string");
            const std::string dir = f.at("direction").get<std::string>();
            if (dir == "forward")
                fleet.direction = Direction::forward;
            else if (dir == "reverse")
                fleet.direction = Direction::reverse;
            else
                throw SchemaError(join(p, "direction"), "must be \"forward\" or \"reverse\"");
            const long long head = get_integer(f, p, "head_start_node", 0, true);
            if (head < 1 || head > n) throw SchemaError(join(p, "head_start_node"), "must lie in 1.." + std::to_string(n));
            fleet.head_start_node = static_cast<int>(head);
            const long long spacing = get_integer(f, p, "spacing_nodes", 1);
            require_min(spacing, 1, join(p, "spacing_nodes"));
            fleet.spacing_nodes = static_cast<int>(std::min<long long>(spacing, n));
            scn.fleets.push_back(fleet);
        }
    }

    if (doc.contains("compensation")) {
        const json& c = doc.at("compensation");
        const std::string p = "compensation";
        reject_unknown(c, p, {"pv_kw", "onboard_capacitor_kvar", "capacitor_banks"});
        auto& comp = scn.compensation;
        comp.pv_kw_per_vehicle = get_number(c, p, "pv_kw", 0.0);
        comp.onboard_capacitor_kvar_per_vehicle = get_number(c, p, "onboard_capacitor_kvar", 0.0);
        require_non_negative(comp.pv_kw_per_vehicle, join(p, "pv_kw"));
        require_non_negative(comp.onboard_capacitor_kvar_per_vehicle, join(p, "onboard_capacitor_kvar"));
        if (c.contains("capacitor_banks")) {
            const json& banks = c.at("capacitor_banks");
            if (!banks.is_array()) throw SchemaError(join(p, "capacitor_banks"), "expected an array");
            for (std::size_t k = 0; k < banks.size(); ++k) {
                const std::string bp = join(p, "capacitor_banks[" + std::to_string(k) + "]");
                reject_unknown(banks[k], bp, {"bus", "kvar"});
                const long long bus = get_integer(banks[k], bp, "bus", 0, true);
                if (bus < 1 || bus > n) throw SchemaError(join(bp, "bus"), "must lie in 1.." + std::to_string(n));
                if (!banks[k].contains("kvar")) throw SchemaError(join(bp, "kvar"), "required key missing");
                const double kvar = get_number(banks[k], bp, "kvar", 0.0);
                require_non_negative(kvar, join(bp, "kvar"));
                comp.capacitor_banks.push_back({static_cast<int>(bus), kvar});
            }
        }
    }

    if (doc.contains("variation")) {
        const json& v = doc.at("variation");
        reject_unknown(v, "variation", {"fraction", "seed", "samples"});
        VariationSpec spec;
        if (!v.contains("fraction")) throw SchemaError("variation.fraction", "required key missing");
        spec.fraction = get_number(v, "variation", "fraction", spec.fraction);
        if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) throw UnitError("variation.fraction", "must lie in [0, 1]");
        if (v.contains("seed")) {
            const json& s = v.at("seed");
            if (!s.is_number_unsigned()) throw SchemaError("variation.seed", "expected a non-negative integer");
            spec.seed = s.get<std::uint64_t>();
        }
        const long long samples = get_integer(v, "variation", "samples", spec.samples);
        require_min(samples, 1, "variation.samples");
        spec.samples = static_cast<int>(std::min<long long>(samples, 1000000));
        scn.variation = spec;
    }

    if (doc.contains("simulation")) {
        const json& s = doc.at("simulation");
        reject_unknown(s, "simulation", {"time_steps"});
        const long long steps = get_integer(s, "simulation", "time_steps", scn.time_steps);
        require_min(steps, 1, "simulation.time_steps");
        scn.time_steps = static_cast<int>(std::min<long long>(steps, 1000000));
    }

    scn.validate();
    return scn;
}

Scenario parse_scenario_file(const std::filesystem::path& path) { return parse_scenario(read_json_file(path)); }

json serialize_scenario(const Scenario& scn) {
    json doc;
    const auto& f = scn.network;
    doc["network"] = {{"road_length_km", f.road_length_km}, {"num_nodes", f.num_nodes},
                      {"r_ohm_per_km", f.r_ohm_per_km},     {"x_ohm_per_km", f.x_ohm_per_km},
                      {"v_base_kv", f.v_base_kv},           {"s_base_mva", f.s_base_mva},
                      {"slack_v_pu", f.slack_v_pu}};
    doc["ev"] = {{"p_kw", scn.ev.p_kw}, {"q_kvar", scn.ev.q_kvar}};
    doc["fleets"] = json::array();
    for (const auto& fl : scn.fleets)
        doc["fleets"].push_back({{"size", fl.size},
                                 {"direction", direction_name(fl.direction)},
                                 {"head_start_node", fl.head_start_node},
                                 {"spacing_nodes", fl.spacing_nodes}});
    json banks = json::array();
    for (const auto& b : scn.compensation.capacitor_banks) banks.push_back({{"bus", b.bus}, {"kvar", b.kvar}});
    doc["compensation"] = {{"pv_kw", scn.compensation.pv_kw_per_vehicle},
                           {"onboard_capacitor_kvar", scn.compensation.onboard_capacitor_kvar_per_vehicle},
                           {"capacitor_banks", banks}};
    if (scn.variation)
        doc["variation"] = {{"fraction", scn.variation->fraction},
                            {"seed", scn.variation->seed},
                            {"samples", scn.variation->samples}};
    doc["simulation"] = {{"time_steps", scn.time_steps}};
    return doc;
}

DrivePlan parse_drive_plan(const json& doc) {
    reject_unknown(doc, "", {"steps"});
    if (!doc.contains("steps") || !doc.at("steps").is_array()) throw SchemaError("steps", "expected an array");
    DrivePlan plan;
    const json& steps = doc.at("steps");
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const std::string p = "steps[" + std::to_string(k) + "]";
        reject_unknown(steps[k], p, {"step", "position_km"});
        PlanStep s;
        s.step = static_cast<int>(get_integer(steps[k], p, "step", 0, true));
        if (!steps[k].contains("position_km")) throw SchemaError(join(p, "position_km"), "required key missing");
        s.position_km = get_number(steps[k], p, "position_km", 0.0);
        require_positive(s.position_km, join(p, "position_km"));
        if (!plan.steps.empty() && s.step <= plan.steps.back().step)
            throw SchemaError(join(p, "step"), "steps must be strictly increasing");
        plan.steps.push_back(s);
    }
    if (plan.steps.empty()) throw SchemaError("steps", "drive plan is empty");
    return plan;
}

DrivePlan parse_drive_plan_file(const std::filesystem::path& path) { return parse_drive_plan(read_json_file(path)); }

std::string format_number(double v) {
    if (v == 0.0) return "0";  // no "-0"
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string profile_csv(const ProfileSeries& series, const std::vector<Envelope>* envelope) {
    std::ostringstream out;
    out << "time_step,bus,voltage_pu";
    if (envelope) out << ",v_min,v_mean,v_max";
    out << '\n';
    for (int t = 1; t <= series.steps(); ++t) {
        const Envelope* env = nullptr;
        if (envelope)
            for (const auto& e : *envelope)
                if (e.step == t) env = &e;
        for (int i = 1; i <= series.buses(); ++i) {
            out << t << ',' << i << ',' << format_number(series.at(t, i));
            if (envelope) {
                if (env)
                    out << ',' << format_number(env->min[i - 1]) << ',' << format_number(env->mean[i - 1]) << ','
                        << format_number(env->max[i - 1]);
                else
                    out << ",,,";
            }
            out << '\n';
        }
    }
    return out.str();
}

std::string lower_bound_csv(const LowerBoundLine& line) {
    std::ostringstream out;
    out << "bus,bound_pu\n";
    for (std::size_t i = 0; i < line.values.size(); ++i) out << i + 1 << ',' << format_number(line.values[i]) << '\n';
    return out.str();
}

std::string swing_csv(const SwingSeries& swing) {
    std::ostringstream out;
    out << "time_step,voltage_pu\n";
    for (std::size_t t = 0; t < swing.values.size(); ++t) out << t + 1 << ',' << format_number(swing.values[t]) << '\n';
    return out.str();
}

std::string nose_curve_csv(const NoseCurve& curve) {
    std::ostringstream out;
    out << "length_km,voltage_pu,branch\n";
    for (const auto& p : curve.points)
        out << format_number(p.length_km) << ',' << format_number(p.end_voltage) << ',' << to_string(p.branch) << '\n';
    return out.str();
}

std::string trajectory_csv(const CollapseTrajectory& trajectory) {
    std::ostringstream out;
    out << "step,position_km,min_voltage_pu,branch\n";
    for (const auto& p : trajectory.points)
        out << p.step << ',' << format_number(p.position_km) << ',' << format_number(p.min_voltage) << ','
            << to_string(p.branch) << '\n';
    return out.str();
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            table.header = split_line(line);
            first = false;
        } else {
            table.rows.push_back(split_line(line));
            if (table.rows.back().size() != table.header.size())
                throw SchemaError("csv", "row width does not match the header");
        }
    }
    return table;
}

ProfileSeries profile_from_csv(const std::string& text) {
    const CsvTable table = parse_csv(text);
    if (table.header.size() < 3 || table.header[0] != "time_step" || table.header[1] != "bus" ||
        table.header[2] != "voltage_pu")
        throw SchemaError("csv", "not a profile table");
    int steps = 0, buses = 0;
    for (const auto& r : table.rows) {
        steps = std::max(steps, std::stoi(r[0]));
        buses = std::max(buses, std::stoi(r[1]));
    }
    ProfileSeries series;
    series.voltage = Eigen::MatrixXd::Constant(steps, buses, NAN);
    for (const auto& r : table.rows) series.voltage(std::stoi(r[0]) - 1, std::stoi(r[1]) - 1) = std::stod(r[2]);
    return series;
}

std::vector<NoseCsvPoint> nose_curve_from_csv(const std::string& text) {
    const CsvTable table = parse_csv(text);
    if (table.header != std::vector<std::string>{"length_km", "voltage_pu", "branch"})
        throw SchemaError("csv", "not a nose curve table");
    std::vector<NoseCsvPoint> out;
    for (const auto& r : table.rows) {
        NoseCsvPoint p{std::stod(r[0]), std::stod(r[1]), CurveBranch::upper};
        if (r[2] == "lower")
            p.branch = CurveBranch::lower;
        else if (r[2] != "upper")
            throw SchemaError("csv", "unknown branch label " + r[2]);
        out.push_back(p);
    }
    return out;
}

}  // namespace electroad
