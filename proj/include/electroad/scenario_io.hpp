#pragma once

// Scenario and drive-plan documents (JSON), CSV emission and parsing, atomic file output.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "electroad/profile.hpp"
#include "electroad/road.hpp"
#include "electroad/stability.hpp"

namespace electroad {

inline constexpr const char* kReportSchema = "electroad.report/1";

/// The base case: 2 km, 10 nodes, one forward fleet of two 30 kW / 15 kVAr vehicles, 9 steps.
Scenario default_scenario();

/// Validates and fills defaults. Throws SchemaError (structure, types, counts, indices) or
/// UnitError (physical values out of range).
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_file(const std::filesystem::path& path);

/// Fully resolved document; parse_scenario(serialize_scenario(s)) == s.
nlohmann::json serialize_scenario(const Scenario& scn);

/// {"steps": [{"step": 1, "position_km": 2.0}, ...]}
DrivePlan parse_drive_plan(const nlohmann::json& doc);
DrivePlan parse_drive_plan_file(const std::filesystem::path& path);

/// 12 significant digits.
std::string format_number(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string profile_csv(const ProfileSeries& series, const std::vector<Envelope>* envelope = nullptr);
std::string lower_bound_csv(const LowerBoundLine& line);
std::string swing_csv(const SwingSeries& swing);
std::string nose_curve_csv(const NoseCurve& curve);
std::string trajectory_csv(const CollapseTrajectory& trajectory);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(const std::string& text);

/// Rebuilds the magnitude matrix of a profile CSV (solutions are not stored in CSV).
ProfileSeries profile_from_csv(const std::string& text);

struct NoseCsvPoint {
    double length_km = 0.0;
    double voltage = 0.0;
    CurveBranch branch = CurveBranch::upper;
};
std::vector<NoseCsvPoint> nose_curve_from_csv(const std::string& text);

}  // namespace electroad
