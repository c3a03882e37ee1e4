#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "millstab/closed_loop.hpp"

namespace millstab::io {

/// Malformed input file; carries the offending line when known.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest representation that round-trips exactly.
std::string format_double(double value);

/// Writes via a temporary file in the same directory plus rename, so readers
/// never observe partial output.
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

// --- trajectory -----------------------------------------------------------
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& trajectory);
Trajectory read_trajectory_csv(const std::filesystem::path& path,
                               double axial_depth_mm);

// --- SLD ------------------------------------------------------------------
void write_sld_csv(const std::filesystem::path& path, const SldGrid& grid);
void write_boundary_csv(const std::filesystem::path& path, const SldGrid& grid);
void write_sld_sidecar_json(const std::filesystem::path& path, const SldGrid& grid);

// --- JSON codecs ----------------------------------------------------------
nlohmann::json to_json(const ProcessParameters& params);
ProcessParameters params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ControllerConfig& cfg);
ControllerConfig controller_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RoughnessCalibration& cal);
RoughnessCalibration roughness_calibration_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

Scenario load_scenario(const std::filesystem::path& path);
RoughnessCalibration load_roughness_calibration(const std::filesystem::path& path);

// --- estimator / closed loop ----------------------------------------------
void write_estimate_json(const std::filesystem::path& path,
                         const EstimatedParameters& estimate, double window_t0_s,
                         double window_t1_s);
void write_decisions_csv(const std::filesystem::path& path,
                         const std::vector<TimedDecision>& decisions);
/// trajectory.csv, decisions.csv, sld_t<k>.csv (+ sidecars) and report.json
/// inside out_dir.
void write_run_report(const std::filesystem::path& out_dir, const RunReport& report,
                      const Scenario& scenario);

}  // namespace millstab::io
