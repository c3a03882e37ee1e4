#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "millstab/controller.hpp"
#include "millstab/estimator.hpp"
#include "millstab/roughness.hpp"
#include "millstab/simulate.hpp"

namespace millstab {

enum class RunMode { open_loop, offline_control, online_control };

enum class Verdict { stabilized, diverged, held };

struct DriftEvent {
    double t_s = 0.0;
    ProcessParameters params;  ///< replacement set, swapped in at t_s
};

/// Everything a closed-loop experiment needs, loadable from a JSON file.
struct Scenario {
    ProcessParameters nominal;
    std::vector<DriftEvent> drift_events;
    OperatingPoint initial{11500.0, 1.0};
    RunMode mode = RunMode::online_control;
    double control_start_s = 0.03;
    double estimation_period_s = 0.0;  ///< 0 = four delay periods of the initial speed
    double duration_s = 0.12;
    std::uint64_t seed = 0;
    double noise_std = 0.0;
    ControllerConfig controller;
    RoughnessCalibration roughness;
    GridSpec grid;
    double feed_rate_mm_s = 8.5;
    double initial_perturbation_m = 1e-6;  ///< applied to the x channel
    double step_fraction = 1e-3;           ///< integrator step = tau0 * fraction
    bool full_grid_snapshots = false;      ///< online mode: full grid instead of rows
    int online_context_rows = 2;           ///< rows recomputed on each side of a_p

    void validate() const;
    double window_span_s(double rpm) const;   ///< four delay periods
    double resolved_estimation_period_s() const;
};

struct TimedDecision {
    double t_s = 0.0;
    double omega_before_rpm = 0.0;
    ControlDecision decision;
};

struct TimedEstimate {
    double t_s = 0.0;
    EstimatedParameters estimate;
};

struct TimedRoughness {
    double t_s = 0.0;
    RoughnessEstimate estimate;
};

struct LoopEvent {
    double t_s = 0.0;
    std::string message;
};

struct RunReport {
    Trajectory trajectory;
    std::vector<TimedDecision> decisions;
    std::vector<SldGrid> sld_snapshots;
    std::vector<TimedRoughness> roughness_series;
    std::vector<TimedEstimate> estimates;
    std::vector<LoopEvent> events;
    Verdict verdict = Verdict::diverged;
    std::optional<double> divergence_time_s;
};

/// Validates the replacement parameters of a drift event and returns them.
ProcessParameters inject_drift(const ProcessParameters& params,
                               const DriftEvent& event);

/// Runs a scenario: simulator -> (estimator -> online SLD ->) controller in a
/// timed loop. Offline mode computes one nominal grid at t = 0 and never
/// re-estimates; online mode re-estimates every estimation period and
/// recomputes the depth rows around the current a_p. Drift events swap the
/// simulator's true parameters; the offline grid never sees them.
RunReport run_scenario(const Scenario& scenario, int workers = 1);

/// Displacement RMS over samples with t in [t0, t1].
double rms_displacement(const Trajectory& trajectory, double t0_s, double t1_s);

const char* to_string(Verdict verdict);
const char* to_string(RunMode mode);

}  // namespace millstab
