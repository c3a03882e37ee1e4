#pragma once

#include <functional>

#include "millstab/sld.hpp"

namespace millstab {

/// Weights and actuation limits of the spindle-speed optimizer.
struct ControllerConfig {
    double alpha = 0.1;   ///< weight of the disturbance-amplification term
    double beta = 1.0;    ///< weight of the stability-margin term
    double gamma = 0.05;  ///< weight of the speed-jump suppression term
    double speed_min_rpm = 6000.0;
    double speed_max_rpm = 16000.0;
    double speed_step_rpm = 100.0;
    double min_interval_s = 0.2;
    double delta_floor_rpm = 100.0;  ///< floor of |omega - omega_current| in the cost

    void validate() const;
};

struct CostBreakdown {
    double gamma_term = 0.0;      ///< alpha * log(sigma_max(Gamma_1))
    double stability_term = 0.0;  ///< -beta * log(1 - rho)
    double speed_term = 0.0;      ///< gamma * log(max(dw^2, floor^2))
    double roughness_term = 0.0;  ///< log(r)
};

struct ControlDecision {
    double omega_star_rpm = 0.0;
    CostBreakdown cost;
    bool feasible = false;  ///< a candidate with interpolated rho < 1 exists
    bool applied = false;   ///< false when rate-limited
    double rho_at_star = 0.0;
};

/// Predicted roughness (um) as a function of candidate spindle speed.
using RoughnessMap = std::function<double(double)>;

/// Stability-roughness cost of one lattice candidate. Candidates whose
/// interpolated rho is >= 1 cost +infinity (hard stability constraint).
/// The squared speed difference is floored at delta_floor^2 so holding the
/// current speed stays finite.
double candidate_cost(double omega_rpm, const SldGrid& grid, double axial_depth_mm,
                      double omega_current_rpm, const RoughnessMap& roughness_of,
                      const ControllerConfig& cfg, CostBreakdown* breakdown = nullptr,
                      double* rho_out = nullptr);

/// Exhaustive minimization over the speed lattice
/// {speed_min, speed_min + step, ..., speed_max}. Ties break toward the
/// smallest |omega - omega_current|, then toward the lower speed. When every
/// candidate is infeasible the decision holds the current speed with
/// feasible = false. Decisions within min_interval of the last applied
/// change are computed but flagged applied = false.
ControlDecision optimize_speed(const SldGrid& grid, double axial_depth_mm,
                               double omega_current_rpm,
                               const RoughnessMap& roughness_of,
                               const ControllerConfig& cfg,
                               double last_change_time_s, double now_s);

}  // namespace millstab
