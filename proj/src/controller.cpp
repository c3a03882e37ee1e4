#include "millstab/controller.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace millstab {

namespace {
constexpr double kInfinity = std::numeric_limits<double>::infinity();
// Avoids log(0) when a grid stores an exactly zero disturbance gain
// (analytic zero-depth rows).
constexpr double kGammaFloor = 1e-12;

bool on_lattice(double omega, const ControllerConfig& cfg) {
    const double offset = (omega - cfg.speed_min_rpm) / cfg.speed_step_rpm;
    return std::abs(offset - std::round(offset)) < 1e-9 &&
           omega >= cfg.speed_min_rpm - 1e-9 && omega <= cfg.speed_max_rpm + 1e-9;
}
}  // namespace

void ControllerConfig::validate() const {
    if (alpha <= 0.0 || beta <= 0.0 || gamma <= 0.0)
        throw std::invalid_argument("controller weights must be positive");
    if (speed_min_rpm <= 0.0 || speed_max_rpm <= speed_min_rpm)
        throw std::invalid_argument("controller speed bounds are invalid");
    if (speed_step_rpm <= 0.0) throw std::invalid_argument("speed_step_rpm must be positive");
    if (min_interval_s < 0.0) throw std::invalid_argument("min_interval_s must be non-negative");
    if (delta_floor_rpm <= 0.0) throw std::invalid_argument("delta_floor_rpm must be positive");
}

double candidate_cost(double omega_rpm, const SldGrid& grid, double axial_depth_mm,
                      double omega_current_rpm, const RoughnessMap& roughness_of,
                      const ControllerConfig& cfg, CostBreakdown* breakdown,
                      double* rho_out) {
    if (!on_lattice(omega_rpm, cfg))
        throw std::invalid_argument(
            fmt::format("candidate speed {} rpm is off the {} rpm lattice", omega_rpm,
                        cfg.speed_step_rpm));

    const Classification at = classify(grid, OperatingPoint{omega_rpm, axial_depth_mm});
    if (rho_out) *rho_out = at.rho;
    if (at.rho >= 1.0) return kInfinity;

    const double delta = omega_rpm - omega_current_rpm;
    const double floored_sq =
        std::max(delta * delta, cfg.delta_floor_rpm * cfg.delta_floor_rpm);

    CostBreakdown cost;
    cost.gamma_term = cfg.alpha * std::log(std::max(at.gamma_max, kGammaFloor));
    cost.stability_term = -cfg.beta * std::log(1.0 - at.rho);
    cost.speed_term = cfg.gamma * std::log(floored_sq);
    cost.roughness_term = std::log(roughness_of(omega_rpm));
    if (breakdown) *breakdown = cost;
    return cost.gamma_term + cost.stability_term + cost.speed_term + cost.roughness_term;
}

ControlDecision optimize_speed(const SldGrid& grid, double axial_depth_mm,
                               double omega_current_rpm,
                               const RoughnessMap& roughness_of,
                               const ControllerConfig& cfg,
                               double last_change_time_s, double now_s) {
    cfg.validate();

    ControlDecision best;
    best.omega_star_rpm = omega_current_rpm;
    best.feasible = false;
    double best_cost = kInfinity;

    const int count = static_cast<int>(
        std::floor((cfg.speed_max_rpm - cfg.speed_min_rpm) / cfg.speed_step_rpm + 1e-9));
    for (int i = 0; i <= count; ++i) {
        const double omega = cfg.speed_min_rpm + i * cfg.speed_step_rpm;
        CostBreakdown breakdown;
        double rho = 0.0;
        const double cost = candidate_cost(omega, grid, axial_depth_mm,
                                           omega_current_rpm, roughness_of, cfg,
                                           &breakdown, &rho);
        if (cost == kInfinity) continue;

        bool better = cost < best_cost;
        if (!better && cost == best_cost && best.feasible) {
            const double incumbent = std::abs(best.omega_star_rpm - omega_current_rpm);
            const double challenger = std::abs(omega - omega_current_rpm);
            better = challenger < incumbent ||
                     (challenger == incumbent && omega < best.omega_star_rpm);
        }
        if (better) {
            best_cost = cost;
            best.omega_star_rpm = omega;
            best.cost = breakdown;
            best.rho_at_star = rho;
            best.feasible = true;
        }
    }

    if (!best.feasible) {
        // Hold-and-alarm fallback: no stable candidate at this depth.
        best.omega_star_rpm = omega_current_rpm;
        best.applied = false;
        return best;
    }
    best.applied = now_s - last_change_time_s >= cfg.min_interval_s;
    return best;
}

}  // namespace millstab
