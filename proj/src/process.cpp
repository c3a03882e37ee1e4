#include "millstab/process.hpp"

#include <cmath>

#include <fmt/format.h>

namespace millstab {

namespace {
constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}
}  // namespace

void ProcessParameters::validate() const {
    require(teeth_count >= 1, "teeth_count must be >= 1");
    require(modal_mass_kg > 0.0, "modal_mass_kg must be positive");
    require(tool_diameter_mm > 0.0, "tool_diameter_mm must be positive");
    require(radial_depth_mm > 0.0, "radial_depth_mm must be positive");
    require(radial_depth_mm <= tool_diameter_mm,
            fmt::format("radial_depth_mm ({}) must not exceed tool_diameter_mm ({})",
                        radial_depth_mm, tool_diameter_mm));
    require(damping_ratio > 0.0 && damping_ratio < 1.0,
            "damping_ratio must lie in (0, 1)");
    require(natural_frequency_rad_s > 0.0, "natural_frequency_rad_s must be positive");
    require(tangential_coeff > 0.0, "tangential_coeff must be positive");
    require(radial_coeff > 0.0, "radial_coeff must be positive");
}

void OperatingPoint::validate() const {
    require(spindle_speed_rpm > 0.0, "spindle_speed_rpm must be positive");
    require(axial_depth_mm >= 0.0, "axial_depth_mm must be non-negative");
}

double tooth_period_s(const ProcessParameters& params, double spindle_speed_rpm) {
    if (spindle_speed_rpm <= 0.0)
        throw std::invalid_argument("spindle speed must be positive");
    return 60.0 / (params.teeth_count * spindle_speed_rpm);
}

double spindle_rate_rad_s(double spindle_speed_rpm) {
    return 2.0 * kPi * spindle_speed_rpm / 60.0;
}

}  // namespace millstab
