#pragma once

#include <stdexcept>
#include <string>

namespace millstab {

/// Tool/material constants plus the four process parameters that are
/// uncertain during cutting (damping ratio, natural frequency, and the
/// two cutting-force coefficients).
struct ProcessParameters {
    int teeth_count = 2;
    double modal_mass_kg = 0.04;          ///< identical modal mass for x and y
    double tool_diameter_mm = 6.35;
    double radial_depth_mm = 3.175;
    double damping_ratio = 0.011;
    double natural_frequency_rad_s = 2.0 * 3.14159265358979323846 * 1435.0;
    double tangential_coeff = 6.0e8;      ///< K_t, N/m^2
    double radial_coeff = 2.0e8;          ///< K_r, N/m^2

    /// Throws std::invalid_argument when any physical invariant is violated
    /// (N >= 1, strictly positive quantities, 0 < zeta < 1, 0 < a_e <= D).
    void validate() const;
};

/// A point in the (spindle speed, axial depth) plane.
struct OperatingPoint {
    double spindle_speed_rpm = 0.0;
    double axial_depth_mm = 0.0;

    void validate() const;
};

/// Tooth-passing period tau = 60 / (N * omega_sp) in seconds.
double tooth_period_s(const ProcessParameters& params, double spindle_speed_rpm);

/// Spindle angular rate 2*pi*omega_sp/60 in rad/s.
double spindle_rate_rad_s(double spindle_speed_rpm);

}  // namespace millstab
