#include "millstab/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace millstab {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_angle(double angle_rad) {
    double wrapped = std::fmod(angle_rad, kTwoPi);
    if (wrapped < 0.0) wrapped += kTwoPi;
    return wrapped;
}
}  // namespace

double tooth_angle(const ProcessParameters& params, double spindle_speed_rpm,
                   double t_s, int tooth_index) {
    const double base = spindle_rate_rad_s(spindle_speed_rpm) * t_s;
    const double offset = tooth_index * kTwoPi / params.teeth_count;
    return wrap_angle(base + offset);
}

EngagementWindow engagement_window(const ProcessParameters& params) {
    const double ratio = 1.0 - 2.0 * params.radial_depth_mm / params.tool_diameter_mm;
    if (ratio < -1.0)
        throw std::invalid_argument("radial depth exceeds tool diameter: entry angle undefined");
    return EngagementWindow{std::acos(std::clamp(ratio, -1.0, 1.0)), kPi};
}

bool tooth_engaged(const EngagementWindow& window, double angle_rad) {
    const double phi = wrap_angle(angle_rad);
    return phi > window.entry_rad && phi < window.exit_rad;
}

Eigen::Matrix2d directional_matrix_at_phase(const ProcessParameters& params,
                                            double spindle_phase_rad) {
    Eigen::Matrix2d tangential, radial;
    directional_basis_at_phase(params, spindle_phase_rad, tangential, radial);
    return params.tangential_coeff * tangential + params.radial_coeff * radial;
}

Eigen::Matrix2d directional_matrix(const ProcessParameters& params,
                                   double spindle_speed_rpm, double t_s) {
    return directional_matrix_at_phase(params,
                                       spindle_rate_rad_s(spindle_speed_rpm) * t_s);
}

void directional_basis_at_phase(const ProcessParameters& params,
                                double spindle_phase_rad,
                                Eigen::Matrix2d& tangential_part,
                                Eigen::Matrix2d& radial_part) {
    const EngagementWindow window = engagement_window(params);
    tangential_part.setZero();
    radial_part.setZero();
    for (int j = 0; j < params.teeth_count; ++j) {
        const double phi = spindle_phase_rad + j * kTwoPi / params.teeth_count;
        if (!tooth_engaged(window, phi)) continue;
        const double s2 = std::sin(2.0 * phi);
        const double c2 = std::cos(2.0 * phi);
        Eigen::Matrix2d t, r;
        t << s2, 1.0 + c2,
             -(1.0 - c2), -s2;
        r << 1.0 - c2, s2,
             s2, 1.0 + c2;
        tangential_part += t;
        radial_part += r;
    }
    tangential_part *= 0.5;
    radial_part *= 0.5;
}

std::vector<double> engagement_switch_times(const ProcessParameters& params,
                                            double spindle_speed_rpm,
                                            double t0_s, double t1_s,
                                            double phase0_rad) {
    std::vector<double> times;
    if (t1_s <= t0_s) return times;
    const EngagementWindow window = engagement_window(params);
    const double rate = spindle_rate_rad_s(spindle_speed_rpm);
    const double targets[2] = {window.entry_rad, window.exit_rad};
    for (int j = 0; j < params.teeth_count; ++j) {
        const double offset = phase0_rad + j * kTwoPi / params.teeth_count;
        for (double target : targets) {
            // Solve rate*t + offset = target (mod 2*pi) for t in (t0, t1).
            const double first_k = std::ceil((rate * t0_s + offset - target) / kTwoPi);
            for (double k = first_k;; k += 1.0) {
                const double t = (target - offset + kTwoPi * k) / rate;
                if (t >= t1_s) break;
                if (t > t0_s) times.push_back(t);
            }
        }
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-15; }),
                times.end());
    return times;
}

}  // namespace millstab
