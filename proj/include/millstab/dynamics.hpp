#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "millstab/process.hpp"

namespace millstab {

/// Angle of tooth j at time t for a constant spindle speed, reduced to
/// [0, 2*pi). Teeth are offset by j * 2*pi/N for j = 0..N-1.
double tooth_angle(const ProcessParameters& params, double spindle_speed_rpm,
                   double t_s, int tooth_index);

struct EngagementWindow {
    double entry_rad = 0.0;  ///< phi_in = arccos(1 - 2 a_e / D)
    double exit_rad = 0.0;   ///< phi_out = pi
};

/// Entry/exit angles of the radial engagement. Rejects a_e > D.
EngagementWindow engagement_window(const ProcessParameters& params);

/// True when an angle (any representative, need not be reduced) falls
/// strictly inside the open cutting interval (phi_in, phi_out).
bool tooth_engaged(const EngagementWindow& window, double angle_rad);

/// Directional cutting-force matrix H_d at a given spindle phase.
/// spindle_phase_rad is the angle of tooth 0; tooth j sits at
/// phase + j*2*pi/N. H_d = 1/2 sum_j g(phi_j) * [eta matrix](phi_j).
Eigen::Matrix2d directional_matrix_at_phase(const ProcessParameters& params,
                                            double spindle_phase_rad);

/// H_d(t) for a constant spindle speed with tooth 0 at angle 0 at t = 0.
Eigen::Matrix2d directional_matrix(const ProcessParameters& params,
                                   double spindle_speed_rpm, double t_s);

/// Splits H_d into the coefficient basis H_d = K_t * Ht + K_r * Hr.
/// Used by the estimator, where (K_t, K_r) are the unknowns.
void directional_basis_at_phase(const ProcessParameters& params,
                                double spindle_phase_rad,
                                Eigen::Matrix2d& tangential_part,
                                Eigen::Matrix2d& radial_part);

/// All instants in [t0, t1] at which some tooth crosses the engagement
/// entry or exit angle, for a constant speed with tooth 0 at
/// phase0 + rate*t. Sorted, deduplicated, interior points only.
std::vector<double> engagement_switch_times(const ProcessParameters& params,
                                            double spindle_speed_rpm,
                                            double t0_s, double t1_s,
                                            double phase0_rad = 0.0);

/// Regenerative cutting force F_d = a_p * H_d * (q_delayed - q_current).
///
/// The delayed-minus-current difference is the convention encoded by the
/// state-space matrices used for stability analysis; the time-domain
/// simulator and the estimator share it so that all three views describe
/// the same system.
inline Eigen::Vector2d regenerative_force(const Eigen::Matrix2d& directional,
                                          double axial_depth_m,
                                          const Eigen::Vector2d& q,
                                          const Eigen::Vector2d& q_delayed) {
    return axial_depth_m * (directional * (q_delayed - q));
}

}  // namespace millstab
