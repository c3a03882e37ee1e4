#pragma once

#include <Eigen/Dense>
#include <vector>

#include "millstab/process.hpp"

namespace millstab {

/// Resolution of the semi-discretization: the delay period tau is split
/// into delay_resolution sub-intervals of length eps = tau / m.
struct SdmConfig {
    int delay_resolution = 40;

    void validate() const;
};

/// State-space matrices of the time-varying delay system
/// xdot = A(t) x + B(t) x(t - tau) + D(t) u, with x = (q, qdot).
struct ContinuousMatrices {
    Eigen::Matrix4d A;
    Eigen::Matrix4d B;
    Eigen::Matrix<double, 4, 2> D;
};

ContinuousMatrices continuous_matrices(const ProcessParameters& params,
                                       const OperatingPoint& op, double t_s);

/// Interval averages A_i = (1/eps) * integral of A(t) over sub-interval i,
/// likewise B_i and D_i. Quadrature splits at engagement switching instants.
ContinuousMatrices interval_average(const ProcessParameters& params,
                                    const OperatingPoint& op, int interval_index,
                                    int delay_resolution);

/// Exact one-interval discretization of the averaged system:
///   P = exp(A eps), R = (exp(A eps) - I) A^-1 B, Q = (exp(A eps) - I) A^-1 D,
/// computed from the exponential of an augmented block matrix so no inverse
/// of A is ever formed (valid for singular A as well).
struct StepMatrices {
    Eigen::Matrix4d P;
    Eigen::Matrix4d R;
    Eigen::Matrix<double, 4, 2> Q;
};

StepMatrices step_matrices(const Eigen::Matrix4d& A, const Eigen::Matrix4d& B,
                           const Eigen::Matrix<double, 4, 2>& D, double eps_s);

/// One step of the augmented update y_{i+1} = E_i y_i + G_i u_i on the
/// state y_i = (q_i, qdot_i, q_{i-1}, ..., q_{i-m}) of dimension 2(m+2).
struct AugmentedStep {
    Eigen::MatrixXd E;
    Eigen::MatrixXd G;
};

AugmentedStep augmented_step(const StepMatrices& step, int delay_resolution);

/// Monodromy data over one delay period: Phi = E_{m-1} ... E_0 and
/// Gamma = sum_j (prod_{l>j} E_l) G_j, with the anchor interval fixed
/// at i = 0 (tooth 0 at angle zero at the period start).
struct PeriodTransition {
    Eigen::MatrixXd Phi;
    Eigen::MatrixXd Gamma;
    double rho = 0.0;        ///< spectral radius of Phi
    double gamma_max = 0.0;  ///< largest singular value of Gamma
};

PeriodTransition period_transition(const ProcessParameters& params,
                                   const OperatingPoint& op, const SdmConfig& cfg);

/// Interval-averaged directional matrices over one delay period for a fixed
/// speed. These are independent of the axial depth, so a speed column of an
/// SLD sweep computes them once.
std::vector<Eigen::Matrix2d> averaged_directional_profile(
    const ProcessParameters& params, double spindle_speed_rpm,
    int delay_resolution);

PeriodTransition period_transition_from_profile(
    const ProcessParameters& params, double spindle_speed_rpm,
    double axial_depth_mm, const std::vector<Eigen::Matrix2d>& profile);

/// Spectral radius of the zero-depth limit: exp(-zeta * omega_n * tau).
double analytic_zero_depth_rho(const ProcessParameters& params,
                               double spindle_speed_rpm);

double largest_singular_value(const Eigen::MatrixXd& matrix);

}  // namespace millstab
