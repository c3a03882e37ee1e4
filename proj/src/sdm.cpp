#include "millstab/sdm.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>
#include <lapacke.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "millstab/dynamics.hpp"
#include "millstab/errors.hpp"

namespace millstab {

namespace {

// 8-node Gauss-Legendre rule on [-1, 1].
constexpr int kQuadNodes = 8;
constexpr double kQuadX[kQuadNodes] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kQuadW[kQuadNodes] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

// Average of H_d over [t0, t1], splitting the quadrature at the switching
// instants of the engagement function so each piece is smooth.
Eigen::Matrix2d average_directional(const ProcessParameters& params,
                                    double spindle_speed_rpm, double t0_s,
                                    double t1_s) {
    std::vector<double> cuts =
        engagement_switch_times(params, spindle_speed_rpm, t0_s, t1_s);
    cuts.insert(cuts.begin(), t0_s);
    cuts.push_back(t1_s);

    const double rate = spindle_rate_rad_s(spindle_speed_rpm);
    Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double a = cuts[p];
        const double b = cuts[p + 1];
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (int n = 0; n < kQuadNodes; ++n) {
            const double t = mid + half * kQuadX[n];
            sum += (kQuadW[n] * half) *
                   directional_matrix_at_phase(params, rate * t);
        }
    }
    return sum / (t1_s - t0_s);
}

ContinuousMatrices assemble_state_matrices(const ProcessParameters& params,
                                           double axial_depth_mm,
                                           const Eigen::Matrix2d& directional) {
    const double mass = params.modal_mass_kg;
    const double damping = 2.0 * params.damping_ratio * params.natural_frequency_rad_s;
    const double stiffness_over_mass =
        params.natural_frequency_rad_s * params.natural_frequency_rad_s;
    const double depth_m = axial_depth_mm * 1e-3;
    const Eigen::Matrix2d coupling = (depth_m / mass) * directional;

    ContinuousMatrices out;
    out.A.setZero();
    out.A.topRightCorner<2, 2>() = Eigen::Matrix2d::Identity();
    out.A.bottomLeftCorner<2, 2>() =
        -(stiffness_over_mass * Eigen::Matrix2d::Identity() + coupling);
    out.A.bottomRightCorner<2, 2>() = -damping * Eigen::Matrix2d::Identity();
    out.B.setZero();
    out.B.bottomLeftCorner<2, 2>() = coupling;
    out.D.setZero();
    out.D.bottomRows<2>() = coupling;
    return out;
}

double spectral_radius(const Eigen::MatrixXd& matrix) {
    // dgees (Schur form, no vectors) is the fast path; Eigen's solver is the
    // fallback when LAPACK reports a convergence failure.
    const int n = static_cast<int>(matrix.rows());
    Eigen::MatrixXd work = matrix;
    std::vector<double> real_parts(n), imag_parts(n);
    int sdim = 0;
    const int info =
        LAPACKE_dgees(LAPACK_COL_MAJOR, 'N', 'N', nullptr, n, work.data(), n, &sdim,
                      real_parts.data(), imag_parts.data(), nullptr, n);
    if (info == 0) {
        double largest = 0.0;
        for (int i = 0; i < n; ++i)
            largest = std::max(largest, std::hypot(real_parts[i], imag_parts[i]));
        return largest;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("eigenvalue iteration failed on the period map");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// Left-multiplies the accumulator by E_i without materializing E_i.
// Block layout of E_i: top 4 rows act as [P | 0 ... 0 | Rh | Rh] with
// Rh = R(first 4 rows, 2 cols)/2 on the two oldest history slots, rows 4-5
// copy the current position, and the remaining rows shift the history.
void apply_structured_step(const StepMatrices& step, Eigen::MatrixXd& acc,
                           Eigen::MatrixXd& scratch) {
    const Eigen::Index n = acc.rows();
    const Eigen::Matrix<double, 4, 2> r_half = 0.5 * step.R.leftCols<2>();

    scratch.resize(acc.rows(), acc.cols());
    scratch.topRows<4>() =
        step.P * acc.topRows<4>() +
        r_half * (acc.middleRows(n - 4, 2) + acc.middleRows(n - 2, 2));
    scratch.middleRows(4, 2) = acc.topRows<2>();
    scratch.bottomRows(n - 6) = acc.middleRows(4, n - 6);
    acc.swap(scratch);
}

}  // namespace

void SdmConfig::validate() const {
    if (delay_resolution < 4)
        throw std::invalid_argument("delay_resolution must be at least 4");
}

ContinuousMatrices continuous_matrices(const ProcessParameters& params,
                                       const OperatingPoint& op, double t_s) {
    params.validate();
    op.validate();
    return assemble_state_matrices(
        params, op.axial_depth_mm,
        directional_matrix(params, op.spindle_speed_rpm, t_s));
}

ContinuousMatrices interval_average(const ProcessParameters& params,
                                    const OperatingPoint& op, int interval_index,
                                    int delay_resolution) {
    if (interval_index < 0 || interval_index >= delay_resolution)
        throw std::invalid_argument("interval index out of range");
    const double eps = tooth_period_s(params, op.spindle_speed_rpm) / delay_resolution;
    const Eigen::Matrix2d averaged =
        average_directional(params, op.spindle_speed_rpm, interval_index * eps,
                            (interval_index + 1) * eps);
    return assemble_state_matrices(params, op.axial_depth_mm, averaged);
}

StepMatrices step_matrices(const Eigen::Matrix4d& A, const Eigen::Matrix4d& B,
                           const Eigen::Matrix<double, 4, 2>& D, double eps_s) {
    if (eps_s <= 0.0) throw std::invalid_argument("eps must be positive");

    // exp of [[A, B, D], [0]] * eps carries exp(A eps) in the top-left block
    // and int_0^eps exp(A s) ds * [B D] in the top-right blocks.
    Eigen::Matrix<double, 10, 10> augmented = Eigen::Matrix<double, 10, 10>::Zero();
    augmented.topLeftCorner<4, 4>() = A;
    augmented.block<4, 4>(0, 4) = B;
    augmented.block<4, 2>(0, 8) = D;
    augmented *= eps_s;
    const Eigen::Matrix<double, 10, 10> exponential = augmented.exp();

    StepMatrices out;
    out.P = exponential.topLeftCorner<4, 4>();
    out.R = exponential.block<4, 4>(0, 4);
    out.Q = exponential.block<4, 2>(0, 8);
    if (!out.P.allFinite() || !out.R.allFinite() || !out.Q.allFinite())
        throw NumericalFailure("non-finite entries in step matrices");
    return out;
}

AugmentedStep augmented_step(const StepMatrices& step, int delay_resolution) {
    const int m = delay_resolution;
    if (m < 4) throw std::invalid_argument("delay_resolution must be at least 4");
    const int n = 2 * (m + 2);

    AugmentedStep out;
    out.E = Eigen::MatrixXd::Zero(n, n);
    out.E.topLeftCorner<4, 4>() = step.P;
    const Eigen::Matrix<double, 4, 2> r_half = 0.5 * step.R.leftCols<2>();
    out.E.block<4, 2>(0, n - 4) = r_half;   // q_{i-m+1}
    out.E.block<4, 2>(0, n - 2) = r_half;   // q_{i-m}
    out.E.block<2, 2>(4, 0) = Eigen::Matrix2d::Identity();
    out.E.block(6, 4, 2 * m - 2, 2 * m - 2) =
        Eigen::MatrixXd::Identity(2 * m - 2, 2 * m - 2);

    out.G = Eigen::MatrixXd::Zero(n, 2);
    out.G.topRows<4>() = step.Q;
    return out;
}

std::vector<Eigen::Matrix2d> averaged_directional_profile(
    const ProcessParameters& params, double spindle_speed_rpm,
    int delay_resolution) {
    const double eps =
        tooth_period_s(params, spindle_speed_rpm) / delay_resolution;
    std::vector<Eigen::Matrix2d> profile;
    profile.reserve(delay_resolution);
    for (int i = 0; i < delay_resolution; ++i)
        profile.push_back(average_directional(params, spindle_speed_rpm, i * eps,
                                              (i + 1) * eps));
    return profile;
}

PeriodTransition period_transition_from_profile(
    const ProcessParameters& params, double spindle_speed_rpm,
    double axial_depth_mm, const std::vector<Eigen::Matrix2d>& profile) {
    const int m = static_cast<int>(profile.size());
    const int n = 2 * (m + 2);
    const double eps = tooth_period_s(params, spindle_speed_rpm) / m;

    PeriodTransition out;
    out.Phi = Eigen::MatrixXd::Identity(n, n);
    out.Gamma = Eigen::MatrixXd::Zero(n, 2);
    Eigen::MatrixXd scratch_phi(n, n), scratch_gamma(n, 2);
    for (int i = 0; i < m; ++i) {
        ContinuousMatrices avg =
            assemble_state_matrices(params, axial_depth_mm, profile[i]);
        StepMatrices step;
        try {
            step = step_matrices(avg.A, avg.B, avg.D, eps);
        } catch (const NumericalFailure& failure) {
            throw NumericalFailure(
                fmt::format("interval {}: {}", i, failure.what()));
        }
        apply_structured_step(step, out.Phi, scratch_phi);
        apply_structured_step(step, out.Gamma, scratch_gamma);
        out.Gamma.topRows<4>() += step.Q;
    }
    // Balancing the velocity rows (a similarity transform, so the spectrum
    // is unchanged) speeds up the Schur iteration noticeably.
    Eigen::MatrixXd balanced = out.Phi;
    const double scale = params.natural_frequency_rad_s;
    balanced.row(2) /= scale;
    balanced.row(3) /= scale;
    balanced.col(2) *= scale;
    balanced.col(3) *= scale;
    out.rho = spectral_radius(balanced);
    out.gamma_max = largest_singular_value(out.Gamma);
    return out;
}

PeriodTransition period_transition(const ProcessParameters& params,
                                   const OperatingPoint& op, const SdmConfig& cfg) {
    params.validate();
    op.validate();
    cfg.validate();
    return period_transition_from_profile(
        params, op.spindle_speed_rpm, op.axial_depth_mm,
        averaged_directional_profile(params, op.spindle_speed_rpm,
                                     cfg.delay_resolution));
}

double analytic_zero_depth_rho(const ProcessParameters& params,
                               double spindle_speed_rpm) {
    return std::exp(-params.damping_ratio * params.natural_frequency_rad_s *
                    tooth_period_s(params, spindle_speed_rpm));
}

double largest_singular_value(const Eigen::MatrixXd& matrix) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(matrix).singularValues()(0);
}

}  // namespace millstab
