#include "millstab/estimator.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "millstab/dynamics.hpp"
#include "millstab/errors.hpp"

namespace millstab {

namespace {
constexpr double kConditionLimit = 1e8;
constexpr double kAccelerationFloor = 1e-9;  // m/s^2 RMS; below this the window is dead

// Per-sample regressors of the cutting side: F = K_t * u + K_r * v with
// u = a_p Ht (q_tau - q) and v = a_p Hr (q_tau - q).
struct CuttingRegressors {
    std::vector<Eigen::Vector2d> tangential;
    std::vector<Eigen::Vector2d> radial;
};

CuttingRegressors cutting_regressors(const SensorWindow& window,
                                     const ProcessParameters& geometry) {
    const double rate = spindle_rate_rad_s(window.op.spindle_speed_rpm);
    const double depth_m = window.op.axial_depth_mm * 1e-3;
    const double t0 = window.start_s();
    CuttingRegressors out;
    out.tangential.reserve(window.samples.size());
    out.radial.reserve(window.samples.size());
    for (std::size_t i = 0; i < window.samples.size(); ++i) {
        const StateSample& sample = window.samples[i];
        const double phase = window.spindle_phase0_rad + rate * (sample.t - t0);
        Eigen::Matrix2d tangential, radial;
        directional_basis_at_phase(geometry, phase, tangential, radial);
        const Eigen::Vector2d difference = window.delayed_q[i] - sample.q;
        out.tangential.push_back(depth_m * (tangential * difference));
        out.radial.push_back(depth_m * (radial * difference));
    }
    return out;
}
}  // namespace

void SensorWindow::validate(const ProcessParameters& params) const {
    if (samples.size() < 50)
        throw std::invalid_argument("sensor window needs at least 50 samples");
    if (delayed_q.size() != samples.size())
        throw std::invalid_argument("delayed displacements not aligned to samples");
    if (sample_step_s <= 0.0)
        throw std::invalid_argument("sample step must be positive");
    const double span = end_s() - start_s();
    const double tau = tooth_period_s(params, op.spindle_speed_rpm);
    if (span < 2.0 * tau)
        throw std::invalid_argument(fmt::format(
            "window span {}s is shorter than two delay periods ({}s)", span, 2.0 * tau));
}

SensorWindow harvest_window(const Trajectory& trajectory,
                            const ProcessParameters& params, double t0_s,
                            double t1_s) {
    if (trajectory.samples.empty())
        throw std::invalid_argument("cannot harvest from an empty trajectory");
    if (t1_s <= t0_s) throw std::invalid_argument("window must have positive span");

    SensorWindow window;
    window.sample_step_s = trajectory.sample_step_s;
    const double rpm = trajectory.speed_at(t1_s);
    for (const SpeedChange& change : trajectory.operating_history) {
        if (change.t_s > t0_s && change.t_s <= t1_s && change.rpm != rpm)
            throw std::invalid_argument(
                "window spans a speed change; harvest within one constant-speed stretch");
    }
    window.op = OperatingPoint{rpm, trajectory.axial_depth_mm};

    const double h = trajectory.sample_step_s;
    const double tau = tooth_period_s(params, rpm);
    auto q_at = [&](double t) -> Eigen::Vector2d {
        if (t < 0.0) return Eigen::Vector2d::Zero();
        const double position = t / h;
        const auto lower = static_cast<std::size_t>(position);
        if (lower + 1 >= trajectory.samples.size())
            return trajectory.samples.back().q;
        const double w = position - static_cast<double>(lower);
        return (1.0 - w) * trajectory.samples[lower].q +
               w * trajectory.samples[lower + 1].q;
    };

    for (const StateSample& sample : trajectory.samples) {
        if (sample.t < t0_s || sample.t > t1_s) continue;
        window.samples.push_back(sample);
        window.delayed_q.push_back(q_at(sample.t - tau));
    }
    if (window.samples.empty())
        throw std::invalid_argument("window contains no samples");
    window.spindle_phase0_rad = trajectory.spindle_phase_at(window.samples.front().t);
    return window;
}

std::pair<std::vector<Eigen::Vector2d>, std::vector<Eigen::Vector2d>>
residual_forces(const SensorWindow& window, const CandidateParameters& candidate,
                const ProcessParameters& geometry) {
    const double mass = geometry.modal_mass_kg;
    const double damping = 2.0 * candidate.damping_ratio * candidate.natural_frequency_rad_s * mass;
    const double stiffness =
        candidate.natural_frequency_rad_s * candidate.natural_frequency_rad_s * mass;

    const CuttingRegressors regressors = cutting_regressors(window, geometry);
    std::vector<Eigen::Vector2d> lhs, rhs;
    lhs.reserve(window.samples.size());
    rhs.reserve(window.samples.size());
    for (std::size_t i = 0; i < window.samples.size(); ++i) {
        const StateSample& sample = window.samples[i];
        lhs.push_back(mass * sample.acceleration + damping * sample.velocity +
                      stiffness * sample.q);
        rhs.push_back(candidate.tangential_coeff * regressors.tangential[i] +
                      candidate.radial_coeff * regressors.radial[i]);
    }
    return {std::move(lhs), std::move(rhs)};
}

double total_loss(const SensorWindow& window, const CandidateParameters& candidate,
                  const ProcessParameters& geometry, double correction_ridge) {
    const auto [lhs, rhs] = residual_forces(window, candidate, geometry);
    double sum = 0.0;
    for (std::size_t i = 0; i < window.samples.size(); ++i) {
        const Eigen::Vector2d& measured = window.samples[i].force;
        sum += (lhs[i] - measured).squaredNorm() + (rhs[i] - measured).squaredNorm();
    }
    double loss = sum / static_cast<double>(window.samples.size());
    if (correction_ridge > 0.0)
        loss *= correction_ridge / (1.0 + correction_ridge);
    return loss;
}

EstimatedParameters estimate_parameters(const SensorWindow& window,
                                        const ProcessParameters& geometry,
                                        const ParameterBounds& bounds) {
    window.validate(geometry);
    const auto count = static_cast<Eigen::Index>(window.samples.size());

    double acceleration_power = 0.0;
    for (const StateSample& sample : window.samples)
        acceleration_power += sample.acceleration.squaredNorm();
    if (std::sqrt(acceleration_power / (2.0 * count)) < kAccelerationFloor)
        throw UnidentifiableWindow("window carries no excitation (acceleration RMS ~ 0)");

    // Structural side: F - M qdd = c_tilde * qd + k_tilde * q.
    Eigen::MatrixXd structural(2 * count, 2);
    Eigen::VectorXd structural_target(2 * count);
    // Cutting side: F = K_t * u + K_r * v.
    Eigen::MatrixXd cutting(2 * count, 2);
    Eigen::VectorXd cutting_target(2 * count);

    const double mass = geometry.modal_mass_kg;
    const CuttingRegressors regressors = cutting_regressors(window, geometry);
    for (Eigen::Index i = 0; i < count; ++i) {
        const StateSample& sample = window.samples[i];
        structural.block<2, 1>(2 * i, 0) = sample.velocity;
        structural.block<2, 1>(2 * i, 1) = sample.q;
        structural_target.segment<2>(2 * i) = sample.force - mass * sample.acceleration;
        cutting.block<2, 1>(2 * i, 0) = regressors.tangential[i];
        cutting.block<2, 1>(2 * i, 1) = regressors.radial[i];
        cutting_target.segment<2>(2 * i) = sample.force;
    }

    auto solve_2col = [](const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                         const char* side) -> Eigen::Vector2d {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(design,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double largest = svd.singularValues()(0);
        const double smallest = svd.singularValues()(1);
        if (!(largest > 0.0) || smallest <= 0.0 || largest / smallest > kConditionLimit)
            throw UnidentifiableWindow(fmt::format(
                "{} fit is rank deficient (condition number {:.3g})", side,
                smallest > 0.0 ? largest / smallest
                               : std::numeric_limits<double>::infinity()));
        return svd.solve(target);
    };

    const Eigen::Vector2d structural_fit =
        solve_2col(structural, structural_target, "structural");
    const Eigen::Vector2d cutting_fit = solve_2col(cutting, cutting_target, "cutting");

    EstimatedParameters out;
    bool clamped = false;
    auto clamp_flag = [&clamped](double value, double lo, double hi) {
        const double c = std::clamp(value, lo, hi);
        if (c != value) clamped = true;
        return c;
    };

    const double k_tilde = structural_fit(1);
    const double omega_raw = k_tilde > 0.0 ? std::sqrt(k_tilde / mass) : bounds.omega_n_min;
    if (k_tilde <= 0.0) clamped = true;
    out.natural_frequency_rad_s =
        clamp_flag(omega_raw, bounds.omega_n_min, bounds.omega_n_max);
    out.damping_ratio =
        clamp_flag(structural_fit(0) / (2.0 * mass * out.natural_frequency_rad_s),
                   bounds.zeta_min, bounds.zeta_max);
    out.tangential_coeff = clamp_flag(cutting_fit(0), bounds.kt_min, bounds.kt_max);
    out.radial_coeff = clamp_flag(cutting_fit(1), bounds.kr_min, bounds.kr_max);
    out.clamped = clamped;

    const CandidateParameters candidate{out.damping_ratio, out.natural_frequency_rad_s,
                                        out.tangential_coeff, out.radial_coeff};
    const auto [lhs, rhs] = residual_forces(window, candidate, geometry);
    double lhs_sum = 0.0, rhs_sum = 0.0;
    for (Eigen::Index i = 0; i < count; ++i) {
        lhs_sum += (lhs[i] - window.samples[i].force).squaredNorm();
        rhs_sum += (rhs[i] - window.samples[i].force).squaredNorm();
    }
    out.residual_lhs_n = std::sqrt(lhs_sum / (2.0 * count));
    out.residual_rhs_n = std::sqrt(rhs_sum / (2.0 * count));
    out.loss = (lhs_sum + rhs_sum) / static_cast<double>(count);
    return out;
}

SldGrid online_sld(const SensorWindow& window, const ProcessParameters& geometry,
                   const GridSpec& spec, int workers, const ParameterBounds& bounds) {
    const EstimatedParameters estimate = estimate_parameters(window, geometry, bounds);
    ProcessParameters estimated = geometry;
    estimated.damping_ratio = estimate.damping_ratio;
    estimated.natural_frequency_rad_s = estimate.natural_frequency_rad_s;
    estimated.tangential_coeff = estimate.tangential_coeff;
    estimated.radial_coeff = estimate.radial_coeff;
    SldGrid grid = compute_sld(estimated, spec, workers);
    grid.timestamp_s = window.end_s();
    return grid;
}

}  // namespace millstab
