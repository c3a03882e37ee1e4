#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "millstab/process.hpp"
#include "millstab/simulate.hpp"
#include "millstab/sld.hpp"

namespace millstab {

/// A contiguous stretch of sensor samples at a constant operating point,
/// together with the delayed displacements q(t - tau) aligned to each sample
/// and the spindle phase at the window start (needed to evaluate H_d).
struct SensorWindow {
    std::vector<StateSample> samples;
    OperatingPoint op;
    std::vector<Eigen::Vector2d> delayed_q;
    double spindle_phase0_rad = 0.0;
    double sample_step_s = 0.0;

    double start_s() const { return samples.empty() ? 0.0 : samples.front().t; }
    double end_s() const { return samples.empty() ? 0.0 : samples.back().t; }
    /// W >= 50, span >= 2 tau, uniform sampling, aligned delayed_q.
    void validate(const ProcessParameters& params) const;
};

/// Cuts the window [t0, t1] out of a trajectory. The spindle speed must be
/// constant over the window; delayed displacements are interpolated from the
/// trajectory itself (zero before t = 0, matching the simulator history).
SensorWindow harvest_window(const Trajectory& trajectory,
                            const ProcessParameters& params, double t0_s,
                            double t1_s);

/// Candidate values for the four uncertain parameters.
struct CandidateParameters {
    double damping_ratio = 0.0;
    double natural_frequency_rad_s = 0.0;
    double tangential_coeff = 0.0;
    double radial_coeff = 0.0;
};

/// Box constraints applied to the estimates.
struct ParameterBounds {
    double zeta_min = 1e-4, zeta_max = 0.5;
    double omega_n_min = 100.0, omega_n_max = 1e5;
    double kt_min = 1e6, kt_max = 1e11;
    double kr_min = 1e6, kr_max = 1e11;
};

struct EstimatedParameters {
    double damping_ratio = 0.0;
    double natural_frequency_rad_s = 0.0;
    double tangential_coeff = 0.0;
    double radial_coeff = 0.0;
    double residual_lhs_n = 0.0;  ///< per-component RMS of F_LHS - F
    double residual_rhs_n = 0.0;  ///< per-component RMS of F_RHS - F
    double loss = 0.0;            ///< total two-sided loss at the estimate
    bool clamped = false;         ///< true when a bound was active (low confidence)
};

/// Model forces on both sides of the perturbation equation for a candidate:
/// F_LHS = M qdd + C(zeta, omega_n) qd + K(omega_n) q and
/// F_RHS = a_p H_d(K_t, K_r, t) [q(t-tau) - q(t)].
/// `geometry` supplies mass, teeth, diameter and radial depth; its own
/// uncertain-parameter fields are ignored.
std::pair<std::vector<Eigen::Vector2d>, std::vector<Eigen::Vector2d>>
residual_forces(const SensorWindow& window, const CandidateParameters& candidate,
                const ProcessParameters& geometry);

/// Two-sided physics residual: mean over samples of
/// |F_LHS - F|^2 + |F_RHS - F|^2. With the optional ridge weight
/// lambda, the correction terms absorb a fraction of each residual and the
/// loss becomes lambda/(1+lambda) times the unregularized value; the
/// minimizing parameters are identical.
double total_loss(const SensorWindow& window, const CandidateParameters& candidate,
                  const ProcessParameters& geometry, double correction_ridge = 0.0);

/// Separable linear least squares: (2 zeta omega_n M, omega_n^2 M) from the
/// structural side and (K_t, K_r) from the cutting side, both against the
/// measured force. Throws UnidentifiableWindow on rank-deficient problems
/// or insufficient excitation.
EstimatedParameters estimate_parameters(const SensorWindow& window,
                                        const ProcessParameters& geometry,
                                        const ParameterBounds& bounds = {});

/// estimate_parameters composed with compute_sld on the estimated values;
/// the grid timestamp is the window end time.
SldGrid online_sld(const SensorWindow& window, const ProcessParameters& geometry,
                   const GridSpec& spec, int workers = 1,
                   const ParameterBounds& bounds = {});

}  // namespace millstab
