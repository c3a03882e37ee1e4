#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "millstab/process.hpp"
#include "millstab/random.hpp"

namespace millstab {

/// One recorded sensor sample. Positions in m, velocities in m/s,
/// accelerations in m/s^2, forces in N.
struct StateSample {
    double t = 0.0;
    Eigen::Vector2d q = Eigen::Vector2d::Zero();
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    Eigen::Vector2d acceleration = Eigen::Vector2d::Zero();
    Eigen::Vector2d force = Eigen::Vector2d::Zero();
};

struct SpeedChange {
    double t_s = 0.0;
    double rpm = 0.0;
};

/// Simulator output: uniformly sampled sensor stream plus the spindle-speed
/// history needed to reconstruct delays and tooth phases.
struct Trajectory {
    std::vector<StateSample> samples;
    double sample_step_s = 0.0;
    double axial_depth_mm = 0.0;
    std::vector<SpeedChange> operating_history;  ///< first entry at t = 0
    std::optional<double> divergence_time_s;

    bool diverged() const { return divergence_time_s.has_value(); }
    double speed_at(double t_s) const;
    /// Spindle phase of tooth 0 at time t, integrated exactly over the
    /// piecewise-constant speed history.
    double spindle_phase_at(double t_s) const;
};

/// Fixed-step time-domain integration of the regenerative perturbation
/// dynamics M qdd + C qd + K q = a_p H_d(t) [q(t-tau) - q(t)], with a
/// zero-filled history for t < 0, q(0) = initial_perturbation, qd(0) = 0.
///
/// The recorded (not integrated) signals optionally carry multiplicative
/// Gaussian noise of relative magnitude noise_std, drawn from a generator
/// seeded with `seed`. A divergence guard stops the run when |q| exceeds
/// 1e6 times the initial perturbation; the partial trajectory is returned
/// with divergence_time_s set.
Trajectory simulate_dde(const ProcessParameters& params,
                        const std::vector<SpeedChange>& schedule,
                        double axial_depth_mm, double duration_s, double step_s,
                        const Eigen::Vector2d& initial_perturbation_m,
                        double noise_std, std::uint64_t seed);

/// Incremental form of the same integrator, used by the closed-loop runner
/// to interleave integration with parameter drift and speed commands.
class DdeSimulator {
  public:
    DdeSimulator(const ProcessParameters& params, double initial_rpm,
                 double axial_depth_mm, double step_s,
                 const Eigen::Vector2d& initial_perturbation_m, double noise_std,
                 std::uint64_t seed);

    /// Integrates up to the last step-grid point not exceeding t_s.
    void advance_to(double t_s);
    /// Applies a new spindle speed at the current time.
    void set_speed(double rpm);
    /// Swaps the true process parameters at the current time (drift).
    void set_parameters(const ProcessParameters& params);

    double time_s() const;
    bool diverged() const { return trajectory_.diverged(); }
    const Trajectory& trajectory() const { return trajectory_; }
    double axial_depth_mm() const { return axial_depth_mm_; }
    const ProcessParameters& parameters() const { return params_; }
    double current_rpm() const { return rpm_; }

  private:
    struct Derivative {
        Eigen::Vector2d velocity;
        Eigen::Vector2d acceleration;
    };

    Derivative derivative(double t_s, const Eigen::Vector2d& q,
                          const Eigen::Vector2d& velocity) const;
    Eigen::Vector2d delayed_position(double t_s) const;
    void record_sample(double t_s, const Eigen::Vector2d& q,
                       const Eigen::Vector2d& velocity);
    void step_once();

    ProcessParameters params_;
    double rpm_;
    double axial_depth_mm_;
    double step_s_;
    double noise_std_;
    double divergence_threshold_m_;

    std::size_t step_index_ = 0;
    Eigen::Vector2d q_;
    Eigen::Vector2d velocity_;
    double spindle_phase_ = 0.0;        ///< phase of tooth 0 at current time
    double delay_s_;
    std::vector<Eigen::Vector2d> history_;  ///< noise-free q at each step
    Trajectory trajectory_;
    GaussianSampler noise_;
};

}  // namespace millstab
