#include "millstab/simulate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "millstab/dynamics.hpp"

namespace millstab {

namespace {
// Guard floor so a zero initial perturbation still has a finite threshold.
constexpr double kMinGuardScale = 1e-12;
}  // namespace

double Trajectory::speed_at(double t_s) const {
    double rpm = operating_history.empty() ? 0.0 : operating_history.front().rpm;
    for (const SpeedChange& change : operating_history) {
        if (change.t_s <= t_s) rpm = change.rpm;
        else break;
    }
    return rpm;
}

double Trajectory::spindle_phase_at(double t_s) const {
    double phase = 0.0;
    for (std::size_t i = 0; i < operating_history.size(); ++i) {
        const double seg_start = operating_history[i].t_s;
        if (seg_start >= t_s) break;
        const double seg_end = (i + 1 < operating_history.size())
                                   ? std::min(operating_history[i + 1].t_s, t_s)
                                   : t_s;
        phase += spindle_rate_rad_s(operating_history[i].rpm) * (seg_end - seg_start);
    }
    return phase;
}

DdeSimulator::DdeSimulator(const ProcessParameters& params, double initial_rpm,
                           double axial_depth_mm, double step_s,
                           const Eigen::Vector2d& initial_perturbation_m,
                           double noise_std, std::uint64_t seed)
    : params_(params),
      rpm_(initial_rpm),
      axial_depth_mm_(axial_depth_mm),
      step_s_(step_s),
      noise_std_(noise_std),
      q_(initial_perturbation_m),
      velocity_(Eigen::Vector2d::Zero()),
      noise_(seed) {
    params_.validate();
    if (initial_rpm <= 0.0) throw std::invalid_argument("spindle speed must be positive");
    if (axial_depth_mm < 0.0) throw std::invalid_argument("axial depth must be non-negative");
    if (step_s <= 0.0) throw std::invalid_argument("step must be positive");
    if (noise_std < 0.0) throw std::invalid_argument("noise_std must be non-negative");
    delay_s_ = tooth_period_s(params_, rpm_);
    if (step_s_ > delay_s_ / 100.0)
        throw std::invalid_argument(fmt::format(
            "step {}s under-resolves the delay {}s: require h <= tau/100", step_s_,
            delay_s_));

    divergence_threshold_m_ =
        1e6 * std::max(initial_perturbation_m.norm(), kMinGuardScale);
    trajectory_.sample_step_s = step_s_;
    trajectory_.axial_depth_mm = axial_depth_mm_;
    trajectory_.operating_history.push_back({0.0, rpm_});
    history_.push_back(q_);
    record_sample(0.0, q_, velocity_);
}

double DdeSimulator::time_s() const { return static_cast<double>(step_index_) * step_s_; }

Eigen::Vector2d DdeSimulator::delayed_position(double t_s) const {
    const double lookup = t_s - delay_s_;
    if (lookup < 0.0) return Eigen::Vector2d::Zero();
    const double position = lookup / step_s_;
    const auto lower = static_cast<std::size_t>(position);
    if (lower + 1 >= history_.size()) return history_.back();
    const double weight = position - static_cast<double>(lower);
    return (1.0 - weight) * history_[lower] + weight * history_[lower + 1];
}

DdeSimulator::Derivative DdeSimulator::derivative(double t_s, const Eigen::Vector2d& q,
                                                  const Eigen::Vector2d& velocity) const {
    const double local_phase =
        spindle_phase_ + spindle_rate_rad_s(rpm_) * (t_s - time_s());
    const Eigen::Matrix2d directional =
        directional_matrix_at_phase(params_, local_phase);
    const Eigen::Vector2d force = regenerative_force(
        directional, axial_depth_mm_ * 1e-3, q, delayed_position(t_s));

    const double mass = params_.modal_mass_kg;
    const double damping = 2.0 * params_.damping_ratio * params_.natural_frequency_rad_s;
    const double stiffness = params_.natural_frequency_rad_s * params_.natural_frequency_rad_s;
    Derivative out;
    out.velocity = velocity;
    out.acceleration = force / mass - damping * velocity - stiffness * q;
    return out;
}

void DdeSimulator::record_sample(double t_s, const Eigen::Vector2d& q,
                                 const Eigen::Vector2d& velocity) {
    const Eigen::Matrix2d directional = directional_matrix_at_phase(params_, spindle_phase_);
    const Eigen::Vector2d force = regenerative_force(directional, axial_depth_mm_ * 1e-3,
                                                     q, delayed_position(t_s));
    const double mass = params_.modal_mass_kg;
    const double damping = 2.0 * params_.damping_ratio * params_.natural_frequency_rad_s;
    const double stiffness = params_.natural_frequency_rad_s * params_.natural_frequency_rad_s;
    StateSample sample;
    sample.t = t_s;
    sample.q = q;
    sample.velocity = velocity;
    sample.acceleration = force / mass - damping * velocity - stiffness * q;
    sample.force = force;
    if (noise_std_ > 0.0) {
        auto perturb = [&](Eigen::Vector2d& value) {
            value.x() *= 1.0 + noise_std_ * noise_.next();
            value.y() *= 1.0 + noise_std_ * noise_.next();
        };
        perturb(sample.q);
        perturb(sample.velocity);
        perturb(sample.acceleration);
        perturb(sample.force);
    }
    trajectory_.samples.push_back(sample);
}

void DdeSimulator::step_once() {
    const double t = time_s();
    const double h = step_s_;

    const Derivative k1 = derivative(t, q_, velocity_);
    const Derivative k2 = derivative(t + 0.5 * h, q_ + 0.5 * h * k1.velocity,
                                     velocity_ + 0.5 * h * k1.acceleration);
    const Derivative k3 = derivative(t + 0.5 * h, q_ + 0.5 * h * k2.velocity,
                                     velocity_ + 0.5 * h * k2.acceleration);
    const Derivative k4 =
        derivative(t + h, q_ + h * k3.velocity, velocity_ + h * k3.acceleration);

    q_ += (h / 6.0) * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
    velocity_ += (h / 6.0) * (k1.acceleration + 2.0 * k2.acceleration +
                              2.0 * k3.acceleration + k4.acceleration);
    spindle_phase_ += spindle_rate_rad_s(rpm_) * h;
    ++step_index_;

    const double now = time_s();
    if (!q_.allFinite() || !velocity_.allFinite()) {
        trajectory_.divergence_time_s = now - h;  // last finite time
        return;
    }
    history_.push_back(q_);
    record_sample(now, q_, velocity_);
    if (q_.norm() > divergence_threshold_m_) trajectory_.divergence_time_s = now;
}

void DdeSimulator::advance_to(double t_s) {
    // Tolerate end times that are a hair below a grid point.
    while (!diverged() &&
           (static_cast<double>(step_index_) + 1.0) * step_s_ <= t_s * (1.0 + 1e-12)) {
        step_once();
    }
}

void DdeSimulator::set_speed(double rpm) {
    if (rpm <= 0.0) throw std::invalid_argument("spindle speed must be positive");
    const double delay = tooth_period_s(params_, rpm);
    if (step_s_ > delay / 100.0)
        throw std::invalid_argument(fmt::format(
            "step {}s under-resolves the delay {}s at {} rpm", step_s_, delay, rpm));
    if (rpm == rpm_) return;
    rpm_ = rpm;
    delay_s_ = delay;
    trajectory_.operating_history.push_back({time_s(), rpm_});
}

void DdeSimulator::set_parameters(const ProcessParameters& params) {
    params.validate();
    if (params.teeth_count != params_.teeth_count)
        throw std::invalid_argument("teeth_count cannot drift mid-run");
    params_ = params;
    delay_s_ = tooth_period_s(params_, rpm_);
}

Trajectory simulate_dde(const ProcessParameters& params,
                        const std::vector<SpeedChange>& schedule,
                        double axial_depth_mm, double duration_s, double step_s,
                        const Eigen::Vector2d& initial_perturbation_m,
                        double noise_std, std::uint64_t seed) {
    if (schedule.empty() || schedule.front().t_s != 0.0)
        throw std::invalid_argument("schedule must start at t = 0");
    for (const SpeedChange& change : schedule) {
        if (duration_s < tooth_period_s(params, change.rpm))
            throw std::invalid_argument(
                "duration must cover at least one delay period for every scheduled speed");
    }

    DdeSimulator sim(params, schedule.front().rpm, axial_depth_mm, step_s,
                     initial_perturbation_m, noise_std, seed);
    for (std::size_t i = 1; i < schedule.size() && !sim.diverged(); ++i) {
        sim.advance_to(schedule[i].t_s);
        sim.set_speed(schedule[i].rpm);
    }
    sim.advance_to(duration_s);
    return sim.trajectory();
}

}  // namespace millstab
