#include "millstab/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "millstab/errors.hpp"

namespace millstab {

void Scenario::validate() const {
    nominal.validate();
    initial.validate();
    for (const DriftEvent& event : drift_events) {
        if (event.t_s < 0.0 || event.t_s > duration_s)
            throw std::invalid_argument("drift event time outside [0, duration]");
        event.params.validate();
    }
    if (duration_s <= 0.0) throw std::invalid_argument("duration must be positive");
    if (control_start_s < 0.0)
        throw std::invalid_argument("control_start must be non-negative");
    if (estimation_period_s < 0.0)
        throw std::invalid_argument("estimation period must be non-negative");
    if (noise_std < 0.0) throw std::invalid_argument("noise_std must be non-negative");
    if (step_fraction <= 0.0 || step_fraction > 0.01)
        throw std::invalid_argument("step_fraction must lie in (0, 0.01]");
    if (initial_perturbation_m <= 0.0)
        throw std::invalid_argument("initial perturbation must be positive");
    if (online_context_rows < 0)
        throw std::invalid_argument("online_context_rows must be non-negative");
    if (mode != RunMode::open_loop) {
        controller.validate();
        grid.validate();
        const double period = resolved_estimation_period_s();
        const double window = window_span_s(initial.spindle_speed_rpm);
        if (period < 0.5 * window)
            throw std::invalid_argument(
                "estimation period shorter than half the sensor window");
        (void)period;
    }
    if (feed_rate_mm_s <= 0.0) throw std::invalid_argument("feed rate must be positive");
}

double Scenario::window_span_s(double rpm) const {
    return 4.0 * tooth_period_s(nominal, rpm);
}

double Scenario::resolved_estimation_period_s() const {
    if (estimation_period_s > 0.0) return estimation_period_s;
    // Non-overlapping windows: 2 tau * ceil(window / 2 tau) with the default
    // four-period window reduces to exactly 4 tau of the initial speed.
    const double two_tau = 2.0 * tooth_period_s(nominal, initial.spindle_speed_rpm);
    return two_tau * std::ceil(window_span_s(initial.spindle_speed_rpm) / two_tau -
                               1e-12);
}

ProcessParameters inject_drift(const ProcessParameters& params,
                               const DriftEvent& event) {
    event.params.validate();
    if (event.params.teeth_count != params.teeth_count)
        throw std::invalid_argument("drift cannot change the tooth count");
    return event.params;
}

double rms_displacement(const Trajectory& trajectory, double t0_s, double t1_s) {
    double power = 0.0;
    std::size_t count = 0;
    for (const StateSample& sample : trajectory.samples) {
        if (sample.t < t0_s || sample.t > t1_s) continue;
        power += sample.q.squaredNorm();
        ++count;
    }
    return count == 0 ? 0.0 : std::sqrt(power / static_cast<double>(count));
}

const char* to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::stabilized: return "stabilized";
        case Verdict::diverged: return "diverged";
        case Verdict::held: return "held";
    }
    return "unknown";
}

const char* to_string(RunMode mode) {
    switch (mode) {
        case RunMode::open_loop: return "open_loop";
        case RunMode::offline_control: return "offline_control";
        case RunMode::online_control: return "online_control";
    }
    return "unknown";
}

namespace {

// Depth rows of the parent grid bracketing a_p plus the configured context
// rows on each side, as a GridSpec whose lattice coincides with parent rows.
GridSpec row_restricted_spec(const GridSpec& parent, double axial_depth_mm,
                             int context_rows) {
    const double step =
        (parent.depth_max_mm - parent.depth_min_mm) / (parent.depth_count - 1);
    const double position = (axial_depth_mm - parent.depth_min_mm) / step;
    const int center = std::clamp(static_cast<int>(std::lround(position)), 0,
                                  parent.depth_count - 1);
    int lo = center - context_rows;
    int hi = center + context_rows;
    // Always keep the bracketing pair of a_p inside the row window.
    lo = std::min(lo, static_cast<int>(std::floor(position)));
    hi = std::max(hi, static_cast<int>(std::floor(position)) + 1);
    lo = std::max(lo, 0);
    hi = std::min(hi, parent.depth_count - 1);
    if (hi - lo < 1) hi = std::min(lo + 1, parent.depth_count - 1);

    GridSpec spec = parent;
    spec.depth_min_mm = parent.depth_at(lo);
    spec.depth_max_mm = parent.depth_at(hi);
    spec.depth_count = hi - lo + 1;
    return spec;
}

class ScenarioRunner {
  public:
    ScenarioRunner(const Scenario& scenario, int workers)
        : scenario_(scenario),
          workers_(workers),
          step_s_(scenario.step_fraction *
                  tooth_period_s(scenario.nominal, scenario.initial.spindle_speed_rpm)),
          simulator_(scenario.nominal, scenario.initial.spindle_speed_rpm,
                     scenario.initial.axial_depth_mm, step_s_,
                     Eigen::Vector2d(scenario.initial_perturbation_m, 0.0),
                     scenario.noise_std, scenario.seed),
          roughness_model_(scenario.roughness) {}

    RunReport run() {
        const Scenario& s = scenario_;
        if (s.mode == RunMode::offline_control) {
            SldGrid offline = compute_sld(s.nominal, s.grid, workers_);
            offline.timestamp_s = 0.0;
            report_.sld_snapshots.push_back(offline);
        }

        std::vector<double> decision_times;
        if (s.mode != RunMode::open_loop) {
            const double period = s.resolved_estimation_period_s();
            for (double t = s.control_start_s; t <= s.duration_s + 1e-12; t += period)
                decision_times.push_back(t);
        }

        std::size_t next_drift = 0;
        std::size_t next_decision = 0;
        while (!simulator_.diverged()) {
            const double t_drift = next_drift < s.drift_events.size()
                                       ? s.drift_events[next_drift].t_s
                                       : std::numeric_limits<double>::infinity();
            const double t_decision = next_decision < decision_times.size()
                                          ? decision_times[next_decision]
                                          : std::numeric_limits<double>::infinity();
            const double t_next = std::min({t_drift, t_decision, s.duration_s});

            simulator_.advance_to(t_next);
            if (simulator_.diverged()) break;
            if (t_next >= s.duration_s && t_drift > s.duration_s &&
                t_decision > s.duration_s)
                break;

            // Drift strictly before a coincident decision: the decision's
            // window still holds pre-drift data either way.
            if (t_drift <= t_decision && t_drift <= s.duration_s) {
                simulator_.set_parameters(
                    inject_drift(simulator_.parameters(), s.drift_events[next_drift]));
                report_.events.push_back({t_drift, "drift applied"});
                ++next_drift;
                continue;
            }
            if (t_decision <= s.duration_s) {
                process_decision(t_decision);
                ++next_decision;
            }
        }

        report_.trajectory = simulator_.trajectory();
        report_.divergence_time_s = report_.trajectory.divergence_time_s;
        report_.verdict = settle_verdict();
        return std::move(report_);
    }

  private:
    void process_decision(double now_s) {
        const Scenario& s = scenario_;
        const Trajectory& trajectory = simulator_.trajectory();
        const double rpm = simulator_.current_rpm();
        const double span = s.window_span_s(rpm);
        const double t0 = now_s - span;
        if (t0 < 0.0) {
            report_.events.push_back({now_s, "skipped: not enough data for a window"});
            return;
        }
        for (const SpeedChange& change : trajectory.operating_history) {
            if (change.t_s > t0 && change.t_s <= now_s && change.rpm != rpm) {
                report_.events.push_back({now_s, "skipped: window spans a speed change"});
                return;
            }
        }

        SensorWindow window;
        try {
            window = harvest_window(trajectory, simulator_.parameters(), t0, now_s);
        } catch (const std::invalid_argument& error) {
            report_.events.push_back({now_s, fmt::format("skipped: {}", error.what())});
            return;
        }

        const SldGrid* grid = nullptr;
        if (s.mode == RunMode::online_control) {
            EstimatedParameters estimate;
            try {
                estimate = estimate_parameters(window, s.nominal);
            } catch (const UnidentifiableWindow& error) {
                report_.events.push_back(
                    {now_s, fmt::format("hold: {}", error.what())});
                return;
            }
            report_.estimates.push_back({now_s, estimate});

            ProcessParameters estimated = s.nominal;
            estimated.damping_ratio = estimate.damping_ratio;
            estimated.natural_frequency_rad_s = estimate.natural_frequency_rad_s;
            estimated.tangential_coeff = estimate.tangential_coeff;
            estimated.radial_coeff = estimate.radial_coeff;

            const GridSpec spec =
                s.full_grid_snapshots
                    ? s.grid
                    : row_restricted_spec(s.grid, simulator_.axial_depth_mm(),
                                          s.online_context_rows);
            SldGrid online = compute_sld(estimated, spec, workers_);
            online.timestamp_s = window.end_s();
            report_.sld_snapshots.push_back(std::move(online));
            grid = &report_.sld_snapshots.back();
        } else {
            grid = &report_.sld_snapshots.front();  // nominal offline grid
        }

        const FeatureVector features = extract_features(
            window, s.nominal, s.feed_rate_mm_s, s.roughness.displacement_floor_m);
        report_.roughness_series.push_back(
            {now_s, roughness_model_.predict(features)});

        const RoughnessCalibration& cal = s.roughness;
        const double rms = features.rms_displacement_m;
        const int teeth = s.nominal.teeth_count;
        const double feed = s.feed_rate_mm_s;
        RoughnessMap roughness_of = [cal, rms, teeth, feed](double omega) {
            const double fpt = feed * 60.0 / (teeth * omega);
            return cal.r0_um + cal.c_kin_um_per_mm2 * fpt * fpt +
                   cal.c_vib_um_per_m * rms;
        };

        const ControlDecision decision = optimize_speed(
            *grid, simulator_.axial_depth_mm(), rpm, roughness_of, s.controller,
            last_change_s_, now_s);
        report_.decisions.push_back({now_s, rpm, decision});
        if (decision.applied && decision.omega_star_rpm != rpm) {
            simulator_.set_speed(decision.omega_star_rpm);
            last_change_s_ = now_s;
        }
    }

    Verdict settle_verdict() const {
        if (report_.trajectory.diverged()) return Verdict::diverged;
        if (!report_.decisions.empty() && !report_.decisions.back().decision.feasible)
            return Verdict::held;
        const double window = 0.2 * scenario_.duration_s;
        const double initial = rms_displacement(report_.trajectory, 0.0, window);
        const double final = rms_displacement(report_.trajectory,
                                              scenario_.duration_s - window,
                                              scenario_.duration_s);
        return final < initial ? Verdict::stabilized : Verdict::diverged;
    }

    const Scenario& scenario_;
    int workers_;
    double step_s_;
    DdeSimulator simulator_;
    SurrogateRoughnessModel roughness_model_;
    RunReport report_;
    double last_change_s_ = -std::numeric_limits<double>::infinity();
};

}  // namespace

RunReport run_scenario(const Scenario& scenario, int workers) {
    scenario.validate();
    ScenarioRunner runner(scenario, workers);
    return runner.run();
}

}  // namespace millstab
