#include "millstab/roughness.hpp"

#include <cmath>
#include <complex>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

namespace millstab {

SurrogateRoughnessModel::SurrogateRoughnessModel(const RoughnessCalibration& calibration)
    : calibration_(calibration) {
    if (calibration.r0_um <= 0.0)
        throw std::invalid_argument("roughness baseline r0 must be positive");
    if (calibration.c_kin_um_per_mm2 < 0.0 || calibration.c_vib_um_per_m < 0.0)
        throw std::invalid_argument("roughness coefficients must be non-negative");
}

const RoughnessCalibration& SurrogateRoughnessModel::calibration() const {
    if (!calibration_) throw std::logic_error("roughness model is not calibrated");
    return *calibration_;
}

RoughnessEstimate SurrogateRoughnessModel::predict(
    const FeatureVector& features,
    const std::optional<Eigen::MatrixXd>& parameter_distribution) const {
    (void)parameter_distribution;  // slot for an upstream parameter-distribution model
    if (!calibration_) throw std::logic_error("roughness model is not calibrated");
    const RoughnessCalibration& cal = *calibration_;
    RoughnessEstimate out;
    out.roughness_um = cal.r0_um +
                       cal.c_kin_um_per_mm2 * features.feed_per_tooth_mm *
                           features.feed_per_tooth_mm +
                       cal.c_vib_um_per_m * features.rms_displacement_m;
    out.chatter = features.offband_energy_fraction > cal.chatter_offband_threshold;
    out.confidence = 1.0;
    return out;
}

std::vector<Eigen::Vector2d> estimate_force(const SensorWindow& window,
                                            double damping_ratio,
                                            double natural_frequency_rad_s,
                                            double mass_kg) {
    const double damping = 2.0 * damping_ratio * natural_frequency_rad_s * mass_kg;
    const double stiffness = natural_frequency_rad_s * natural_frequency_rad_s * mass_kg;
    std::vector<Eigen::Vector2d> forces;
    forces.reserve(window.samples.size());
    for (const StateSample& sample : window.samples)
        forces.push_back(mass_kg * sample.acceleration + damping * sample.velocity +
                         stiffness * sample.q);
    return forces;
}

std::vector<Eigen::Vector2d> estimate_force(const SensorWindow& window,
                                            const ProcessParameters& params) {
    return estimate_force(window, params.damping_ratio, params.natural_frequency_rad_s,
                          params.modal_mass_kg);
}

FeatureVector extract_features(const SensorWindow& window,
                               const ProcessParameters& geometry,
                               double feed_rate_mm_s,
                               double displacement_floor_m) {
    const double tau = tooth_period_s(geometry, window.op.spindle_speed_rpm);
    const double span = window.end_s() - window.start_s();
    if (span < 4.0 * tau - 0.5 * window.sample_step_s)
        throw std::invalid_argument(fmt::format(
            "feature window spans {}s; need at least four delay periods ({}s)", span,
            4.0 * tau));

    FeatureVector features;
    features.depth_mm = window.op.axial_depth_mm;
    features.speed_rpm = window.op.spindle_speed_rpm;
    features.feed_per_tooth_mm = feed_rate_mm_s * 60.0 /
                                 (geometry.teeth_count * window.op.spindle_speed_rpm);

    const auto count = window.samples.size();
    double q_power = 0.0, f_power = 0.0;
    std::vector<double> displacement_x(count);
    for (std::size_t i = 0; i < count; ++i) {
        q_power += window.samples[i].q.squaredNorm();
        f_power += window.samples[i].force.squaredNorm();
        displacement_x[i] = window.samples[i].q.x();
    }
    features.rms_displacement_m = std::sqrt(q_power / static_cast<double>(count));
    features.rms_force_n = std::sqrt(f_power / static_cast<double>(count));

    double x_power = 0.0;
    for (double v : displacement_x) x_power += v * v;
    if (std::sqrt(x_power / static_cast<double>(count)) < displacement_floor_m)
        return features;  // fractions stay zero for a (numerically) silent window

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, displacement_x);

    const double bin_hz = 1.0 / (static_cast<double>(count) * window.sample_step_s);
    const double tooth_passing_hz = 1.0 / tau;
    double total = 0.0, on_band = 0.0;
    for (std::size_t k = 1; k <= count / 2; ++k) {
        const double energy = std::norm(spectrum[k]);
        total += energy;
        const double f = static_cast<double>(k) * bin_hz;
        const double harmonic = std::max(1.0, std::round(f / tooth_passing_hz));
        if (std::abs(f - harmonic * tooth_passing_hz) <= 0.02 * harmonic * tooth_passing_hz)
            on_band += energy;
    }
    if (total > 0.0) {
        features.tooth_passing_energy_fraction = on_band / total;
        features.offband_energy_fraction = (total - on_band) / total;
    }
    return features;
}

RoughnessEstimate predict_roughness(const FeatureVector& features,
                                    const RoughnessModel& model) {
    return model.predict(features);
}

}  // namespace millstab
