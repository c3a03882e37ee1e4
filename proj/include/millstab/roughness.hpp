#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "millstab/estimator.hpp"
#include "millstab/process.hpp"

namespace millstab {

/// Signal features feeding the roughness predictor.
struct FeatureVector {
    double rms_displacement_m = 0.0;
    double rms_force_n = 0.0;
    double tooth_passing_energy_fraction = 0.0;  ///< in [0, 1]
    double offband_energy_fraction = 0.0;        ///< in [0, 1]
    double feed_per_tooth_mm = 0.0;
    double depth_mm = 0.0;
    double speed_rpm = 0.0;
};

struct RoughnessEstimate {
    double roughness_um = 0.0;
    bool chatter = false;
    double confidence = 0.0;
};

/// Surrogate calibration constants. Stored in a JSON file, never hard-coded:
/// r = r0 + c_kin * feed_per_tooth^2 + c_vib * rms_displacement, with the
/// chatter flag raised when the off-band energy fraction exceeds the
/// threshold. displacement_floor_m makes the zero-signal rule numerically
/// robust: windows whose displacement RMS sits below it report zero energy
/// fractions.
struct RoughnessCalibration {
    double r0_um = 0.5;
    double c_kin_um_per_mm2 = 0.0;
    double c_vib_um_per_m = 0.0;
    double chatter_offband_threshold = 0.3;
    double displacement_floor_m = 1e-9;
};

/// Pluggable predictor. The optional argument is the slot for a parameter
/// distribution p(d, omega) produced by an upstream model; the surrogate
/// does not consume it.
class RoughnessModel {
  public:
    virtual ~RoughnessModel() = default;
    virtual RoughnessEstimate predict(
        const FeatureVector& features,
        const std::optional<Eigen::MatrixXd>& parameter_distribution =
            std::nullopt) const = 0;
};

class SurrogateRoughnessModel final : public RoughnessModel {
  public:
    SurrogateRoughnessModel() = default;  ///< uncalibrated; predict() throws
    explicit SurrogateRoughnessModel(const RoughnessCalibration& calibration);

    bool calibrated() const { return calibration_.has_value(); }
    const RoughnessCalibration& calibration() const;

    RoughnessEstimate predict(const FeatureVector& features,
                              const std::optional<Eigen::MatrixXd>&
                                  parameter_distribution = std::nullopt) const override;

  private:
    std::optional<RoughnessCalibration> calibration_;
};

/// Dynamics-model force reconstruction F = M qdd + C qd + K q per sample.
std::vector<Eigen::Vector2d> estimate_force(const SensorWindow& window,
                                            double damping_ratio,
                                            double natural_frequency_rad_s,
                                            double mass_kg);
std::vector<Eigen::Vector2d> estimate_force(const SensorWindow& window,
                                            const ProcessParameters& params);

/// Window statistics plus spectral fractions from a DFT of q_x. Bins within
/// 2% of a tooth-passing harmonic count as on-band; everything else above DC
/// is off-band. Rejects windows shorter than four delay periods.
FeatureVector extract_features(const SensorWindow& window,
                               const ProcessParameters& geometry,
                               double feed_rate_mm_s,
                               double displacement_floor_m = 1e-9);

RoughnessEstimate predict_roughness(const FeatureVector& features,
                                    const RoughnessModel& model);

}  // namespace millstab
