#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "millstab/process.hpp"
#include "millstab/sdm.hpp"

namespace millstab {

/// Rectangular sweep of the (spindle speed, axial depth) plane.
struct GridSpec {
    double speed_min_rpm = 6000.0;
    double speed_max_rpm = 16000.0;
    double depth_min_mm = 0.0;
    double depth_max_mm = 2.5;
    int speed_count = 200;
    int depth_count = 100;
    SdmConfig sdm;

    double speed_at(int speed_index) const;
    double depth_at(int depth_index) const;
    void validate() const;
};

/// Stability lobe diagram: rho and gamma_max evaluated on the grid.
/// Matrices are depth_count x speed_count; failed points hold NaN and are
/// listed in failures as (depth_index, speed_index).
struct SldGrid {
    GridSpec spec;
    Eigen::MatrixXd rho;
    Eigen::MatrixXd gamma_max;
    ProcessParameters params_used;
    double timestamp_s = 0.0;  ///< process time the parameters were estimated at
    std::vector<std::pair<int, int>> failures;
};

/// Evaluates the SDM over the grid. Depth rows at exactly zero use the
/// analytic limit exp(-zeta omega_n tau) with gamma_max = 0. Speed columns
/// are dispatched to `workers` threads; the result is independent of the
/// worker count. Throws NumericalFailure when more than 1% of the points
/// fail.
SldGrid compute_sld(const ProcessParameters& params, const GridSpec& spec,
                    int workers = 1);

struct Classification {
    bool stable = false;
    double margin = 0.0;  ///< 1 - rho (negative when unstable)
    double rho = 0.0;
    double gamma_max = 0.0;
};

/// Bilinear interpolation of the grid at an operating point; rejects
/// out-of-range queries.
Classification classify(const SldGrid& grid, const OperatingPoint& op);

/// Lowest-depth upward crossing of rho = 1 per speed column, located by
/// linear interpolation between the bracketing rows. Columns that never
/// cross report depth_max (fully stable column marker); columns already
/// unstable at the first row report depth_min.
std::vector<std::pair<double, double>> extract_boundary(const SldGrid& grid);

}  // namespace millstab
