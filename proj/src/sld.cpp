#include "millstab/sld.hpp"

#include <cmath>
#include <mutex>

#include <fmt/format.h>

#include "millstab/errors.hpp"
#include "millstab/parallel.hpp"

namespace millstab {

double GridSpec::speed_at(int speed_index) const {
    if (speed_count == 1) return speed_min_rpm;
    return speed_min_rpm + (speed_max_rpm - speed_min_rpm) * speed_index /
                               (speed_count - 1);
}

double GridSpec::depth_at(int depth_index) const {
    if (depth_count == 1) return depth_min_mm;
    return depth_min_mm + (depth_max_mm - depth_min_mm) * depth_index /
                              (depth_count - 1);
}

void GridSpec::validate() const {
    if (speed_min_rpm <= 0.0) throw std::invalid_argument("speed_min_rpm must be positive");
    if (speed_max_rpm <= speed_min_rpm)
        throw std::invalid_argument("speed range must be non-empty");
    if (depth_min_mm < 0.0) throw std::invalid_argument("depth_min_mm must be non-negative");
    if (depth_max_mm <= depth_min_mm)
        throw std::invalid_argument("depth range must be non-empty");
    if (speed_count < 2 || depth_count < 2)
        throw std::invalid_argument("grid counts must be at least 2");
    sdm.validate();
}

SldGrid compute_sld(const ProcessParameters& params, const GridSpec& spec,
                    int workers) {
    params.validate();
    spec.validate();

    SldGrid grid;
    grid.spec = spec;
    grid.params_used = params;
    grid.rho.setConstant(spec.depth_count, spec.speed_count,
                         std::numeric_limits<double>::quiet_NaN());
    grid.gamma_max = grid.rho;

    std::mutex failure_mutex;
    parallel_for_index(
        static_cast<std::size_t>(spec.speed_count), workers, [&](std::size_t s) {
            const int speed_index = static_cast<int>(s);
            const double rpm = spec.speed_at(speed_index);
            // The directional-matrix averages do not depend on depth, so a
            // whole column shares one profile.
            const auto profile = averaged_directional_profile(
                params, rpm, spec.sdm.delay_resolution);
            for (int d = 0; d < spec.depth_count; ++d) {
                const double depth = spec.depth_at(d);
                if (depth == 0.0) {
                    grid.rho(d, speed_index) = analytic_zero_depth_rho(params, rpm);
                    grid.gamma_max(d, speed_index) = 0.0;
                    continue;
                }
                try {
                    const PeriodTransition pt =
                        period_transition_from_profile(params, rpm, depth, profile);
                    grid.rho(d, speed_index) = pt.rho;
                    grid.gamma_max(d, speed_index) = pt.gamma_max;
                } catch (const NumericalFailure&) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    grid.failures.emplace_back(d, speed_index);
                }
            }
        });

    std::sort(grid.failures.begin(), grid.failures.end());
    const std::size_t total =
        static_cast<std::size_t>(spec.speed_count) * spec.depth_count;
    if (grid.failures.size() * 100 > total)
        throw NumericalFailure(fmt::format(
            "SLD sweep failed at {} of {} grid points (>1%); first failure at "
            "depth index {}, speed index {}",
            grid.failures.size(), total, grid.failures.front().first,
            grid.failures.front().second));
    return grid;
}

namespace {
struct CellWeights {
    int low;
    double fraction;
};

CellWeights locate(double value, double min, double max, int count, const char* label) {
    if (value < min || value > max)
        throw std::invalid_argument(
            fmt::format("{} {} outside grid range [{}, {}]", label, value, min, max));
    const double step = (max - min) / (count - 1);
    double position = (value - min) / step;
    int low = static_cast<int>(position);
    if (low >= count - 1) low = count - 2;
    return {low, position - low};
}
}  // namespace

Classification classify(const SldGrid& grid, const OperatingPoint& op) {
    op.validate();
    const GridSpec& spec = grid.spec;
    const CellWeights s = locate(op.spindle_speed_rpm, spec.speed_min_rpm,
                                 spec.speed_max_rpm, spec.speed_count, "speed");
    const CellWeights d = locate(op.axial_depth_mm, spec.depth_min_mm,
                                 spec.depth_max_mm, spec.depth_count, "depth");

    auto bilinear = [&](const Eigen::MatrixXd& field) {
        const double v00 = field(d.low, s.low);
        const double v01 = field(d.low, s.low + 1);
        const double v10 = field(d.low + 1, s.low);
        const double v11 = field(d.low + 1, s.low + 1);
        return (1.0 - d.fraction) * ((1.0 - s.fraction) * v00 + s.fraction * v01) +
               d.fraction * ((1.0 - s.fraction) * v10 + s.fraction * v11);
    };

    Classification out;
    out.rho = bilinear(grid.rho);
    out.gamma_max = bilinear(grid.gamma_max);
    if (!std::isfinite(out.rho))
        throw NumericalFailure(fmt::format(
            "grid cell around ({} rpm, {} mm) contains failed points",
            op.spindle_speed_rpm, op.axial_depth_mm));
    out.stable = out.rho < 1.0;
    out.margin = 1.0 - out.rho;
    return out;
}

std::vector<std::pair<double, double>> extract_boundary(const SldGrid& grid) {
    const GridSpec& spec = grid.spec;
    std::vector<std::pair<double, double>> boundary;
    boundary.reserve(spec.speed_count);
    for (int s = 0; s < spec.speed_count; ++s) {
        const double rpm = spec.speed_at(s);
        double crossing = spec.depth_max_mm;
        if (grid.rho(0, s) >= 1.0) {
            crossing = spec.depth_min_mm;
        } else {
            for (int d = 1; d < spec.depth_count; ++d) {
                const double below = grid.rho(d - 1, s);
                const double above = grid.rho(d, s);
                if (!std::isfinite(below) || !std::isfinite(above)) continue;
                if (below < 1.0 && above >= 1.0) {
                    const double fraction = (1.0 - below) / (above - below);
                    crossing = spec.depth_at(d - 1) +
                               fraction * (spec.depth_at(d) - spec.depth_at(d - 1));
                    break;
                }
            }
        }
        boundary.emplace_back(rpm, crossing);
    }
    return boundary;
}

}  // namespace millstab
