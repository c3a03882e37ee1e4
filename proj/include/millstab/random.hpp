#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace millstab {

/// Seeded standard-normal sampler. Box-Muller over mt19937_64 keeps the
/// stream identical across platforms and standard-library versions, which
/// the bit-reproducibility guarantees rely on.
class GaussianSampler {
  public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

  private:
    double uniform() {
        // 53-bit mantissa in [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace millstab
