// Scratch timing probe for the SDM per-point cost (not part of the build).
#include <chrono>
#include <cstdio>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "millstab/sdm.hpp"

using namespace millstab;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int main() {
    ProcessParameters params;

    for (int m : {20, 28, 40}) {
        const double rpm = 11500.0;
        auto t0 = Clock::now();
        auto profile = averaged_directional_profile(params, rpm, m);
        const double t_profile = ms_since(t0);

        // Full per-point evaluation
        t0 = Clock::now();
        const int reps = 20;
        double rho = 0.0;
        for (int r = 0; r < reps; ++r) {
            auto pt = period_transition_from_profile(params, rpm, 1.0 + 0.001 * r, profile);
            rho += pt.rho;
        }
        const double t_point = ms_since(t0) / reps;
        std::printf("m=%2d profile=%.3fms per-point=%.3fms (rho acc %.3f)\n", m,
                    t_profile, t_point, rho);
    }

    // Isolate the eigensolve at n=84
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(84, 84);
    auto t0 = Clock::now();
    double acc = 0.0;
    for (int r = 0; r < 50; ++r) {
        a(0, 0) += 1e-9;
        Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
        acc += es.eigenvalues().cwiseAbs().maxCoeff();
    }
    std::printf("eig(84) = %.3f ms (acc %.2f)\n", ms_since(t0) / 50, acc);

    // Isolate the 10x10 exponential
    Eigen::Matrix<double, 10, 10> g = Eigen::Matrix<double, 10, 10>::Random() * 3.0;
    t0 = Clock::now();
    for (int r = 0; r < 2000; ++r) {
        g(0, 0) += 1e-12;
        volatile double x = g.exp()(0, 0);
        (void)x;
    }
    std::printf("exp(10x10) = %.4f ms\n", ms_since(t0) / 2000);
    return 0;
}
