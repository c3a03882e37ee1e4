// Scratch: piecewise timing of the m=40 per-point path (not in build).
#include <chrono>
#include <cstdio>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "millstab/dynamics.hpp"
#include "millstab/sdm.hpp"

using namespace millstab;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int main() {
    ProcessParameters params;
    const int m = 40;
    const double rpm = 11500.0;
    auto profile = averaged_directional_profile(params, rpm, m);

    // Build all step matrices once, timing the exp stage.
    const double eps = tooth_period_s(params, rpm) / m;
    auto t0 = Clock::now();
    std::vector<StepMatrices> steps;
    for (int rep = 0; rep < 50; ++rep) {
        steps.clear();
        for (int i = 0; i < m; ++i) {
            OperatingPoint op{rpm, 1.0};
            auto avg = interval_average(params, op, i, m);
            steps.push_back(step_matrices(avg.A, avg.B, avg.D, eps));
        }
    }
    std::printf("interval_average+exp stage: %.3f ms\n", ms_since(t0) / 50);

    // exp alone
    {
        OperatingPoint op{rpm, 1.0};
        auto avg = interval_average(params, op, 3, m);
        t0 = Clock::now();
        for (int rep = 0; rep < 2000; ++rep) {
            volatile double x = step_matrices(avg.A, avg.B, avg.D, eps).P(0, 0);
            (void)x;
        }
        std::printf("one step_matrices call: %.4f ms\n", ms_since(t0) / 2000);
    }

    // product stage
    const int n = 2 * (m + 2);
    t0 = Clock::now();
    Eigen::MatrixXd phi;
    for (int rep = 0; rep < 200; ++rep) {
        phi = Eigen::MatrixXd::Identity(n, n);
        Eigen::MatrixXd scratch(n, n);
        for (const auto& s : steps) {
            const Eigen::Matrix<double, 4, 2> r_half = 0.5 * s.R.leftCols<2>();
            scratch.topRows<4>() =
                s.P * phi.topRows<4>() +
                r_half * (phi.middleRows(n - 4, 2) + phi.middleRows(n - 2, 2));
            scratch.middleRows(4, 2) = phi.topRows<2>();
            scratch.bottomRows(n - 6) = phi.middleRows(4, n - 6);
            phi.swap(scratch);
        }
    }
    std::printf("product stage: %.3f ms\n", ms_since(t0) / 200);

    // dgees on the resulting phi
    t0 = Clock::now();
    double acc = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        Eigen::MatrixXd work = phi;
        std::vector<double> wr(n), wi(n);
        int sdim = 0;
        LAPACKE_dgees(LAPACK_COL_MAJOR, 'N', 'N', nullptr, n, work.data(), n, &sdim,
                      wr.data(), wi.data(), nullptr, n);
        for (int i = 0; i < n; ++i) acc = std::max(acc, std::hypot(wr[i], wi[i]));
    }
    std::printf("dgees stage: %.3f ms (rho %.6f)\n", ms_since(t0) / 200, acc);

    // svd of gamma
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Random(n, 2);
    t0 = Clock::now();
    for (int rep = 0; rep < 2000; ++rep) {
        volatile double x = Eigen::JacobiSVD<Eigen::MatrixXd>(gamma).singularValues()(0);
        (void)x;
    }
    std::printf("svd stage: %.4f ms\n", ms_since(t0) / 2000);
    return 0;
}
