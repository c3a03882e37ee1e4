// Scratch: compare eigenvalue backends for the 84x84 period map (not in build).
#include <chrono>
#include <cstdio>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "millstab/sdm.hpp"

using namespace millstab;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

static double rho_lapack_dgees(Eigen::MatrixXd phi) {
    const int n = static_cast<int>(phi.rows());
    std::vector<double> wr(n), wi(n);
    int sdim = 0;
    const int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'N', 'N', nullptr, n, phi.data(),
                                   n, &sdim, wr.data(), wi.data(), nullptr, n);
    if (info != 0) return -1.0;
    double best = 0.0;
    for (int i = 0; i < n; ++i)
        best = std::max(best, std::hypot(wr[i], wi[i]));
    return best;
}

static double rho_lapack_dgeev(Eigen::MatrixXd phi) {
    const int n = static_cast<int>(phi.rows());
    std::vector<double> wr(n), wi(n);
    const int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, phi.data(), n,
                                   wr.data(), wi.data(), nullptr, n, nullptr, n);
    if (info != 0) return -1.0;
    double best = 0.0;
    for (int i = 0; i < n; ++i)
        best = std::max(best, std::hypot(wr[i], wi[i]));
    return best;
}

int main() {
    ProcessParameters params;
    auto profile = averaged_directional_profile(params, 11500.0, 40);
    auto pt = period_transition_from_profile(params, 11500.0, 1.0, profile);
    std::printf("reference rho (Eigen) = %.12f\n", pt.rho);
    std::printf("rho dgees             = %.12f\n", rho_lapack_dgees(pt.Phi));
    std::printf("rho dgeev             = %.12f\n", rho_lapack_dgeev(pt.Phi));

    auto t0 = Clock::now();
    double acc = 0.0;
    for (int r = 0; r < 100; ++r) acc += rho_lapack_dgees(pt.Phi);
    std::printf("dgees: %.3f ms (acc %.1f)\n", ms_since(t0) / 100, acc);

    t0 = Clock::now();
    acc = 0.0;
    for (int r = 0; r < 100; ++r) acc += rho_lapack_dgeev(pt.Phi);
    std::printf("dgeev: %.3f ms (acc %.1f)\n", ms_since(t0) / 100, acc);

    t0 = Clock::now();
    acc = 0.0;
    for (int r = 0; r < 100; ++r) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(pt.Phi, false);
        acc += es.eigenvalues().cwiseAbs().maxCoeff();
    }
    std::printf("Eigen: %.3f ms (acc %.1f)\n", ms_since(t0) / 100, acc);

    // Balanced variant: scale velocity rows/cols by 1/omega_n.
    Eigen::MatrixXd phi_balanced = pt.Phi;
    const double w = params.natural_frequency_rad_s;
    phi_balanced.row(2) /= w;  phi_balanced.row(3) /= w;
    phi_balanced.col(2) *= w;  phi_balanced.col(3) *= w;
    t0 = Clock::now();
    acc = 0.0;
    for (int r = 0; r < 100; ++r) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(phi_balanced, false);
        acc += es.eigenvalues().cwiseAbs().maxCoeff();
    }
    std::printf("Eigen balanced: %.3f ms (acc %.1f, rho %.12f)\n", ms_since(t0) / 100,
                acc, acc / 100);
    return 0;
}
