#include <gtest/gtest.h>

#include <cmath>

#include "kuramoto/spectral.hpp"
#include "kuramoto/stationary.hpp"
#include "oracles.hpp"

using namespace kuramoto;

namespace {

GridHandle grid_of(int n) { return std::make_shared<const PhaseGrid>(make_grid(n)); }

}  // namespace

TEST(Fourier, ModesForPoints) {
    EXPECT_EQ(modes_for_points(16), 7);
    EXPECT_EQ(modes_for_points(4096), 2047);
    EXPECT_THROW(modes_for_points(2), std::invalid_argument);
}

TEST(Fourier, InitialCoefficientsOfTwoGaussian) {
    // For sigma small the bumps barely overlap the cut, so c_n matches the whole-line transform:
    // (rho1 e^{-i n pi/2} + rho2 e^{-i 3 n pi/2}) e^{-n^2 sigma / 2} / (2 pi).
    const TwoGaussianProfile prof{0.25, 0.75, 0.1};
    const auto s = fourier_initial(prof, 6);
    for (int n = 1; n <= 6; ++n) {
        const cplx ref = (0.25 * std::polar(1.0, -n * std::numbers::pi / 2) + 0.75 * std::polar(1.0, -1.5 * n * std::numbers::pi)) *
                         std::exp(-n * n * 0.05) / two_pi;
        EXPECT_NEAR(std::abs(s.c[static_cast<std::size_t>(n)] - ref), 0.0, 1e-6) << n;
    }
    EXPECT_EQ(s.c[0], cplx(1.0 / two_pi, 0.0));
}

TEST(Fgs, RhsOfHeatEquationDecaysModes) {
    std::vector<cplx> c{{1 / two_pi, 0}, {0.1, 0.05}, {0.02, -0.01}}, out;
    fgs_rhs(c, 0.0, 0.7, 0.0, out);
    EXPECT_EQ(out[0], cplx(0, 0));
    EXPECT_NEAR(std::abs(out[1] + 0.7 * c[1]), 0.0, 1e-16);
    EXPECT_NEAR(std::abs(out[2] + 2.8 * c[2]), 0.0, 1e-16);
}

TEST(Fgs, Rk4StepMatchesExactHeatDecay) {
    FourierState s;
    s.c = {{1 / two_pi, 0}, {0.1, 0.0}, {0.0, 0.05}};
    SolverParams p;
    p.K = 0.0;
    p.D = 0.5;
    const double dt = 0.01;
    auto out = s;
    for (int j = 0; j < 100; ++j) out = fgs_step(out, p, dt);
    EXPECT_NEAR(std::abs(out.c[1] - s.c[1] * std::exp(-0.5)), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(out.c[2] - s.c[2] * std::exp(-2.0)), 0.0, 1e-10);
}

TEST(Fgs, StepRejectsAboveCap) {
    FourierState s;
    s.c.assign(11, cplx(0, 0));
    s.c[0] = 1 / two_pi;
    SolverParams p;
    p.K = 1.0;
    p.D = 1.0;
    EXPECT_THROW(fgs_step(s, p, fgs_max_dt(p, 10) * 1.01), std::invalid_argument);
}

TEST(Fgs, EvaluateMatchesDirectSeries) {
    FourierState s;
    s.c = {{1 / two_pi, 0}, {0.03, -0.02}, {0.01, 0.004}};
    const auto g = grid_of(9);
    const auto f = fgs_evaluate(s, g);
    for (int i = 0; i < 9; ++i) {
        const double t = g->centers[static_cast<std::size_t>(i)];
        double ref = 1 / two_pi;
        for (int n = 1; n <= 2; ++n) ref += 2.0 * (s.c[static_cast<std::size_t>(n)] * std::polar(1.0, n * t)).real();
        EXPECT_NEAR(f(i, 0), ref, 1e-15);
    }
}

TEST(SpectralSteady, CoefficientsAreBesselRatios) {
    const double K = 4.0, D = 1.0;
    const auto st = spectral_steady_state(K, D, 60);
    const double r = oracle::identical_r(K, D);
    EXPECT_NEAR(st.r, r, 1e-12);
    const double a = K * r / D;
    for (int n = 1; n <= 5; ++n)
        EXPECT_NEAR(st.state.c[static_cast<std::size_t>(n)].real() * two_pi, oracle::bessel_i(n, a) / oracle::bessel_i(0, a), 1e-12);
}

TEST(SpectralSteady, IsFixedPointOfGalerkinSystem) {
    const auto st = spectral_steady_state(1.0, 0.1, 63, 1.3);
    std::vector<cplx> out;
    fgs_rhs(st.state.c, 1.0, 0.1, 0.0, out);
    double mx = 0.0;
    for (const auto& v : out) mx = std::max(mx, std::abs(v));
    EXPECT_LT(mx, 1e-13);
}

TEST(SpectralSteady, SubcriticalIsUniformAndRequiresDiffusion) {
    const auto st = spectral_steady_state(1.0, 0.6, 20);
    EXPECT_EQ(st.r, 0.0);
    EXPECT_THROW(spectral_steady_state(1.0, 0.0, 20), std::invalid_argument);
}

TEST(SpectralSteady, ReferenceAgreesWithVonMisesPointValues) {
    const double K = 1.0, D = 0.1;
    const auto g = grid_of(64);
    const auto ref = reference_steady(K, D, 2047, g, 0.4);
    const double r = spectral_steady_state(K, D, 2047).r;
    double norm = 0.0;
    std::vector<double> vm(64);
    for (int i = 0; i < 64; ++i) {
        vm[static_cast<std::size_t>(i)] = std::exp(K * r / D * std::cos(g->centers[static_cast<std::size_t>(i)] - 0.4));
    }
    // Continuum normalization: 2 pi I_0(a).
    norm = two_pi * oracle::bessel_i(0, K * r / D);
    for (int i = 0; i < 64; ++i) EXPECT_NEAR(ref(i, 0), vm[static_cast<std::size_t>(i)] / norm, 1e-12);
}

TEST(FgsRunToSteady, ConvergesToDirectSolve) {
    SolverParams p;
    p.K = 4.0;
    p.D = 1.0;
    p.steady_tol = 1e-11;
    const int modes = 15;
    const auto res = fgs_run_to_steady(fourier_initial(TwoGaussianProfile{0.25, 0.75, 0.1}, modes), p,
                                       0.5 * fgs_max_dt(p, modes));
    ASSERT_TRUE(res.converged);
    const double phase = -std::arg(res.state.c[1]);
    const auto direct = spectral_steady_state(4.0, 1.0, modes, phase);
    for (int n = 0; n <= modes; ++n)
        EXPECT_NEAR(std::abs(res.state.c[static_cast<std::size_t>(n)] - direct.state.c[static_cast<std::size_t>(n)]), 0.0, 1e-10);
}
