#pragma once

// Fourier-Galerkin solver for identical oscillators and the high-resolution steady reference.
//
// rho(theta) = sum_{|n| <= M} c_n e^{i n theta} with c_{-n} = conj(c_n) and c_0 = 1/(2 pi).
// Only c_0..c_M are stored. With u = K r sin(phi - theta) + K h r2 sin(phi2 - 2 theta) the
// Galerkin system is
//   c_n' = n pi K (c_1 c_{n-1} - conj(c_1) c_{n+1}) + n pi K h (c_2 c_{n-2} - conj(c_2) c_{n+2}) - D n^2 c_n.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "kuramoto/diagnostics.hpp"

namespace kuramoto {

using cplx = std::complex<double>;

struct FourierState {
    /// c_0 .. c_M.
    std::vector<cplx> c;

    int modes() const noexcept { return static_cast<int>(c.size()) - 1; }
};

/// Galerkin truncation used for a grid with the given number of points: |n| <= N/2 - 1.
inline int modes_for_points(int n_points) {
    if (n_points < 4) throw std::invalid_argument("modes_for_points: need at least 4 points");
    return n_points / 2 - 1;
}

/// Fourier coefficients of the normalized two-Gaussian profile, by the trapezoidal rule.
inline FourierState fourier_initial(const TwoGaussianProfile& profile, int modes) {
    profile.validate();
    if (modes < 1) throw std::invalid_argument("fourier_initial: need at least one mode");
    const int L = std::max(4096, 8 * modes);
    std::vector<double> vals(static_cast<std::size_t>(L));
    double total = 0.0;
    for (int j = 0; j < L; ++j) {
        vals[static_cast<std::size_t>(j)] = profile(two_pi * j / L);
        total += vals[static_cast<std::size_t>(j)];
    }
    FourierState s;
    s.c.assign(static_cast<std::size_t>(modes) + 1, cplx(0.0, 0.0));
    for (int n = 0; n <= modes; ++n) {
        cplx acc(0.0, 0.0);
        for (int j = 0; j < L; ++j) {
            const double ang = -two_pi * static_cast<double>((static_cast<std::int64_t>(n) * j) % L) / L;
            acc += vals[static_cast<std::size_t>(j)] * cplx(std::cos(ang), std::sin(ang));
        }
        // Division by total normalizes the profile to unit mass.
        s.c[static_cast<std::size_t>(n)] = acc / (two_pi * total);
    }
    s.c[0] = cplx(1.0 / two_pi, 0.0);
    return s;
}

inline void fgs_rhs(const std::vector<cplx>& c, double K, double D, double h, std::vector<cplx>& out) {
    const int M = static_cast<int>(c.size()) - 1;
    out.assign(c.size(), cplx(0.0, 0.0));
    auto at = [&](int n) -> cplx {
        if (n > M) return {0.0, 0.0};
        if (n < 0) return std::conj(c[static_cast<std::size_t>(-n)]);
        return c[static_cast<std::size_t>(n)];
    };
    const cplx c1 = at(1);
    const cplx c2 = at(2);
    const double pk = std::numbers::pi * K;
    for (int n = 1; n <= M; ++n) {
        cplx v = n * pk * (c1 * at(n - 1) - std::conj(c1) * at(n + 1));
        if (h != 0.0) v += n * pk * h * (c2 * at(n - 2) - std::conj(c2) * at(n + 2));
        v -= D * static_cast<double>(n) * n * at(n);
        out[static_cast<std::size_t>(n)] = v;
    }
}

/// Stability cap for RK4: 2.5 / (D M^2) from diffusion and 1 / (M K (1 + h)) from transport.
inline double fgs_max_dt(const SolverParams& params, int modes) {
    double dt = std::numeric_limits<double>::infinity();
    if (params.D > 0.0) dt = std::min(dt, 2.5 / (params.D * modes * modes));
    if (params.K > 0.0) dt = std::min(dt, 1.0 / (modes * params.K * (1.0 + params.daido_h)));
    return dt;
}

/// Workspace for repeated RK4 steps.
class FgsIntegrator {
public:
    void step(FourierState& s, const SolverParams& params, double dt) {
        const double K = params.K, D = params.D, h = params.daido_h;
        const std::size_t n = s.c.size();
        tmp_.resize(n);
        fgs_rhs(s.c, K, D, h, k1_);
        for (std::size_t j = 0; j < n; ++j) tmp_[j] = s.c[j] + 0.5 * dt * k1_[j];
        fgs_rhs(tmp_, K, D, h, k2_);
        for (std::size_t j = 0; j < n; ++j) tmp_[j] = s.c[j] + 0.5 * dt * k2_[j];
        fgs_rhs(tmp_, K, D, h, k3_);
        for (std::size_t j = 0; j < n; ++j) tmp_[j] = s.c[j] + dt * k3_[j];
        fgs_rhs(tmp_, K, D, h, k4_);
        for (std::size_t j = 1; j < n; ++j) s.c[j] += dt / 6.0 * (k1_[j] + 2.0 * k2_[j] + 2.0 * k3_[j] + k4_[j]);
    }

private:
    std::vector<cplx> tmp_, k1_, k2_, k3_, k4_;
};

/// One explicit RK4 step of the truncated system; c_0 is untouched.
inline FourierState fgs_step(FourierState state, const SolverParams& params, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("fgs_step: dt must be positive");
    if (params.enforce_dt_bound && !(dt < fgs_max_dt(params, state.modes())))
        throw std::invalid_argument("fgs_step: dt above the RK4 stability cap");
    FgsIntegrator().step(state, params, dt);
    return state;
}

/// Point values of the truncated series at the cell centers of a grid, as a single-node field.
inline DensityField fgs_evaluate(const FourierState& s, GridHandle grid) {
    static const auto delta_quad = std::make_shared<const FrequencyQuadrature>(build_quadrature(DeltaDistribution{}, 1));
    DensityField out(grid, delta_quad);
    const PhaseGrid& g = *grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const cplx e(g.cos_center[i], g.sin_center[i]);
        cplx p(1.0, 0.0);
        double v = 0.0;
        // Powers of e^{i theta} are refreshed every 64 modes to bound round-off growth.
        for (int n = 1; n <= s.modes(); ++n) {
            if (n % 64 == 0) p = std::polar(1.0, n * g.centers[i]);
            else p *= e;
            v += 2.0 * (s.c[static_cast<std::size_t>(n)] * p).real();
        }
        out(static_cast<int>(i), 0) = s.c[0].real() + v;
    }
    return out;
}

struct FgsSteadyResult {
    FourierState state;
    std::int64_t steps = 0;
    /// 2 sum_n |c_n^{k+1} - c_n^k| / dt, an upper bound on max |d rho / dt|.
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

inline FgsSteadyResult fgs_run_to_steady(FourierState state, const SolverParams& params, double dt) {
    if (params.enforce_dt_bound && !(dt < fgs_max_dt(params, state.modes())))
        throw std::invalid_argument("fgs_run_to_steady: dt above the RK4 stability cap");
    FgsSteadyResult res;
    FgsIntegrator rk;
    std::vector<cplx> prev;
    for (std::int64_t step = 1; step <= params.max_steps; ++step) {
        prev = state.c;
        rk.step(state, params, dt);
        double diff = 0.0;
        for (std::size_t j = 1; j < prev.size(); ++j) diff += std::abs(state.c[j] - prev[j]);
        res.residual = 2.0 * diff / dt;
        res.steps = step;
        if (!std::isfinite(res.residual)) break;
        if (res.residual < params.steady_tol) {
            res.converged = true;
            break;
        }
    }
    res.state = std::move(state);
    return res;
}

struct SpectralSteady {
    FourierState state;
    double r = 0.0;
    /// a = K r / D, the von Mises concentration.
    double concentration = 0.0;
};

namespace detail {

// Backward recurrence y_{n-1} = y_{n+1} + (2n / a) y_n from y_{M+1} = 0; returns y normalized to y_0 = 1.
inline std::vector<double> miller_ratios(double a, int modes) {
    std::vector<double> y(static_cast<std::size_t>(modes) + 2, 0.0);
    y[static_cast<std::size_t>(modes)] = 1.0;
    for (int n = modes; n >= 1; --n) {
        const auto nn = static_cast<std::size_t>(n);
        y[nn - 1] = y[nn + 1] + (2.0 * n / a) * y[nn];
        if (std::abs(y[nn - 1]) > 1e250)
            for (std::size_t j = nn - 1; j < y.size(); ++j) y[j] *= 1e-250;
    }
    const double y0 = y[0];
    for (double& v : y) v /= y0;
    y.pop_back();
    return y;
}

}  // namespace detail

/// Steady state of the truncated Galerkin system with h = 0, solved directly: the coefficients
/// follow the Bessel recurrence and the concentration solves a = (K/D) y_1(a) / y_0(a).
inline SpectralSteady spectral_steady_state(double K, double D, int modes, double phase = 0.0) {
    if (!(D > 0.0)) throw std::invalid_argument("spectral_steady_state: D must be positive");
    if (modes < 1) throw std::invalid_argument("spectral_steady_state: need at least one mode");
    SpectralSteady out;
    out.state.c.assign(static_cast<std::size_t>(modes) + 1, cplx(0.0, 0.0));
    out.state.c[0] = cplx(1.0 / two_pi, 0.0);
    if (K <= 2.0 * D) return out;
    auto f = [&](double a) { return (K / D) * detail::miller_ratios(a, modes)[1] - a; };
    const double lo = 1e-8;
    const double hi = K / D;
    const double flo = f(lo), fhi = f(hi);
    if (!(flo > 0.0 && fhi < 0.0)) throw std::runtime_error("spectral_steady_state: no coherent root bracketed");
    std::uintmax_t iters = 400;
    const auto br = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                      boost::math::tools::eps_tolerance<double>(52), iters);
    if (iters >= 400) throw std::runtime_error("spectral_steady_state: root solve did not converge");
    const double a = 0.5 * (br.first + br.second);
    const auto y = detail::miller_ratios(a, modes);
    for (int n = 1; n <= modes; ++n)
        out.state.c[static_cast<std::size_t>(n)] = std::polar(y[static_cast<std::size_t>(n)] / two_pi, -n * phase);
    out.concentration = a;
    out.r = y[1];
    return out;
}

/// High-resolution steady reference evaluated at the cell centers of grid.
inline DensityField reference_steady(double K, double D, int n_modes, GridHandle grid, double phase = 0.0) {
    return fgs_evaluate(spectral_steady_state(K, D, n_modes, phase).state, std::move(grid));
}

}  // namespace kuramoto
