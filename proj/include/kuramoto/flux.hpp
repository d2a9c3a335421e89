#pragma once

// Interface velocities and the two structure-preserving numerical fluxes.
//
// Flux sign convention: F_{i+1/2} = D (rho_{i+1} - rho_i) / dtheta - u_{i+1/2} rho~_{i+1/2},
// so that d rho_i / dt = (F_{i+1/2} - F_{i-1/2}) / dtheta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuramoto/core.hpp"

namespace kuramoto {

enum class FluxScheme { ChangCooper, Entropic };

inline std::string to_string(FluxScheme s) { return s == FluxScheme::ChangCooper ? "chang_cooper" : "entropic"; }

inline FluxScheme flux_scheme_from_string(const std::string& name) {
    if (name == "chang_cooper" || name == "cc") return FluxScheme::ChangCooper;
    if (name == "entropic") return FluxScheme::Entropic;
    throw std::invalid_argument("unknown flux scheme '" + name + "'");
}

/// Densities below this value are clamped before taking logarithms.
inline constexpr double positivity_floor = 1e-300;

/// Interface velocities u_{i+1/2,k}; entry (i, k) is the interface to the right of cell i.
struct InterfaceVelocityField {
    int n_cells = 0;
    int n_nodes = 0;
    std::vector<double> u;
    /// Trig moments of the g-averaged density: sum_j sin(m theta_j) rho_j, sum_j cos(m theta_j) rho_j.
    double S = 0.0, C = 0.0;
    double S2 = 0.0, C2 = 0.0;

    double operator()(int i, int k) const {
        return u[static_cast<std::size_t>(k) * static_cast<std::size_t>(n_cells) + static_cast<std::size_t>(i)];
    }
    double max_abs() const {
        double m = 0.0;
        for (double v : u) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Fills vel with the exact cell averages of u(theta, w) over [theta_i, theta_{i+1}].
inline void assemble_velocity(const DensityField& field, const SolverParams& params, InterfaceVelocityField& vel) {
    const PhaseGrid& g = field.grid();
    const FrequencyQuadrature& q = field.quad();
    const int n = g.n_cells;
    const int m = field.n_nodes();
    vel.n_cells = n;
    vel.n_nodes = m;
    vel.u.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));

    double S = 0.0, C = 0.0, S2 = 0.0, C2 = 0.0;
    const bool daido = params.daido_h != 0.0;
    for (int i = 0; i < n; ++i) {
        double avg = 0.0;
        for (int k = 0; k < m; ++k) avg += q.weights[static_cast<std::size_t>(k)] * field(i, k);
        const auto ii = static_cast<std::size_t>(i);
        S += g.sin_center[ii] * avg;
        C += g.cos_center[ii] * avg;
        if (daido) {
            S2 += g.sin2_center[ii] * avg;
            C2 += g.cos2_center[ii] * avg;
        }
    }
    vel.S = S;
    vel.C = C;
    vel.S2 = S2;
    vel.C2 = C2;

    const double a1 = 2.0 * params.K * std::sin(0.5 * g.dtheta);
    const double a2 = params.K * params.daido_h * std::sin(g.dtheta);
    double* u0 = vel.u.data();
    for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        double base = a1 * (g.cos_face[ii] * S - g.sin_face[ii] * C);
        if (daido) base += a2 * (g.cos2_face[ii] * S2 - g.sin2_face[ii] * C2);
        u0[ii] = base;
    }
    for (int k = m - 1; k >= 0; --k) {
        const double w = q.nodes[static_cast<std::size_t>(k)];
        double* uk = vel.u.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(n);
        for (int i = 0; i < n; ++i) uk[i] = u0[i] + w;
    }
}

inline InterfaceVelocityField interface_velocity(const DensityField& field, const SolverParams& params) {
    InterfaceVelocityField vel;
    assemble_velocity(field, params, vel);
    return vel;
}

/// Chang-Cooper weight delta(xi) = 1/xi + 1/(1 - e^xi), xi = -dtheta u / D.
inline double cc_weight(double xi) {
    if (std::isnan(xi)) throw std::domain_error("cc_weight: NaN argument");
    if (std::abs(xi) < 1e-2) {
        const double x2 = xi * xi;
        return 0.5 - xi / 12.0 + xi * x2 / 720.0 - xi * x2 * x2 / 30240.0;
    }
    return 1.0 / xi - 1.0 / std::expm1(xi);
}

/// Bernoulli function B(x) = x / (e^x - 1), B(0) = 1.
inline double bernoulli(double x) noexcept {
    if (x == 0.0) return 1.0;
    return x / std::expm1(x);
}

/// Logarithmic mean (b - a) / (log b - log a), with L(a, a) = a.
inline double log_mean(double a, double b) noexcept {
    if (a == b) return a;
    const double t = b / a - 1.0;
    if (t == 0.0) return a;
    if (!std::isfinite(t)) return (b - a) / (std::log(b) - std::log(a));
    return a * t / std::log1p(t);
}

/// Entropic weight delta^E with (1 - delta^E) rho_hi + delta^E rho_lo equal to the logarithmic mean.
/// Non-positive inputs are clamped to the positivity floor.
inline double entropic_weight(double rho_lo, double rho_hi) {
    if (std::isnan(rho_lo) || std::isnan(rho_hi)) throw std::domain_error("entropic_weight: NaN density");
    const double a = std::max(rho_lo, positivity_floor);
    const double b = std::max(rho_hi, positivity_floor);
    if (a == b) return 0.5;
    const double t = b / a - 1.0;
    if (std::abs(t) < 1e-2) {
        const double t2 = t * t;
        return 0.5 + t / 12.0 - t2 / 24.0 + 19.0 * t * t2 / 720.0 - 3.0 * t2 * t2 / 160.0 +
               863.0 * t * t2 * t2 / 60480.0;
    }
    if (t > -0.9 && std::isfinite(t)) return (1.0 + t) / t - 1.0 / std::log1p(t);
    // Far from 1 the ratio may round to 0 or overflow; use x / (x - 1) - 1 / log x with x = b / a
    // through a / b and the difference of logs.
    return 1.0 / (1.0 - a / b) - 1.0 / (std::log(b) - std::log(a));
}

/// Coefficients (p, q) with F_{i+1/2} = q rho_{i+1} - p rho_i for the Chang-Cooper flux.
/// p = (D/dtheta) B(xi), q = (D/dtheta) B(-xi); at D = 0 this is first-order upwinding.
struct FluxCoefficients {
    double p = 0.0;
    double q = 0.0;
};

inline FluxCoefficients cc_coefficients(double u, double diffusion, double dtheta) noexcept {
    if (diffusion == 0.0) return {std::max(u, 0.0), std::max(-u, 0.0)};
    const double d = diffusion / dtheta;
    const double xi = -dtheta * u / diffusion;
    // B(-x) = B(x) + x; evaluate the smaller coefficient directly so neither side cancels.
    if (xi >= 0.0) {
        const double bp = bernoulli(xi);
        return {d * bp, d * (bp + xi)};
    }
    const double bm = bernoulli(-xi);
    return {d * (bm - xi), d * bm};
}

struct FluxField {
    int n_cells = 0;
    int n_nodes = 0;
    /// F_{i+1/2,k}, frequency-major like DensityField.
    std::vector<double> flux;
    /// Interpolation weights delta_{i+1/2,k}.
    std::vector<double> delta;
    /// Set when a density was clamped to the positivity floor.
    bool floored = false;

    double operator()(int i, int k) const {
        return flux[static_cast<std::size_t>(k) * static_cast<std::size_t>(n_cells) + static_cast<std::size_t>(i)];
    }
    double max_abs() const {
        double m = 0.0;
        for (double v : flux) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Entropic flux ((D/dtheta) log(b/a) - u) L(a, b), written without the logarithm.
inline double entropic_flux(double a, double b, double u, double diffusion, double dtheta) noexcept {
    return diffusion * (b - a) / dtheta - u * log_mean(a, b);
}

/// Writes F into out (size N) for one frequency column; returns true if a density was floored.
inline bool column_flux(std::span<const double> rho, std::span<const double> u, double diffusion, double dtheta,
                        FluxScheme scheme, double* out, double* delta_out = nullptr) {
    const std::size_t n = rho.size();
    bool floored = false;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = i + 1 == n ? 0 : i + 1;
        if (scheme == FluxScheme::ChangCooper) {
            const auto c = cc_coefficients(u[i], diffusion, dtheta);
            out[i] = c.q * rho[ip] - c.p * rho[i];
            if (delta_out) {
                if (diffusion == 0.0) delta_out[i] = u[i] > 0.0 ? 1.0 : (u[i] < 0.0 ? 0.0 : 0.5);
                else delta_out[i] = cc_weight(-dtheta * u[i] / diffusion);
            }
        } else {
            double a = rho[i];
            double b = rho[ip];
            if (a < positivity_floor || b < positivity_floor) {
                floored = true;
                a = std::max(a, positivity_floor);
                b = std::max(b, positivity_floor);
            }
            out[i] = entropic_flux(a, b, u[i], diffusion, dtheta);
            if (delta_out) delta_out[i] = entropic_weight(a, b);
        }
    }
    return floored;
}

/// Numerical flux at every interface and node with periodic closure.
/// ChangCooper degenerates to upwinding at D = 0; Entropic accepts D = 0 (pure log-mean transport).
inline FluxField numerical_flux(const DensityField& field, const InterfaceVelocityField& vel, const SolverParams& params,
                                FluxScheme scheme) {
    if (vel.n_cells != field.n_cells() || vel.n_nodes != field.n_nodes())
        throw std::invalid_argument("numerical_flux: velocity and density layouts differ");
    if (scheme == FluxScheme::Entropic && field.min_value() <= 0.0)
        throw std::domain_error("numerical_flux: entropic flux needs strictly positive densities");
    const auto n = static_cast<std::size_t>(field.n_cells());
    FluxField out;
    out.n_cells = field.n_cells();
    out.n_nodes = field.n_nodes();
    out.flux.resize(field.values().size());
    out.delta.resize(field.values().size());
    for (int k = 0; k < field.n_nodes(); ++k) {
        const std::span<const double> u(vel.u.data() + static_cast<std::size_t>(k) * n, n);
        out.floored |= column_flux(field.column(k), u, params.D, field.grid().dtheta, scheme,
                                   out.flux.data() + static_cast<std::size_t>(k) * n,
                                   out.delta.data() + static_cast<std::size_t>(k) * n);
    }
    return out;
}

}  // namespace kuramoto
