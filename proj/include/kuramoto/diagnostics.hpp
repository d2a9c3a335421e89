#pragma once

// Order parameter, free energy and dissipation, entropy checks, reductions and error norms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kuramoto/flux.hpp"

namespace kuramoto {

/// Below this magnitude the mean phase is reported as NaN.
inline constexpr double phase_threshold = 1e-12;

struct OrderParameter {
    double r = 0.0;
    /// Mean phase in [0, 2pi), NaN when r < phase_threshold.
    double phi = std::numeric_limits<double>::quiet_NaN();
};

inline OrderParameter order_parameter_from(std::complex<double> z) {
    OrderParameter op;
    op.r = std::abs(z);
    if (op.r >= phase_threshold) {
        double phi = std::arg(z);
        if (phi < 0.0) phi += two_pi;
        op.phi = phi;
    }
    return op;
}

/// r e^{i phi} = dtheta sum_{i,k} e^{i theta_i} rho(i, k) g_k.
inline OrderParameter order_parameter(const DensityField& field) {
    const PhaseGrid& g = field.grid();
    const FrequencyQuadrature& q = field.quad();
    double re = 0.0, im = 0.0;
    for (int k = 0; k < field.n_nodes(); ++k) {
        const auto col = field.column(k);
        double c = 0.0, s = 0.0;
        for (std::size_t i = 0; i < col.size(); ++i) {
            c += g.cos_center[i] * col[i];
            s += g.sin_center[i] * col[i];
        }
        re += q.weights[static_cast<std::size_t>(k)] * c;
        im += q.weights[static_cast<std::size_t>(k)] * s;
    }
    return order_parameter_from({g.dtheta * re, g.dtheta * im});
}

/// g-averaged density rho_bar(i) = sum_k rho(i, k) g_k.
inline std::vector<double> averaged_density(const DensityField& field) {
    std::vector<double> avg(static_cast<std::size_t>(field.n_cells()), 0.0);
    for (int k = 0; k < field.n_nodes(); ++k) {
        const double w = field.quad().weights[static_cast<std::size_t>(k)];
        const auto col = field.column(k);
        for (std::size_t i = 0; i < col.size(); ++i) avg[i] += w * col[i];
    }
    return avg;
}

/// g-weighted kinetic density f(i, k) = rho(i, k) g_k, same layout as the field.
inline DensityField weighted_density(const DensityField& field) {
    DensityField f = field;
    for (int k = 0; k < field.n_nodes(); ++k) {
        const double w = field.quad().weights[static_cast<std::size_t>(k)];
        for (double& v : f.column(k)) v *= w;
    }
    return f;
}

/// dtheta sum_k g_k sum_i rho log rho.
inline double entropy(const DensityField& field) {
    double s = 0.0;
    for (int k = 0; k < field.n_nodes(); ++k) {
        double sk = 0.0;
        for (double v : field.column(k))
            if (v > 0.0) sk += v * std::log(v);
        s += field.quad().weights[static_cast<std::size_t>(k)] * sk;
    }
    return field.grid().dtheta * s;
}

struct EnergyReport {
    double free_energy = 0.0;
    double dissipation = 0.0;
    double entropy = 0.0;
    /// Set when densities were clamped to the positivity floor.
    bool floored = false;
};

/// Discrete free energy -(K dtheta^2 / 2) sum_{i,j} cos(theta_j - theta_i) rho_i rho_j + D dtheta sum rho log rho
/// and dissipation (1/dtheta) sum (xi_{i+1} - xi_i)^2 L(rho_i, rho_{i+1}) for identical oscillators,
/// with xi_i = K dtheta sum_j cos(theta_j - theta_i) rho_j - D log rho_i.
inline EnergyReport free_energy_identical(const DensityField& field, const SolverParams& params) {
    if (field.n_nodes() != 1) throw std::invalid_argument("free_energy_identical: needs a single frequency node");
    if (params.daido_h != 0.0) throw std::invalid_argument("free_energy_identical: Daido coupling is not supported");
    const PhaseGrid& g = field.grid();
    const auto rho = field.column(0);
    const std::size_t n = rho.size();
    EnergyReport rep;
    double C = 0.0, S = 0.0, ent = 0.0;
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = rho[i];
        if (r[i] < positivity_floor) {
            r[i] = positivity_floor;
            rep.floored = true;
        }
        C += g.cos_center[i] * rho[i];
        S += g.sin_center[i] * rho[i];
        ent += r[i] * std::log(r[i]);
    }
    const double dth = g.dtheta;
    rep.entropy = dth * ent;
    rep.free_energy = -0.5 * params.K * dth * dth * (C * C + S * S) + params.D * dth * ent;
    std::vector<double> xi(n);
    for (std::size_t i = 0; i < n; ++i)
        xi[i] = params.K * dth * (g.cos_center[i] * C + g.sin_center[i] * S) - params.D * std::log(r[i]);
    double diss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = i + 1 == n ? 0 : i + 1;
        const double d = xi[ip] - xi[i];
        diss += d * d * log_mean(r[i], r[ip]);
    }
    rep.dissipation = diss / dth;
    return rep;
}

/// A sampled trajectory: times and the states at those times.
struct Trajectory {
    std::vector<double> times;
    std::vector<DensityField> states;
};

/// Compares the centered time derivative of the g-averaged entropy with K r^2 on a D = 0 run.
/// Returns max |dS/dt - K r^2| / max K r^2 over interior samples (the absolute deviation when K r^2 = 0).
inline double entropy_production_check(const Trajectory& trace, const SolverParams& params) {
    if (params.D != 0.0) throw std::invalid_argument("entropy_production_check: needs D = 0");
    const std::size_t n = trace.states.size();
    if (n < 3 || trace.times.size() != n) throw std::invalid_argument("entropy_production_check: need >= 3 samples");
    std::vector<double> s(n), kr2(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (trace.states[j].min_value() <= 0.0)
            throw std::domain_error("entropy_production_check: trace left the positive cone");
        s[j] = entropy(trace.states[j]);
        const double r = order_parameter(trace.states[j]).r;
        kr2[j] = params.K * r * r;
    }
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double ds = (s[j + 1] - s[j - 1]) / (trace.times[j + 1] - trace.times[j - 1]);
        worst = std::max(worst, std::abs(ds - kr2[j]));
        scale = std::max(scale, kr2[j]);
    }
    return scale > 0.0 ? worst / scale : worst;
}

/// Counts samples with r(t_{n+1}) > r(t_n) + tol; for identical oscillators with D >= K there should be none.
inline int monotonicity_check(const std::vector<double>& r_trace, const SolverParams& params, double tol = 1e-10) {
    if (params.D < params.K) throw std::invalid_argument("monotonicity_check: needs D >= K");
    int violations = 0;
    for (std::size_t j = 1; j < r_trace.size(); ++j)
        if (r_trace[j] > r_trace[j - 1] + tol) ++violations;
    return violations;
}

/// Restricts a g-averaged profile to a coarser grid by averaging groups of cells.
inline std::vector<double> restrict_profile(const std::vector<double>& fine, std::size_t coarse_cells) {
    if (coarse_cells == 0 || fine.size() % coarse_cells != 0)
        throw std::invalid_argument("restrict_profile: grids are not nested by an integer ratio");
    const std::size_t ratio = fine.size() / coarse_cells;
    std::vector<double> out(coarse_cells, 0.0);
    for (std::size_t i = 0; i < coarse_cells; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < ratio; ++j) s += fine[i * ratio + j];
        out[i] = s / static_cast<double>(ratio);
    }
    return out;
}

/// dtheta sum_i |rho_bar_a - rho_bar_b| on the coarser of the two grids.
inline double l1_error(const DensityField& a, const DensityField& b) {
    auto pa = averaged_density(a);
    auto pb = averaged_density(b);
    if (pa.size() > pb.size()) pa = restrict_profile(pa, pb.size());
    else if (pb.size() > pa.size()) pb = restrict_profile(pb, pa.size());
    const double dtheta = two_pi / static_cast<double>(pa.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) s += std::abs(pa[i] - pb[i]);
    return dtheta * s;
}

}  // namespace kuramoto
