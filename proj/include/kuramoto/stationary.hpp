#pragma once

// Analytic stationary profiles and the self-consistency equation for r_inf.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "kuramoto/diagnostics.hpp"

namespace kuramoto {

/// Stationary profile at the cell centers of a grid for one frequency, with phase fixed to 0.
struct StationaryProfile {
    GridHandle grid;
    double r_inf = 0.0;
    double omega = 0.0;
    /// Normalized so that dtheta * sum = 1.
    std::vector<double> values;
    /// Value of the normalized profile at theta = 0.
    double rho_at_zero = 0.0;
};

namespace detail {

inline void require_positive_diffusion(double D, const char* who) {
    if (!(D > 0.0) || !std::isfinite(D)) throw std::invalid_argument(std::string(who) + ": D must be positive");
}

// Exponentiates log-values and normalizes discretely; returns the log normalization constant.
inline double normalize_log_profile(const std::vector<double>& logs, double dtheta, std::vector<double>& out) {
    const double mx = *std::max_element(logs.begin(), logs.end());
    out.resize(logs.size());
    double s = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        out[i] = std::exp(logs[i] - mx);
        s += out[i];
    }
    const double scale = 1.0 / (dtheta * s);
    for (double& v : out) v *= scale;
    return mx + std::log(dtheta * s);
}

// Composite 16-point Gauss-Legendre nodes on [0, 2pi], panel count chosen from the
// sharpest scale of the integrand exp((-w t + a (cos theta - cos(theta + t))) / D).
struct PanelRule {
    std::vector<double> t, w;
};

inline PanelRule panel_rule(double a_over_d, double w_over_d) {
    static const FrequencyQuadrature base = gauss_legendre(16);
    const int panels = 16 + static_cast<int>(std::ceil(8.0 * std::sqrt(std::abs(a_over_d)) + 2.0 * std::abs(w_over_d)));
    const double h = two_pi / panels;
    PanelRule rule;
    rule.t.reserve(static_cast<std::size_t>(panels) * 16);
    rule.w.reserve(static_cast<std::size_t>(panels) * 16);
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (std::size_t j = 0; j < base.size(); ++j) {
            rule.t.push_back(mid + 0.5 * h * base.nodes[j]);
            rule.w.push_back(h * base.weights[j]);
        }
    }
    return rule;
}

// log of int_0^{2pi} exp((-w t + a (cos theta - cos(theta + t))) / D) dt via log-sum-exp.
inline double log_periodic_integral(double theta, double a, double w, double D, const PanelRule& rule,
                                    std::vector<double>& scratch) {
    scratch.resize(rule.t.size());
    const double ct = std::cos(theta);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < rule.t.size(); ++j) {
        const double t = rule.t[j];
        scratch[j] = (-w * t + a * (ct - std::cos(theta + t))) / D;
        mx = std::max(mx, scratch[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < rule.t.size(); ++j) s += rule.w[j] * std::exp(scratch[j] - mx);
    return mx + std::log(s);
}

}  // namespace detail

/// rho(theta) proportional to exp(K r cos(theta - phase) / D) at the cell centers. For r equal to the
/// discrete order parameter of the profile this is the exact steady state of the Chang-Cooper scheme.
inline StationaryProfile analytic_steady_identical(double K, double D, double r_inf, GridHandle grid,
                                                   double phase = 0.0) {
    detail::require_positive_diffusion(D, "analytic_steady_identical");
    if (!(r_inf >= 0.0)) throw std::invalid_argument("analytic_steady_identical: r_inf must be >= 0");
    const PhaseGrid& g = *grid;
    std::vector<double> logs(g.size());
    const double a = K * r_inf / D;
    for (std::size_t i = 0; i < g.size(); ++i) logs[i] = a * std::cos(g.centers[i] - phase);
    StationaryProfile prof;
    prof.r_inf = r_inf;
    const double log_norm = detail::normalize_log_profile(logs, g.dtheta, prof.values);
    prof.rho_at_zero = std::exp(a * std::cos(phase) - log_norm);
    prof.grid = std::move(grid);
    return prof;
}

inline StationaryProfile analytic_steady_identical(double K, double D, double r_inf, const PhaseGrid& grid) {
    return analytic_steady_identical(K, D, r_inf, std::make_shared<const PhaseGrid>(grid));
}

/// Periodic stationary solution of D rho' = u rho - J with u = w - K r sin(theta):
/// rho(theta) proportional to int_0^{2pi} exp((-w t + K r (cos theta - cos(theta + t))) / D) dt,
/// evaluated in the log domain at the cell centers and normalized discretely.
inline StationaryProfile analytic_steady_nonidentical(double K, double D, double r_inf, double omega, GridHandle grid) {
    detail::require_positive_diffusion(D, "analytic_steady_nonidentical");
    if (!(r_inf >= 0.0)) throw std::invalid_argument("analytic_steady_nonidentical: r_inf must be >= 0");
    if (omega == 0.0) return analytic_steady_identical(K, D, r_inf, std::move(grid));
    const PhaseGrid& g = *grid;
    const double a = K * r_inf;
    const auto rule = detail::panel_rule(a / D, omega / D);
    std::vector<double> scratch;
    std::vector<double> logs(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        logs[i] = detail::log_periodic_integral(g.centers[i], a, omega, D, rule, scratch);
    StationaryProfile prof;
    prof.r_inf = r_inf;
    prof.omega = omega;
    const double log_norm = detail::normalize_log_profile(logs, g.dtheta, prof.values);
    prof.rho_at_zero = std::exp(detail::log_periodic_integral(0.0, a, omega, D, rule, scratch) - log_norm);
    prof.grid = std::move(grid);
    return prof;
}

/// Stationary profiles of every collocation node assembled into a field.
inline DensityField steady_field(double K, double D, double r_inf, GridHandle grid, QuadratureHandle quad) {
    DensityField field(grid, quad);
    for (int k = 0; k < field.n_nodes(); ++k) {
        const auto prof = analytic_steady_nonidentical(K, D, r_inf, field.quad().nodes[static_cast<std::size_t>(k)], grid);
        std::copy(prof.values.begin(), prof.values.end(), field.column(k).begin());
    }
    return field;
}

/// G(r) = dtheta sum_{i,k} cos(theta_i) rho_inf(theta_i, w_k; r) g_k.
inline double self_consistency_map(double K, double D, double r, const FrequencyQuadrature& quad, GridHandle grid) {
    double s = 0.0;
    const PhaseGrid& g = *grid;
    for (std::size_t k = 0; k < quad.size(); ++k) {
        const auto prof = analytic_steady_nonidentical(K, D, r, quad.nodes[k], grid);
        double c = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) c += g.cos_center[i] * prof.values[i];
        s += quad.weights[k] * c;
    }
    return g.dtheta * s;
}

struct FixedPointBranch {
    double r = 0.0;
    /// "incoherent", "coherent" or "coherent_unstable".
    std::string label;
    bool stable = false;
};

struct SelfConsistentResult {
    /// Largest stable fixed point; 0 when only the incoherent state is stable.
    double r = 0.0;
    std::vector<FixedPointBranch> branches;
    /// Limits of the damped iteration r <- (r + G(r)) / 2 started from 1 and from a small seed.
    double iterate_from_one = 0.0;
    double iterate_from_small = 0.0;
    bool iteration_converged = true;
};

struct SelfConsistentOptions {
    double damping = 0.5;
    std::int64_t max_iterations = 10'000;
    double small_seed = 1e-6;
    int scan_points = 64;
    bool run_iteration = true;
};

/// All fixed points of G on [0, 1] found by a sign scan plus bracketing, together with the
/// damped fixed-point iterations. No uniqueness is assumed.
inline SelfConsistentResult self_consistent_r(double K, double D, const FrequencyDistribution& dist,
                                              const FrequencyQuadrature& quad, GridHandle grid,
                                              SelfConsistentOptions opts = {}) {
    detail::require_positive_diffusion(D, "self_consistent_r");
    validate(dist);
    auto f = [&](double r) { return self_consistency_map(K, D, r, quad, grid) - r; };

    SelfConsistentResult res;
    const double lo = opts.small_seed;
    std::vector<double> rs(static_cast<std::size_t>(opts.scan_points) + 1), fs(rs.size());
    for (std::size_t j = 0; j < rs.size(); ++j) {
        rs[j] = lo + (1.0 - lo) * static_cast<double>(j) / static_cast<double>(opts.scan_points);
        fs[j] = f(rs[j]);
    }
    // r = 0 is always a fixed point; it is stable when G(r) < r just above it.
    res.branches.push_back({0.0, "incoherent", fs.front() < 0.0});
    for (std::size_t j = 0; j + 1 < rs.size(); ++j) {
        if (fs[j] == 0.0 || (fs[j] > 0.0) == (fs[j + 1] > 0.0)) continue;
        std::uintmax_t iters = 200;
        auto bracket = boost::math::tools::toms748_solve(f, rs[j], rs[j + 1], fs[j], fs[j + 1],
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
        const double root = 0.5 * (bracket.first + bracket.second);
        const bool stable = fs[j] > 0.0;
        res.branches.push_back({root, stable ? "coherent" : "coherent_unstable", stable});
    }
    for (const auto& b : res.branches)
        if (b.stable) res.r = std::max(res.r, b.r);

    if (opts.run_iteration) {
        auto iterate = [&](double r) {
            for (std::int64_t it = 0; it < opts.max_iterations; ++it) {
                const double next = (1.0 - opts.damping) * r + opts.damping * self_consistency_map(K, D, r, quad, grid);
                if (std::abs(next - r) < 1e-14) return next;
                r = next;
            }
            res.iteration_converged = false;
            return r;
        };
        res.iterate_from_one = iterate(1.0);
        res.iterate_from_small = iterate(opts.small_seed);
    }
    return res;
}

}  // namespace kuramoto
