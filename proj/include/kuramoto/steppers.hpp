#pragma once

// Explicit and semi-implicit time stepping, the cyclic tridiagonal solver and the
// steady-state driver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kuramoto/flux.hpp"

namespace kuramoto {

enum class StepperKind { SemiImplicit, Explicit };
enum class ExplicitMethod { Euler, Heun };

inline std::string to_string(StepperKind k) { return k == StepperKind::SemiImplicit ? "isp" : "esp"; }

inline StepperKind stepper_kind_from_string(const std::string& name) {
    if (name == "isp" || name == "semi_implicit") return StepperKind::SemiImplicit;
    if (name == "esp" || name == "explicit") return StepperKind::Explicit;
    throw std::invalid_argument("unknown stepper '" + name + "'");
}

inline ExplicitMethod explicit_method_from_string(const std::string& name) {
    if (name == "euler") return ExplicitMethod::Euler;
    if (name == "heun") return ExplicitMethod::Heun;
    throw std::invalid_argument("unknown explicit method '" + name + "'");
}

struct StepperOptions {
    StepperKind kind = StepperKind::SemiImplicit;
    FluxScheme scheme = FluxScheme::ChangCooper;
    ExplicitMethod explicit_method = ExplicitMethod::Euler;
};

/// C_0 = max_k |w_k| + K (1 + h).
inline double transport_bound(const FrequencyQuadrature& quad, const SolverParams& params) {
    return velocity_bound(quad, params.K * (1.0 + params.daido_h));
}

/// Positivity bound dtheta^2 / (2 (C_0 dtheta + D)) of the forward Euler scheme.
inline double max_stable_dt_explicit(const PhaseGrid& grid, const FrequencyQuadrature& quad, const SolverParams& params) {
    const double c0 = transport_bound(quad, params);
    const double denom = 2.0 * (c0 * grid.dtheta + params.D);
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return grid.dtheta * grid.dtheta / denom;
}

/// Strict upper bound dtheta / (2 C_0) for the semi-implicit scheme.
inline double max_stable_dt_semi_implicit(const PhaseGrid& grid, const FrequencyQuadrature& quad,
                                          const SolverParams& params) {
    const double c0 = transport_bound(quad, params);
    if (c0 == 0.0) return std::numeric_limits<double>::infinity();
    return grid.dtheta / (2.0 * c0);
}

/// Throws if params.dt violates the stability bound of the stepper and enforcement is on.
inline void check_time_step(const PhaseGrid& grid, const FrequencyQuadrature& quad, const SolverParams& params,
                            StepperKind kind) {
    if (!params.enforce_dt_bound) return;
    if (kind == StepperKind::Explicit) {
        const double bound = max_stable_dt_explicit(grid, quad, params);
        if (params.dt > bound * (1.0 + 1e-12))
            throw std::invalid_argument("explicit step: dt = " + std::to_string(params.dt) +
                                        " exceeds the positivity bound " + std::to_string(bound));
    } else {
        const double bound = max_stable_dt_semi_implicit(grid, quad, params);
        if (!(params.dt < bound))
            throw std::invalid_argument("semi-implicit step: dt = " + std::to_string(params.dt) +
                                        " must be below dtheta / (2 C0) = " + std::to_string(bound));
    }
}

/// Cyclic tridiagonal system: row i reads a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = rhs[i]
/// with periodic indices, so a[0] sits in the top-right corner and c[N-1] in the bottom-left.
struct CyclicTridiagonalSystem {
    std::vector<double> a, b, c, rhs;

    std::size_t size() const noexcept { return b.size(); }

    Eigen::MatrixXd dense() const {
        const auto n = static_cast<Eigen::Index>(size());
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            m(i, (i + n - 1) % n) += a[ii];
            m(i, i) += b[ii];
            m(i, (i + 1) % n) += c[ii];
        }
        return m;
    }
};

namespace detail {

inline bool diagonally_dominant(const double* a, const double* b, const double* c, std::size_t n) {
    bool rows = true;
    bool cols = true;
    for (std::size_t i = 0; i < n && (rows || cols); ++i) {
        const std::size_t im = i == 0 ? n - 1 : i - 1;
        const std::size_t ip = i + 1 == n ? 0 : i + 1;
        if (std::abs(b[i]) < std::abs(a[i]) + std::abs(c[i])) rows = false;
        // Column i collects c[i-1] from row i-1 and a[i+1] from row i+1.
        if (std::abs(b[i]) < std::abs(c[im]) + std::abs(a[ip])) cols = false;
    }
    return rows || cols;
}

inline void dense_cyclic_solve(const double* a, const double* b, const double* c, const double* rhs, double* x,
                               std::size_t n) {
    CyclicTridiagonalSystem sys{{a, a + n}, {b, b + n}, {c, c + n}, {rhs, rhs + n}};
    const Eigen::MatrixXd m = sys.dense();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw std::runtime_error("cyclic tridiagonal system is singular");
    const Eigen::VectorXd sol = lu.solve(Eigen::Map<const Eigen::VectorXd>(rhs, static_cast<Eigen::Index>(n)));
    for (std::size_t i = 0; i < n; ++i) x[i] = sol(static_cast<Eigen::Index>(i));
}

}  // namespace detail

/// Thomas algorithm with a Sherman-Morrison correction for the two corner entries.
/// Falls back to a dense LU solve when the matrix is not diagonally dominant.
class CyclicSolver {
public:
    /// Solves into x; returns true when the dense fallback was used.
    bool solve(const double* a, const double* b, const double* c, const double* rhs, double* x, std::size_t n) {
        if (n < 3) throw std::invalid_argument("cyclic solver: need N >= 3");
        if (!detail::diagonally_dominant(a, b, c, n)) {
            detail::dense_cyclic_solve(a, b, c, rhs, x, n);
            return true;
        }
        const double alpha = c[n - 1];  // bottom-left corner
        const double beta = a[0];       // top-right corner
        if (alpha == 0.0 && beta == 0.0) {
            if (!thomas(a, b, c, rhs, x, nullptr, nullptr, n, 0.0, 0.0)) {
                detail::dense_cyclic_solve(a, b, c, rhs, x, n);
                return true;
            }
            return false;
        }
        const double gamma = -b[0];
        z_.resize(n);
        u_.assign(n, 0.0);
        u_[0] = gamma;
        u_[n - 1] = alpha;
        if (!thomas(a, b, c, rhs, x, u_.data(), z_.data(), n, gamma, alpha * beta / gamma)) {
            detail::dense_cyclic_solve(a, b, c, rhs, x, n);
            return true;
        }
        const double denom = 1.0 + z_[0] + beta * z_[n - 1] / gamma;
        if (denom == 0.0 || !std::isfinite(denom)) {
            detail::dense_cyclic_solve(a, b, c, rhs, x, n);
            return true;
        }
        const double fact = (x[0] + beta * x[n - 1] / gamma) / denom;
        for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z_[i];
        return false;
    }

private:
    // Solves the tridiagonal part with b[0] -= gamma and b[n-1] -= corr, for rhs r -> x and
    // optionally rhs2 -> x2 sharing one factorization. Returns false on a zero pivot.
    bool thomas(const double* a, const double* b, const double* c, const double* r, double* x, const double* r2,
                double* x2, std::size_t n, double gamma, double corr) {
        gam_.resize(n);
        double bet = b[0] - gamma;
        if (bet == 0.0) return false;
        x[0] = r[0] / bet;
        if (x2) x2[0] = r2[0] / bet;
        for (std::size_t j = 1; j < n; ++j) {
            gam_[j] = c[j - 1] / bet;
            const double bj = j + 1 == n ? b[j] - corr : b[j];
            bet = bj - a[j] * gam_[j];
            if (bet == 0.0) return false;
            x[j] = (r[j] - a[j] * x[j - 1]) / bet;
            if (x2) x2[j] = (r2[j] - a[j] * x2[j - 1]) / bet;
        }
        for (std::size_t j = n - 1; j-- > 0;) {
            x[j] -= gam_[j + 1] * x[j + 1];
            if (x2) x2[j] -= gam_[j + 1] * x2[j + 1];
        }
        return true;
    }

    std::vector<double> gam_, u_, z_;
};

inline std::vector<double> solve_cyclic_tridiagonal(const CyclicTridiagonalSystem& sys) {
    const std::size_t n = sys.size();
    if (sys.a.size() != n || sys.c.size() != n || sys.rhs.size() != n)
        throw std::invalid_argument("cyclic solver: inconsistent array lengths");
    std::vector<double> x(n);
    CyclicSolver solver;
    solver.solve(sys.a.data(), sys.b.data(), sys.c.data(), sys.rhs.data(), x.data(), n);
    return x;
}

struct StepReport {
    bool floored = false;
    bool dense_fallback = false;
};

/// Reusable workspace that advances a field in place; one instance per thread.
class Stepper {
public:
    explicit Stepper(StepperOptions options = {}) : options_(options) {}

    const StepperOptions& options() const noexcept { return options_; }

    StepReport step(DensityField& field, const SolverParams& params) {
        check_time_step(field.grid(), field.quad(), params, options_.kind);
        if (options_.kind == StepperKind::Explicit) return explicit_step(field, params);
        return semi_implicit_step(field, params);
    }

private:
    // rho += dt * (F_{i+1/2} - F_{i-1/2}) / dtheta, optionally written into a separate target.
    bool euler_update(const DensityField& from, DensityField& to, const SolverParams& params) {
        assemble_velocity(from, params, vel_);
        const auto n = static_cast<std::size_t>(from.n_cells());
        const double lambda = params.dt / from.grid().dtheta;
        flux_.resize(n);
        bool floored = false;
        for (int k = 0; k < from.n_nodes(); ++k) {
            const std::span<const double> u(vel_.u.data() + static_cast<std::size_t>(k) * n, n);
            const auto rho = from.column(k);
            floored |= column_flux(rho, u, params.D, from.grid().dtheta, options_.scheme, flux_.data());
            auto out = to.column(k);
            for (std::size_t i = 0; i < n; ++i) {
                const double left = flux_[i == 0 ? n - 1 : i - 1];
                out[i] = rho[i] + lambda * (flux_[i] - left);
            }
        }
        return floored;
    }

    StepReport explicit_step(DensityField& field, const SolverParams& params) {
        StepReport report;
        if (!stage_.same_layout(field) || stage_.grid_handle() != field.grid_handle()) stage_ = field;
        if (options_.explicit_method == ExplicitMethod::Euler) {
            report.floored = euler_update(field, stage_, params);
            std::swap(field.values(), stage_.values());
            return report;
        }
        // Heun / SSP-RK2: average of the state and two chained Euler updates.
        if (!stage2_.same_layout(field) || stage2_.grid_handle() != field.grid_handle()) stage2_ = field;
        report.floored = euler_update(field, stage_, params);
        report.floored |= euler_update(stage_, stage2_, params);
        auto& v = field.values();
        const auto& w = stage2_.values();
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = 0.5 * (v[j] + w[j]);
        return report;
    }

    StepReport semi_implicit_step(DensityField& field, const SolverParams& params) {
        StepReport report;
        assemble_velocity(field, params, vel_);
        const auto n = static_cast<std::size_t>(field.n_cells());
        const double dtheta = field.grid().dtheta;
        const double lambda = params.dt / dtheta;
        p_.resize(n);
        q_.resize(n);
        a_.resize(n);
        b_.resize(n);
        c_.resize(n);
        rhs_.resize(n);
        for (int k = 0; k < field.n_nodes(); ++k) {
            const double* u = vel_.u.data() + static_cast<std::size_t>(k) * n;
            auto rho = field.column(k);
            if (options_.scheme == FluxScheme::ChangCooper) {
                for (std::size_t i = 0; i < n; ++i) {
                    const auto cf = cc_coefficients(u[i], params.D, dtheta);
                    p_[i] = cf.p;
                    q_[i] = cf.q;
                }
            } else {
                // Entropic weights frozen at the old state.
                const double d = params.D / dtheta;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t ip = i + 1 == n ? 0 : i + 1;
                    if (rho[i] < positivity_floor || rho[ip] < positivity_floor) report.floored = true;
                    const double delta = entropic_weight(rho[i], rho[ip]);
                    p_[i] = d + u[i] * delta;
                    q_[i] = d - u[i] * (1.0 - delta);
                }
            }
            // F_{i+1/2} = q_{i+1/2} rho_{i+1} - p_{i+1/2} rho_i taken at the new time level.
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t im = i == 0 ? n - 1 : i - 1;
                a_[i] = -lambda * p_[im];
                c_[i] = -lambda * q_[i];
                b_[i] = 1.0 + lambda * (p_[i] + q_[im]);
                rhs_[i] = rho[i];
            }
            report.dense_fallback |= solver_.solve(a_.data(), b_.data(), c_.data(), rhs_.data(), rho.data(), n);
        }
        return report;
    }

    StepperOptions options_;
    InterfaceVelocityField vel_;
    CyclicSolver solver_;
    DensityField stage_, stage2_;
    std::vector<double> flux_, p_, q_, a_, b_, c_, rhs_;
};

/// One forward Euler step; returns the new field.
inline DensityField explicit_step(const DensityField& field, const SolverParams& params,
                                  FluxScheme scheme = FluxScheme::ChangCooper,
                                  ExplicitMethod method = ExplicitMethod::Euler) {
    DensityField out = field;
    Stepper(StepperOptions{StepperKind::Explicit, scheme, method}).step(out, params);
    return out;
}

/// One semi-implicit step with velocity and weights frozen at the old state; returns the new field.
inline DensityField semi_implicit_step(const DensityField& field, const SolverParams& params,
                                       FluxScheme scheme = FluxScheme::ChangCooper) {
    DensityField out = field;
    Stepper(StepperOptions{StepperKind::SemiImplicit, scheme}).step(out, params);
    return out;
}

struct SteadyResult {
    DensityField field;
    std::int64_t steps = 0;
    /// max |rho^{n+1} - rho^n| / dt at the last step.
    double residual = std::numeric_limits<double>::infinity();
    /// Residual after every trace_stride-th step (and the last one).
    std::vector<double> residual_history;
    std::int64_t trace_stride = 1;
    bool converged = false;
    bool floored = false;
    bool dense_fallback = false;
    /// Largest per-node mass change over the whole run and over a single step.
    double mass_drift = 0.0;
    double max_step_mass_drift = 0.0;
    double min_density = 0.0;
};

/// Steps until max |rho^{n+1} - rho^n| / dt < steady_tol or max_steps is reached.
/// Never throws on non-convergence; the flag reports it instead.
inline SteadyResult run_to_steady(DensityField field, const SolverParams& params, StepperOptions options = {},
                                  std::int64_t trace_stride = 1) {
    params.validate();
    check_time_step(field.grid(), field.quad(), params, options.kind);
    if (trace_stride < 1) throw std::invalid_argument("run_to_steady: trace_stride must be >= 1");
    SteadyResult res;
    res.trace_stride = trace_stride;
    Stepper stepper(options);
    const int m = field.n_nodes();
    std::vector<double> mass0(static_cast<std::size_t>(m)), mass_prev(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) mass0[static_cast<std::size_t>(k)] = mass_prev[static_cast<std::size_t>(k)] = mass(field, k);
    std::vector<double> prev;
    for (std::int64_t step = 1; step <= params.max_steps; ++step) {
        prev = field.values();
        const auto rep = stepper.step(field, params);
        res.floored |= rep.floored;
        res.dense_fallback |= rep.dense_fallback;
        double diff = 0.0;
        const auto& cur = field.values();
        for (std::size_t j = 0; j < cur.size(); ++j) diff = std::max(diff, std::abs(cur[j] - prev[j]));
        for (int k = 0; k < m; ++k) {
            const double mk = mass(field, k);
            const auto kk = static_cast<std::size_t>(k);
            res.max_step_mass_drift = std::max(res.max_step_mass_drift, std::abs(mk - mass_prev[kk]));
            res.mass_drift = std::max(res.mass_drift, std::abs(mk - mass0[kk]));
            mass_prev[kk] = mk;
        }
        res.residual = diff / params.dt;
        res.steps = step;
        const bool done = res.residual < params.steady_tol || !std::isfinite(res.residual);
        if (step % trace_stride == 0 || done || step == params.max_steps) res.residual_history.push_back(res.residual);
        if (done) {
            res.converged = std::isfinite(res.residual);
            break;
        }
    }
    res.min_density = field.min_value();
    res.field = std::move(field);
    return res;
}

}  // namespace kuramoto
