#pragma once

// Experiment drivers: continuation sweeps, time evolutions and solver comparisons.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "kuramoto/kuramoto.hpp"

namespace kuramoto::harness {

/// Runs body(0..count-1) on up to `threads` workers; the first exception is rethrown.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || count <= 1) {
        for (std::size_t j = 0; j < count; ++j) body(j);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
        pool.emplace_back([&] {
            for (std::size_t j = next++; j < count; j = next++) {
                try {
                    body(j);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Time step: an explicit dt, or cfl times the stability bound of the stepper.
struct TimeStepPolicy {
    double dt = 0.0;
    double cfl = 0.9;
};

inline double choose_dt(const PhaseGrid& grid, const FrequencyQuadrature& quad, const SolverParams& params,
                        StepperKind kind, const TimeStepPolicy& policy) {
    if (policy.dt > 0.0) return policy.dt;
    if (!(policy.cfl > 0.0 && policy.cfl < 1.0)) throw std::invalid_argument("cfl must lie in (0, 1)");
    const double bound = kind == StepperKind::Explicit ? max_stable_dt_explicit(grid, quad, params)
                                                       : max_stable_dt_semi_implicit(grid, quad, params);
    if (!std::isfinite(bound)) return 0.1 * grid.dtheta * grid.dtheta;
    return policy.cfl * bound;
}

/// A discretized problem: grid, collocation and initial data.
struct Problem {
    FrequencyDistribution dist = DeltaDistribution{};
    int n_cells = 200;
    int n_nodes = 10;
    TwoGaussianProfile initial{0.25, 0.75, 0.1};

    GridHandle grid() const { return std::make_shared<const PhaseGrid>(make_grid(n_cells)); }
    QuadratureHandle quad() const {
        return std::make_shared<const FrequencyQuadrature>(build_quadrature(dist, is_delta(dist) ? 1 : n_nodes));
    }
};

enum class SweepParameter { K, D };
enum class SweepDirection { Forward, Backward, Both };

inline std::string to_string(SweepParameter p) { return p == SweepParameter::K ? "K" : "D"; }
inline std::string to_string(SweepDirection d) {
    switch (d) {
        case SweepDirection::Forward: return "forward";
        case SweepDirection::Backward: return "backward";
        default: return "both";
    }
}

struct SweepPlan {
    SweepParameter parameter = SweepParameter::K;
    /// Strictly increasing; a backward leg walks them in reverse.
    std::vector<double> values;
    SweepDirection direction = SweepDirection::Forward;
    /// Continue from the previous steady state instead of the initial data.
    bool warm_start = true;
    /// Amplitude eta of the rho <- rho (1 + eta cos theta) kick applied to warm starts, so that
    /// continuation cannot stall on an unstable branch.
    double perturbation = 1e-4;
    /// r above this value counts as coherent.
    double threshold = 1e-3;

    void validate() const {
        if (values.empty()) throw std::invalid_argument("sweep: no parameter values");
        for (std::size_t j = 1; j < values.size(); ++j)
            if (!(values[j] > values[j - 1])) throw std::invalid_argument("sweep: values must be strictly increasing");
        if (!(perturbation >= 0.0 && perturbation < 1.0)) throw std::invalid_argument("sweep: perturbation must lie in [0, 1)");
        if (!(threshold > 0.0)) throw std::invalid_argument("sweep: threshold must be positive");
    }
};

/// Builds an increasing grid from [start, stop] ranges with the given steps, merged and deduplicated.
struct SweepRange {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;
};

inline std::vector<double> expand_ranges(const std::vector<SweepRange>& ranges, std::vector<double> extra = {}) {
    std::vector<double> v = std::move(extra);
    for (const auto& r : ranges) {
        if (!(r.step > 0.0) || r.stop < r.start) throw std::invalid_argument("sweep range needs step > 0 and stop >= start");
        const auto n = static_cast<std::int64_t>(std::floor((r.stop - r.start) / r.step + 1e-9));
        for (std::int64_t j = 0; j <= n; ++j) v.push_back(r.start + static_cast<double>(j) * r.step);
    }
    std::sort(v.begin(), v.end());
    // Values closer than 1e-9 are the same grid point reached from two ranges.
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > 1e-9) out.push_back(x);
    return out;
}

struct RunRecord {
    std::string parameter;
    double value = 0.0;
    std::string direction;
    double r_inf = 0.0;
    std::int64_t steps = 0;
    double residual = 0.0;
    double wall_time = 0.0;
    double mass_drift = 0.0;
    double min_density = 0.0;
    std::string flags;
};

/// rho <- rho (1 + eta cos theta) on every node, renormalized.
inline void perturb_mode_one(DensityField& field, double eta) {
    if (eta == 0.0) return;
    const PhaseGrid& g = field.grid();
    for (int k = 0; k < field.n_nodes(); ++k) {
        auto col = field.column(k);
        for (std::size_t i = 0; i < col.size(); ++i) col[i] *= 1.0 + eta * g.cos_center[i];
    }
    normalize(field);
}

inline std::string record_flags(const SteadyResult& res) {
    std::string f;
    auto add = [&f](const char* s) {
        if (!f.empty()) f += ';';
        f += s;
    };
    if (!res.converged) add("not_converged");
    if (res.floored) add("floored");
    if (res.dense_fallback) add("dense_fallback");
    if (res.max_step_mass_drift >= 1e-12) add("mass_drift");
    if (res.min_density < 0.0) add("negative_density");
    return f;
}

struct SweepSettings {
    SolverParams base;
    StepperOptions stepper;
    TimeStepPolicy time_step;
    int threads = 1;
};

/// One continuation leg over `values` in the given order.
inline std::vector<RunRecord> sweep_leg(const SweepPlan& plan, const std::vector<double>& values, const std::string& label,
                                        const Problem& problem, const SweepSettings& settings) {
    const auto grid = problem.grid();
    const auto quad = problem.quad();
    std::vector<RunRecord> records;
    std::optional<DensityField> previous;
    for (double value : values) {
        SolverParams p = settings.base;
        (plan.parameter == SweepParameter::K ? p.K : p.D) = value;
        p.dt = choose_dt(*grid, *quad, p, settings.stepper.kind, settings.time_step);
        DensityField start = two_gaussian_initial(grid, quad, problem.initial);
        if (plan.warm_start && previous) {
            start = *previous;
            perturb_mode_one(start, plan.perturbation);
        }
        const auto t0 = std::chrono::steady_clock::now();
        auto res = run_to_steady(std::move(start), p, settings.stepper, 1000);
        RunRecord rec;
        rec.parameter = to_string(plan.parameter);
        rec.value = value;
        rec.direction = label;
        rec.r_inf = order_parameter(res.field).r;
        rec.steps = res.steps;
        rec.residual = res.residual;
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.mass_drift = res.mass_drift;
        rec.min_density = res.min_density;
        rec.flags = record_flags(res);
        records.push_back(std::move(rec));
        previous = std::move(res.field);
    }
    return records;
}

/// Steady states along the plan. With direction Both the forward and backward legs are
/// independent continuations and run concurrently when threads > 1.
inline std::vector<RunRecord> sweep(const SweepPlan& plan, const Problem& problem, const SweepSettings& settings) {
    plan.validate();
    settings.base.validate();
    std::vector<double> fwd = plan.values;
    std::vector<double> bwd(plan.values.rbegin(), plan.values.rend());
    if (plan.direction == SweepDirection::Forward) return sweep_leg(plan, fwd, "forward", problem, settings);
    if (plan.direction == SweepDirection::Backward) return sweep_leg(plan, bwd, "backward", problem, settings);
    std::vector<std::vector<RunRecord>> legs(2);
    parallel_for(2, settings.threads, [&](std::size_t j) {
        legs[j] = j == 0 ? sweep_leg(plan, fwd, "forward", problem, settings)
                         : sweep_leg(plan, bwd, "backward", problem, settings);
    });
    legs[0].insert(legs[0].end(), legs[1].begin(), legs[1].end());
    return legs[0];
}

inline std::vector<RunRecord> leg_records(const std::vector<RunRecord>& records, const std::string& direction) {
    std::vector<RunRecord> out;
    for (const auto& r : records)
        if (r.direction == direction) out.push_back(r);
    return out;
}

struct Transition {
    /// Midpoint of the bracketing parameter values.
    double location = 0.0;
    double before = 0.0;
    double after = 0.0;
    /// r_inf after minus r_inf before the switch.
    double jump = 0.0;
};

/// First switch of the coherence state (r > threshold) along a leg, in sweep order.
inline std::optional<Transition> locate_transition(const std::vector<RunRecord>& leg, double threshold) {
    if (leg.size() < 2) return std::nullopt;
    const bool initial = leg.front().r_inf > threshold;
    for (std::size_t j = 1; j < leg.size(); ++j) {
        if ((leg[j].r_inf > threshold) != initial) {
            Transition t;
            t.before = leg[j - 1].value;
            t.after = leg[j].value;
            t.location = 0.5 * (t.before + t.after);
            t.jump = leg[j].r_inf - leg[j - 1].r_inf;
            return t;
        }
    }
    return std::nullopt;
}

struct SqrtLawFit {
    double kc = 0.0;
    double c = 0.0;
    /// ||r - c sqrt(K - kc)||_2 / ||r||_2 over the fitted points.
    double relative_residual = 0.0;
    std::size_t points = 0;
};

/// Least-squares fit of r^2 = c^2 (K - kc) over the points with value in [lo, hi].
inline SqrtLawFit fit_sqrt_law(const std::vector<double>& values, const std::vector<double>& r, double lo, double hi) {
    if (values.size() != r.size()) throw std::invalid_argument("fit_sqrt_law: size mismatch");
    std::vector<double> x, y, rr;
    for (std::size_t j = 0; j < values.size(); ++j)
        if (values[j] >= lo && values[j] <= hi) {
            x.push_back(values[j]);
            y.push_back(r[j] * r[j]);
            rr.push_back(r[j]);
        }
    if (x.size() < 2) throw std::invalid_argument("fit_sqrt_law: need at least two points in the window");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        sx += x[j];
        sy += y[j];
        sxx += x[j] * x[j];
        sxy += x[j] * y[j];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    SqrtLawFit fit;
    fit.points = x.size();
    if (!(slope > 0.0)) {
        fit.relative_residual = std::numeric_limits<double>::infinity();
        return fit;
    }
    fit.kc = -icpt / slope;
    fit.c = std::sqrt(slope);
    double num = 0, den = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double model = fit.c * std::sqrt(std::max(x[j] - fit.kc, 0.0));
        num += (rr[j] - model) * (rr[j] - model);
        den += rr[j] * rr[j];
    }
    fit.relative_residual = den > 0.0 ? std::sqrt(num / den) : std::numeric_limits<double>::infinity();
    return fit;
}

struct EvolveRow {
    double t = 0.0;
    double r = 0.0;
    double phi = 0.0;
    /// NaN unless the run has identical oscillators without the second harmonic.
    double free_energy = 0.0;
    double dissipation = 0.0;
    double mass_drift = 0.0;
    double min_rho = 0.0;
    /// Empty unless a snapshot was taken at this row.
    std::string snapshot;
};

struct EvolveSettings {
    SolverParams params;
    StepperOptions stepper;
    TimeStepPolicy time_step;
    /// Time between rows; 0 records every step.
    double cadence = 0.1;
    /// Snapshot request times, matched to the first row at or after each.
    std::vector<double> snapshot_times;
};

/// Integrates to params.t_end and records diagnostics. The callback receives every snapshot
/// state and returns the name recorded in the row. A zero horizon yields no rows.
inline std::vector<EvolveRow> evolve(const Problem& problem, const EvolveSettings& s,
                                     const std::function<std::string(const DensityField&, double, int)>& on_snapshot = {}) {
    const auto grid = problem.grid();
    const auto quad = problem.quad();
    SolverParams p = s.params;
    p.dt = choose_dt(*grid, *quad, p, s.stepper.kind, s.time_step);
    p.validate();
    std::vector<EvolveRow> rows;
    if (p.t_end <= 0.0) return rows;
    DensityField field = two_gaussian_initial(grid, quad, problem.initial);
    std::vector<double> mass0(static_cast<std::size_t>(field.n_nodes()));
    for (int k = 0; k < field.n_nodes(); ++k) mass0[static_cast<std::size_t>(k)] = mass(field, k);
    const bool energy = field.n_nodes() == 1 && p.daido_h == 0.0;
    std::vector<double> snaps = s.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    int snap_index = 0;

    auto record = [&](double t) {
        EvolveRow row;
        row.t = t;
        const auto op = order_parameter(field);
        row.r = op.r;
        row.phi = op.phi;
        if (energy) {
            const auto e = free_energy_identical(field, p);
            row.free_energy = e.free_energy;
            row.dissipation = e.dissipation;
        } else {
            row.free_energy = row.dissipation = std::numeric_limits<double>::quiet_NaN();
        }
        double drift = 0.0;
        for (int k = 0; k < field.n_nodes(); ++k)
            drift = std::max(drift, std::abs(mass(field, k) - mass0[static_cast<std::size_t>(k)]));
        row.mass_drift = drift;
        row.min_rho = field.min_value();
        if (next_snap < snaps.size() && t + 1e-12 >= snaps[next_snap]) {
            while (next_snap < snaps.size() && t + 1e-12 >= snaps[next_snap]) ++next_snap;
            if (on_snapshot) row.snapshot = on_snapshot(field, t, snap_index);
            ++snap_index;
        }
        rows.push_back(std::move(row));
    };

    Stepper stepper(s.stepper);
    const auto n_steps = static_cast<std::int64_t>(std::ceil(p.t_end / p.dt - 1e-9));
    const auto stride = s.cadence > 0.0 ? std::max<std::int64_t>(1, std::llround(s.cadence / p.dt)) : 1;
    record(0.0);
    for (std::int64_t step = 1; step <= n_steps; ++step) {
        SolverParams ps = p;
        // The last step lands exactly on t_end.
        if (step == n_steps) ps.dt = p.t_end - static_cast<double>(n_steps - 1) * p.dt;
        if (ps.dt > 0.0) stepper.step(field, ps);
        if (step % stride == 0 || step == n_steps) record(std::min(p.t_end, static_cast<double>(step) * p.dt));
    }
    return rows;
}

/// Field rotated by a whole number of cells: out(i) = in(i - shift).
inline DensityField rotate_cells(const DensityField& in, int shift) {
    DensityField out = in;
    const int n = in.n_cells();
    for (int k = 0; k < in.n_nodes(); ++k)
        for (int i = 0; i < n; ++i) out(i, k) = in(((i - shift) % n + n) % n, k);
    return out;
}

struct CompareRow {
    std::string method;
    /// Cells for grid methods, grid points for FGS, particles for PMC.
    std::int64_t n = 0;
    double r_inf = 0.0;
    /// Standard error for PMC, 0 for deterministic methods.
    double r_stderr = 0.0;
    /// L1 distance of the steady g-averaged density to the reference; NaN for PMC.
    double l1_error = 0.0;
    double wall_time = 0.0;
};

struct CompareSettings {
    SolverParams params;
    std::vector<std::string> methods{"isp"};
    FluxScheme scheme = FluxScheme::ChangCooper;
    std::vector<int> grids{16, 32, 64};
    /// Modes of the spectral reference for identical oscillators (4096 grid points).
    int reference_modes = 2047;
    TimeStepPolicy time_step;
    PmcSettings pmc;
};

/// Steady-state comparison of the requested methods against a common reference: the spectral
/// solution for identical oscillators, the self-consistent analytic profile otherwise.
inline std::vector<CompareRow> compare(const Problem& problem, const CompareSettings& s) {
    const bool identical = is_delta(problem.dist);
    for (const auto& m : s.methods) {
        if (m != "isp" && m != "esp" && m != "fgs" && m != "pmc") throw std::invalid_argument("compare: unknown method '" + m + "'");
        if (m == "fgs" && (!identical || s.params.daido_h != 0.0))
            throw std::invalid_argument("compare: fgs needs identical oscillators without the second harmonic");
    }
    if (s.params.D <= 0.0) throw std::invalid_argument("compare: steady comparison needs D > 0");
    std::vector<CompareRow> rows;
    for (const auto& m : s.methods) {
        if (m == "pmc") {
            const auto t0 = std::chrono::steady_clock::now();
            const auto est = run_averaged(s.params, problem.dist, s.pmc);
            rows.push_back({m, static_cast<std::int64_t>(s.pmc.n_particles), est.mean, est.std_error,
                            std::numeric_limits<double>::quiet_NaN(),
                            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
            continue;
        }
        for (int n : s.grids) {
            Problem pr = problem;
            pr.n_cells = n;
            const auto grid = pr.grid();
            const auto quad = pr.quad();
            const auto initial = two_gaussian_initial(grid, quad, pr.initial);
            const auto t0 = std::chrono::steady_clock::now();
            DensityField result;
            if (m == "fgs") {
                const int modes = modes_for_points(n);
                SolverParams p = s.params;
                const auto fr = fgs_run_to_steady(fourier_initial(pr.initial, modes), p, 0.5 * fgs_max_dt(p, modes));
                result = fgs_evaluate(fr.state, grid);
            } else {
                SolverParams p = s.params;
                const StepperKind kind = m == "isp" ? StepperKind::SemiImplicit : StepperKind::Explicit;
                p.dt = choose_dt(*grid, *quad, p, kind, s.time_step);
                result = run_to_steady(initial, p, StepperOptions{kind, s.scheme}, 1000).field;
            }
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            // Steady states form a rotation family, so the reference takes the computed phase.
            const auto op = order_parameter(result);
            const double phase = op.phi;
            double l1 = std::numeric_limits<double>::quiet_NaN();
            if (identical && s.params.daido_h == 0.0) {
                const auto reference =
                    reference_steady(s.params.K, s.params.D, s.reference_modes, grid, std::isnan(phase) ? 0.0 : phase);
                l1 = l1_error(result, reference);
            } else {
                const auto sc = self_consistent_r(s.params.K, s.params.D, pr.dist, *quad, grid, {.run_iteration = false});
                const auto reference = steady_field(s.params.K, s.params.D, sc.r, grid, quad);
                // The analytic profile has phase 0; it is comparable when the computed phase is a whole
                // number of cells, or irrelevant when the reference is incoherent.
                const double shift = std::isnan(phase) || sc.r == 0.0 ? 0.0 : phase / grid->dtheta;
                if (std::abs(shift - std::round(shift)) < 1e-6)
                    l1 = l1_error(result, rotate_cells(reference, static_cast<int>(std::lround(shift))));
            }
            rows.push_back({m, n, op.r, 0.0, l1, wall});
        }
    }
    return rows;
}

}  // namespace kuramoto::harness
