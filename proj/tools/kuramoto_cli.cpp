// kuramoto_cli: experiment runner for the diffusive continuum Kuramoto model.
//
//   kuramoto_cli evolve   --config run.json [--out DIR] [--threads T] [--seed S]
//   kuramoto_cli sweep    --config run.json ...
//   kuramoto_cli steady   --config run.json ...
//   kuramoto_cli compare  --config run.json ...
//   kuramoto_cli critical --config run.json ...
//
// Results go to DIR (default: output.dir of the config) as CSV files, each with a .meta.json
// sidecar. A one-line JSON summary goes to stdout; failures print a JSON error line to stderr
// and exit nonzero.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kuramoto/harness/config.hpp"
#include "kuramoto/harness/csv.hpp"
#include "kuramoto/harness/experiments.hpp"

namespace fs = std::filesystem;
using namespace kuramoto;
using namespace kuramoto::harness;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 1;
};

struct Context {
    ExperimentConfig cfg;
    fs::path out;
    int threads = 1;
    std::string command;
};

Context resolve(const Common& c, const std::string& command) {
    Context ctx;
    ctx.command = command;
    ctx.cfg = c.config.empty() ? parse_config(json::object()) : load_config(c.config);
    if (c.seed) ctx.cfg.seed = *c.seed;
    ctx.cfg.pmc.seed = ctx.cfg.seed;
    ctx.out = c.out.empty() ? fs::path(ctx.cfg.output_dir) : fs::path(c.out);
    if (c.threads < 1) throw std::invalid_argument("--threads must be >= 1");
    ctx.threads = c.threads;
    return ctx;
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

/// Sidecar next to a CSV: everything needed to reproduce the file.
void write_meta(const Context& ctx, const fs::path& csv, int replicas) {
    json meta{{"command", ctx.command},
              {"seed", ctx.cfg.seed},
              {"replicas", replicas},
              {"threads", ctx.threads},
              {"config", config_to_json(ctx.cfg)}};
    write_json(fs::path(csv.string() + ".meta.json"), meta);
}

json run_evolve(const Context& ctx) {
    const auto& c = ctx.cfg;
    EvolveSettings s;
    s.params = c.params;
    s.stepper = c.stepper;
    s.time_step = c.time_step;
    s.cadence = c.cadence;
    s.snapshot_times = c.snapshots;
    const fs::path snap_dir = ctx.out / "snapshots";
    auto rows = evolve(c.problem, s, [&](const DensityField& field, double, int index) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%04d.csv", index);
        auto out = open_output(snap_dir / name);
        write_snapshot_csv(out, field);
        return (fs::path("snapshots") / name).string();
    });
    const fs::path csv = ctx.out / "evolve.csv";
    auto out = open_output(csv);
    write_evolve_csv(out, rows);
    write_meta(ctx, csv, 1);
    json summary{{"command", "evolve"}, {"rows", rows.size()}, {"csv", csv.string()}};
    if (!rows.empty()) {
        summary["t_end"] = rows.back().t;
        summary["r"] = rows.back().r;
        summary["mass_drift"] = rows.back().mass_drift;
        summary["min_rho"] = rows.back().min_rho;
    }
    return summary;
}

json transition_json(const std::vector<RunRecord>& leg, double threshold) {
    const auto t = locate_transition(leg, threshold);
    if (!t) return nullptr;
    return {{"location", t->location}, {"before", t->before}, {"after", t->after}, {"jump", t->jump}};
}

json run_sweep(const Context& ctx) {
    const auto& c = ctx.cfg;
    SweepSettings s{c.params, c.stepper, c.time_step, ctx.threads};
    const auto records = sweep(c.sweep, c.problem, s);
    const fs::path csv = ctx.out / "sweep.csv";
    auto out = open_output(csv);
    write_sweep_csv(out, records);
    write_meta(ctx, csv, 1);
    json summary{{"command", "sweep"}, {"runs", records.size()}, {"csv", csv.string()}};
    for (const char* dir : {"forward", "backward"}) {
        const auto leg = leg_records(records, dir);
        if (!leg.empty()) summary[std::string("transition_") + dir] = transition_json(leg, c.sweep.threshold);
    }
    std::size_t unconverged = 0;
    for (const auto& r : records) unconverged += r.flags.find("not_converged") != std::string::npos;
    summary["not_converged"] = unconverged;
    return summary;
}

json run_steady(const Context& ctx) {
    const auto& c = ctx.cfg;
    const auto grid = c.problem.grid();
    const auto quad = c.problem.quad();
    SolverParams p = c.params;
    p.dt = choose_dt(*grid, *quad, p, c.stepper.kind, c.time_step);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_to_steady(two_gaussian_initial(grid, quad, c.problem.initial), p, c.stepper, 1000);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path csv = ctx.out / "steady.csv";
    auto out = open_output(csv);
    write_snapshot_csv(out, res.field);
    write_meta(ctx, csv, 1);
    const auto op = order_parameter(res.field);
    json summary{{"command", "steady"},
                 {"r_inf", op.r},
                 {"phi", std::isnan(op.phi) ? json(nullptr) : json(op.phi)},
                 {"steps", res.steps},
                 {"residual", res.residual},
                 {"converged", res.converged},
                 {"dt", p.dt},
                 {"wall_time", wall},
                 {"mass_drift", res.mass_drift},
                 {"min_density", res.min_density},
                 {"csv", csv.string()}};
    if (p.D > 0.0 && p.daido_h == 0.0) {
        const auto sc = self_consistent_r(p.K, p.D, c.problem.dist, *quad, grid);
        json branches = json::array();
        for (const auto& b : sc.branches) branches.push_back({{"r", b.r}, {"label", b.label}, {"stable", b.stable}});
        summary["self_consistent_r"] = sc.r;
        summary["branches"] = branches;
    }
    return summary;
}

json run_compare(const Context& ctx) {
    const auto& c = ctx.cfg;
    CompareSettings s;
    s.params = c.params;
    s.methods = c.compare_methods;
    s.scheme = c.stepper.scheme;
    s.grids = c.compare_grids;
    s.reference_modes = c.reference_modes;
    s.time_step = c.time_step;
    s.pmc = c.pmc;
    const auto rows = compare(c.problem, s);
    const fs::path csv = ctx.out / "compare.csv";
    auto out = open_output(csv);
    write_compare_csv(out, rows);
    write_meta(ctx, csv, c.pmc.n_runs);
    return {{"command", "compare"}, {"rows", rows.size()}, {"csv", csv.string()}};
}

json run_critical(const Context& ctx) {
    const auto& c = ctx.cfg;
    const auto kc = critical_coupling(c.problem.dist, c.params.D);
    json summary{{"command", "critical"},
                 {"distribution", distribution_to_json(c.problem.dist)},
                 {"D", c.params.D},
                 {"K_c", kc.value},
                 {"linear_threshold_only", kc.linear_threshold_only}};
    write_json(ctx.out / "critical.json", summary);
    return summary;
}

void error_line(const std::string& command, const std::string& message) {
    std::cerr << json{{"error", message}, {"command", command}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solvers and experiments for the diffusive continuum Kuramoto model"};
    app.require_subcommand(1);
    Common common;
    struct Sub {
        const char* name;
        const char* help;
        json (*run)(const Context&);
    };
    const Sub subs[] = {
        {"evolve", "Integrate in time and record r, phase, free energy and snapshots", run_evolve},
        {"sweep", "Continuation sweep in K or D with transition detection", run_sweep},
        {"steady", "Relax to the steady state and compare with the self-consistent r", run_steady},
        {"compare", "Steady-state accuracy of isp, esp, fgs and pmc against a reference", run_compare},
        {"critical", "Critical coupling K_c(D) of the frequency distribution", run_critical},
    };
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);
        sc->add_option("--seed", common.seed, "Random seed for Monte Carlo runs (overrides the config)");
        sc->add_option("--out", common.out, "Output directory (overrides output.dir)");
        sc->add_option("--threads", common.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_line("", e.what());
        return 2;
    }

    for (const auto& s : subs) {
        if (!app.got_subcommand(s.name)) continue;
        try {
            const auto ctx = resolve(common, s.name);
            std::cout << s.run(ctx).dump() << std::endl;
            return 0;
        } catch (const std::exception& e) {
            error_line(s.name, e.what());
            return 1;
        }
    }
    return 1;
}
