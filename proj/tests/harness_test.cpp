#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>

#include "kuramoto/harness/config.hpp"
#include "kuramoto/harness/csv.hpp"
#include "kuramoto/harness/experiments.hpp"

using namespace kuramoto;
using namespace kuramoto::harness;

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors) {
    for (int threads : {1, 4}) {
        std::vector<std::atomic<int>> hits(50);
        parallel_for(50, threads, [&](std::size_t j) { ++hits[j]; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
        EXPECT_THROW(parallel_for(10, threads, [](std::size_t j) { if (j == 7) throw std::runtime_error("x"); }),
                     std::runtime_error);
    }
}

TEST(ExpandRanges, MergesAndDeduplicates) {
    const auto v = expand_ranges({{1.0, 1.2, 0.1}, {1.15, 1.2, 0.05}}, {0.5});
    const std::vector<double> ref{0.5, 1.0, 1.1, 1.15, 1.2};
    ASSERT_EQ(v.size(), ref.size());
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(v[j], ref[j], 1e-12);
    EXPECT_THROW(expand_ranges({{1.0, 0.5, 0.1}}), std::invalid_argument);
}

TEST(SweepPlan, Validation) {
    SweepPlan plan;
    EXPECT_THROW(plan.validate(), std::invalid_argument);
    plan.values = {1.0, 0.5};
    EXPECT_THROW(plan.validate(), std::invalid_argument);
    plan.values = {0.5, 1.0};
    EXPECT_NO_THROW(plan.validate());
}

TEST(Transition, LocatesFirstSwitch) {
    std::vector<RunRecord> leg(4);
    const double vals[] = {1.0, 1.1, 1.2, 1.3};
    const double rs[] = {1e-8, 2e-4, 0.3, 0.4};
    for (int j = 0; j < 4; ++j) {
        leg[static_cast<std::size_t>(j)].value = vals[j];
        leg[static_cast<std::size_t>(j)].r_inf = rs[j];
    }
    const auto t = locate_transition(leg, 1e-3);
    ASSERT_TRUE(t.has_value());
    EXPECT_NEAR(t->location, 1.15, 1e-12);
    EXPECT_NEAR(t->jump, 0.3 - 2e-4, 1e-12);
    EXPECT_FALSE(locate_transition(leg, 0.5).has_value());
}

TEST(SqrtLaw, RecoversExactLaw) {
    std::vector<double> k, r;
    for (double x = 1.0; x <= 1.5; x += 0.01) {
        k.push_back(x);
        r.push_back(x > 1.2 ? 0.9 * std::sqrt(x - 1.2) : 0.0);
    }
    const auto fit = fit_sqrt_law(k, r, 1.205, 1.3);
    EXPECT_NEAR(fit.kc, 1.2, 1e-10);
    EXPECT_NEAR(fit.c, 0.9, 1e-10);
    EXPECT_LT(fit.relative_residual, 1e-10);
    EXPECT_THROW(fit_sqrt_law(k, r, 2.0, 3.0), std::invalid_argument);
}

TEST(PerturbModeOne, KeepsMassAndAddsCosine) {
    auto g = std::make_shared<const PhaseGrid>(make_grid(32));
    auto q = std::make_shared<const FrequencyQuadrature>(build_quadrature(DeltaDistribution{}, 1));
    auto f = uniform_field(g, q);
    perturb_mode_one(f, 1e-2);
    EXPECT_LT(mass_defect(f), 1e-14);
    EXPECT_NEAR(order_parameter(f).r, 0.5e-2, 1e-6);
}

TEST(Sweep, IdenticalTransitionOnCoarseGrid) {
    Problem pr;
    pr.n_cells = 24;
    SweepPlan plan;
    plan.values = {1.6, 1.8, 2.2, 2.4};
    plan.direction = SweepDirection::Both;
    SweepSettings s;
    s.base.D = 1.0;
    s.base.steady_tol = 1e-7;
    s.threads = 2;
    const auto rec = sweep(plan, pr, s);
    ASSERT_EQ(rec.size(), 8u);
    const auto fwd = leg_records(rec, "forward");
    const auto bwd = leg_records(rec, "backward");
    EXPECT_NEAR(locate_transition(fwd, 1e-3)->location, 2.0, 1e-12);
    EXPECT_NEAR(locate_transition(bwd, 1e-3)->location, 2.0, 1e-12);
    EXPECT_EQ(bwd.front().value, 2.4);
    for (const auto& r : rec) EXPECT_EQ(r.flags, "");
}

TEST(Evolve, RowsAtCadenceAndSnapshots) {
    Problem pr;
    pr.n_cells = 32;
    EvolveSettings s;
    s.params.K = 3.0;
    s.params.D = 1.0;
    s.params.t_end = 1.0;
    s.cadence = 0.25;
    s.time_step.dt = 0.01;
    s.snapshot_times = {0.0, 0.5};
    int snaps = 0;
    const auto rows = evolve(pr, s, [&](const DensityField&, double, int i) {
        ++snaps;
        return "snap" + std::to_string(i);
    });
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows.back().t, 1.0);
    EXPECT_EQ(snaps, 2);
    EXPECT_EQ(rows[0].snapshot, "snap0");
    EXPECT_EQ(rows[2].snapshot, "snap1");
    for (std::size_t j = 1; j < rows.size(); ++j) EXPECT_LE(rows[j].free_energy, rows[j - 1].free_energy);
    s.params.t_end = 0.0;
    EXPECT_TRUE(evolve(pr, s).empty());
}

TEST(Compare, IdenticalMethodsAgainstSpectralReference) {
    Problem pr;
    CompareSettings s;
    s.params.K = 1.0;
    s.params.D = 0.1;
    s.params.steady_tol = 1e-12;
    s.methods = {"isp", "fgs"};
    s.grids = {32};
    s.reference_modes = 511;
    const auto rows = compare(pr, s);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LT(rows[0].l1_error, 1e-9);
    EXPECT_LT(rows[1].l1_error, 1e-4);
    s.methods = {"weno"};
    EXPECT_THROW(compare(pr, s), std::invalid_argument);
}

TEST(Config, DefaultsAndOverrides) {
    const auto c = parse_config(json::parse(R"({"model": {"K": 2.5}, "grid": {"N": 50, "M": 4},
        "distribution": {"type": "uniform", "sigma_g": 0.2}, "stepper": {"method": "esp", "flux": "entropic"},
        "sweep": {"ranges": [{"start": 1, "stop": 2, "step": 0.5}], "direction": "both"}})"));
    EXPECT_EQ(c.params.K, 2.5);
    EXPECT_EQ(c.params.D, 0.5);
    EXPECT_EQ(c.problem.n_cells, 50);
    EXPECT_EQ(c.stepper.kind, StepperKind::Explicit);
    EXPECT_EQ(c.stepper.scheme, FluxScheme::Entropic);
    EXPECT_TRUE(std::holds_alternative<UniformDistribution>(c.problem.dist));
    EXPECT_EQ(c.sweep.values, (std::vector<double>{1.0, 1.5, 2.0}));
    EXPECT_EQ(c.sweep.direction, SweepDirection::Both);
    // The resolved config parses back to the same settings.
    const auto again = parse_config(config_to_json(c));
    EXPECT_EQ(config_to_json(again), config_to_json(c));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_config(json::parse(R"({"modle": {}})")), std::invalid_argument);
    EXPECT_THROW(parse_config(json::parse(R"({"model": {"k": 1}})")), std::invalid_argument);
    EXPECT_THROW(parse_config(json::parse(R"({"distribution": {"type": "cauchy"}})")), std::invalid_argument);
    EXPECT_THROW(parse_config(json::parse(R"({"model": {"D": -1}})")), std::invalid_argument);
    EXPECT_THROW(parse_config(json::parse(R"({"grid": {"N": 2}})")), std::invalid_argument);
    EXPECT_THROW(load_config("/nonexistent/config.json"), std::runtime_error);
}

TEST(Csv, FormatsRoundTripAndQuotes) {
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::stod(format_double(x)), x);
    EXPECT_EQ(format_double(std::nan("")), "nan");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    std::ostringstream out;
    RunRecord r;
    r.parameter = "K";
    r.value = 1.5;
    r.direction = "forward";
    r.flags = "not_converged;floored";
    write_sweep_csv(out, {r});
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
              "parameter,value,direction,r_inf,steps,residual,wall_time,mass_drift,min_density,flags");
    EXPECT_NE(out.str().find("K,1.5,forward,0,0,0,0,0,0,not_converged;floored"), std::string::npos);
}
