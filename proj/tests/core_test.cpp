#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kuramoto/core.hpp"
#include "oracles.hpp"

using namespace kuramoto;

TEST(PhaseGrid, CellCentersAndFacesAreZeroBased) {
    const auto g = make_grid(8);
    EXPECT_DOUBLE_EQ(g.dtheta, 2.0 * std::numbers::pi / 8.0);
    EXPECT_DOUBLE_EQ(g.centers[0], 0.5 * g.dtheta);
    EXPECT_DOUBLE_EQ(g.face(0), g.dtheta);
    EXPECT_DOUBLE_EQ(g.face(7), 2.0 * std::numbers::pi);
    EXPECT_EQ(g.wrap(-1), 7);
    EXPECT_EQ(g.wrap(8), 0);
    EXPECT_DOUBLE_EQ(g.center(-1), g.centers[7]);
}

TEST(PhaseGrid, TrigTablesMatchDirectEvaluation) {
    const auto g = make_grid(13);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double c = (i + 0.5) * g.dtheta, f = (i + 1.0) * g.dtheta;
        EXPECT_NEAR(g.cos_center[i], std::cos(c), 1e-15);
        EXPECT_NEAR(g.sin2_center[i], std::sin(2 * c), 1e-15);
        EXPECT_NEAR(g.cos_face[i], std::cos(f), 1e-15);
        EXPECT_NEAR(g.sin2_face[i], std::sin(2 * f), 1e-15);
    }
}

TEST(PhaseGrid, RejectsTooFewCells) { EXPECT_THROW(make_grid(2), std::invalid_argument); }

TEST(DensityField, FrequencyMajorLayout) {
    auto quad = build_quadrature(GaussianDistribution{0.1}, 3);
    DensityField f(make_grid(5), quad);
    f(2, 1) = 7.0;
    EXPECT_EQ(f.values()[1 * 5 + 2], 7.0);
    EXPECT_EQ(f.column(1)[2], 7.0);
    EXPECT_THROW(f.column(3), std::out_of_range);
    EXPECT_EQ(f.n_cells(), 5);
    EXPECT_EQ(f.n_nodes(), 3);
}

TEST(SolverParams, ValidationRejectsBadValues) {
    SolverParams p;
    EXPECT_NO_THROW(p.validate());
    p.K = -1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.daido_h = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.dt = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.max_steps = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(InitialData, TwoGaussianHasUnitMassOnEveryNode) {
    auto grid = std::make_shared<const PhaseGrid>(make_grid(64));
    auto quad = std::make_shared<const FrequencyQuadrature>(build_quadrature(UniformDistribution{0.1}, 6));
    const auto f = two_gaussian_initial(grid, quad, TwoGaussianProfile{0.25, 0.75, 0.1});
    EXPECT_LT(mass_defect(f), 1e-14);
    EXPECT_GT(f.min_value(), 0.0);
}

TEST(InitialData, CellAveragesMatchFineQuadrature) {
    // For a wide profile the 4-point cell average agrees with a fine midpoint average.
    const TwoGaussianProfile prof{0.25, 0.75, 0.3};
    auto grid = std::make_shared<const PhaseGrid>(make_grid(32));
    auto quad = std::make_shared<const FrequencyQuadrature>(build_quadrature(DeltaDistribution{}, 1));
    const auto f = two_gaussian_initial(grid, quad, prof);
    std::vector<double> fine(32);
    double total = 0.0;
    for (int i = 0; i < 32; ++i) {
        double s = 0.0;
        for (int j = 0; j < 2000; ++j) s += prof(grid->dtheta * (i + (j + 0.5) / 2000.0));
        fine[static_cast<std::size_t>(i)] = s / 2000.0;
        total += fine[static_cast<std::size_t>(i)] * grid->dtheta;
    }
    for (int i = 0; i < 32; ++i) EXPECT_NEAR(f(i, 0), fine[static_cast<std::size_t>(i)] / total, 1e-6);
}

TEST(InitialData, RejectsBadProfile) {
    EXPECT_THROW((TwoGaussianProfile{0.25, 0.75, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((TwoGaussianProfile{-1, 0.75, 0.1}.validate()), std::invalid_argument);
}

TEST(Normalize, RejectsZeroMass) {
    DensityField f(make_grid(4), build_quadrature(DeltaDistribution{}, 1), 0.0);
    EXPECT_THROW(normalize(f), std::domain_error);
}

TEST(UniformField, IsNormalized) {
    auto grid = std::make_shared<const PhaseGrid>(make_grid(17));
    auto quad = std::make_shared<const FrequencyQuadrature>(build_quadrature(GaussianDistribution{0.2}, 4));
    EXPECT_LT(mass_defect(uniform_field(grid, quad)), 1e-14);
}
