#pragma once

// Phase grid, density storage, solver parameters and initial data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuramoto/distributions.hpp"

namespace kuramoto {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Uniform periodic grid on [0, 2pi). Cell i (0-based) has center (i + 1/2) dtheta and
/// right interface (i + 1) dtheta; the interface at 2pi is identified with 0.
struct PhaseGrid {
    int n_cells = 0;
    double dtheta = 0.0;
    std::vector<double> centers;
    std::vector<double> cos_center, sin_center;
    std::vector<double> cos2_center, sin2_center;
    /// Trig tables at the right interface of each cell.
    std::vector<double> cos_face, sin_face;
    std::vector<double> cos2_face, sin2_face;

    std::size_t size() const noexcept { return static_cast<std::size_t>(n_cells); }
    double center(int i) const { return centers.at(static_cast<std::size_t>(wrap(i))); }
    /// Position of interface i + 1/2, i.e. the right edge of cell i.
    double face(int i) const { return (wrap(i) + 1) * dtheta; }
    int wrap(int i) const noexcept { return ((i % n_cells) + n_cells) % n_cells; }
};

inline PhaseGrid make_grid(int n_cells) {
    if (n_cells < 3) throw std::invalid_argument("make_grid: need at least 3 cells, got " + std::to_string(n_cells));
    PhaseGrid g;
    g.n_cells = n_cells;
    g.dtheta = two_pi / n_cells;
    const auto n = static_cast<std::size_t>(n_cells);
    g.centers.resize(n);
    g.cos_center.resize(n);
    g.sin_center.resize(n);
    g.cos2_center.resize(n);
    g.sin2_center.resize(n);
    g.cos_face.resize(n);
    g.sin_face.resize(n);
    g.cos2_face.resize(n);
    g.sin2_face.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = (static_cast<double>(i) + 0.5) * g.dtheta;
        const double f = (static_cast<double>(i) + 1.0) * g.dtheta;
        g.centers[i] = c;
        g.cos_center[i] = std::cos(c);
        g.sin_center[i] = std::sin(c);
        g.cos2_center[i] = std::cos(2.0 * c);
        g.sin2_center[i] = std::sin(2.0 * c);
        g.cos_face[i] = std::cos(f);
        g.sin_face[i] = std::sin(f);
        g.cos2_face[i] = std::cos(2.0 * f);
        g.sin2_face[i] = std::sin(2.0 * f);
    }
    return g;
}

using GridHandle = std::shared_ptr<const PhaseGrid>;
using QuadratureHandle = std::shared_ptr<const FrequencyQuadrature>;

/// Cell-averaged density rho(i, k) over phase cell i and frequency node k.
/// Storage is frequency-major: node k owns the contiguous block [k N, (k + 1) N).
class DensityField {
public:
    DensityField() = default;

    DensityField(GridHandle grid, QuadratureHandle quad, double fill = 0.0)
        : grid_(std::move(grid)), quad_(std::move(quad)) {
        if (!grid_ || !quad_) throw std::invalid_argument("DensityField: null grid or quadrature");
        if (quad_->size() == 0) throw std::invalid_argument("DensityField: empty quadrature");
        values_.assign(grid_->size() * quad_->size(), fill);
    }

    DensityField(const PhaseGrid& grid, const FrequencyQuadrature& quad, double fill = 0.0)
        : DensityField(std::make_shared<const PhaseGrid>(grid), std::make_shared<const FrequencyQuadrature>(quad),
                       fill) {}

    const PhaseGrid& grid() const { return *grid_; }
    const FrequencyQuadrature& quad() const { return *quad_; }
    const GridHandle& grid_handle() const noexcept { return grid_; }
    const QuadratureHandle& quad_handle() const noexcept { return quad_; }

    int n_cells() const noexcept { return grid_ ? grid_->n_cells : 0; }
    int n_nodes() const noexcept { return quad_ ? static_cast<int>(quad_->size()) : 0; }

    double& operator()(int i, int k) { return values_[index(i, k)]; }
    double operator()(int i, int k) const { return values_[index(i, k)]; }

    std::span<double> column(int k) { return {values_.data() + offset(k), grid_->size()}; }
    std::span<const double> column(int k) const { return {values_.data() + offset(k), grid_->size()}; }

    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double min_value() const {
        double m = values_.empty() ? 0.0 : values_.front();
        for (double v : values_) m = std::min(m, v);
        return m;
    }

    bool same_layout(const DensityField& other) const noexcept {
        return n_cells() == other.n_cells() && n_nodes() == other.n_nodes();
    }

private:
    std::size_t offset(int k) const {
        if (k < 0 || k >= n_nodes()) throw std::out_of_range("DensityField: node index out of range");
        return static_cast<std::size_t>(k) * grid_->size();
    }
    std::size_t index(int i, int k) const noexcept {
        return static_cast<std::size_t>(k) * grid_->size() + static_cast<std::size_t>(i);
    }

    GridHandle grid_;
    QuadratureHandle quad_;
    std::vector<double> values_;
};

/// Physical and numerical parameters of a run.
struct SolverParams {
    double K = 1.0;
    double D = 0.5;
    double daido_h = 0.0;
    double dt = 1e-3;
    double t_end = 1.0;
    double steady_tol = 1e-9;
    std::int64_t max_steps = 10'000'000;
    /// Reject time steps above the stability bound of the chosen stepper.
    bool enforce_dt_bound = true;

    void validate() const {
        if (!(K >= 0.0) || !std::isfinite(K)) throw std::invalid_argument("SolverParams: K must be >= 0");
        if (!(D >= 0.0) || !std::isfinite(D)) throw std::invalid_argument("SolverParams: D must be >= 0");
        if (!(daido_h >= 0.0 && daido_h <= 1.0)) throw std::invalid_argument("SolverParams: daido_h must lie in [0, 1]");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SolverParams: dt must be positive");
        if (!(t_end >= 0.0)) throw std::invalid_argument("SolverParams: t_end must be >= 0");
        if (!(steady_tol > 0.0)) throw std::invalid_argument("SolverParams: steady_tol must be positive");
        if (max_steps < 1) throw std::invalid_argument("SolverParams: max_steps must be >= 1");
    }
};

/// Two-bump initial profile rho1 N(pi/2, sigma) + rho2 N(3pi/2, sigma) on the torus.
struct TwoGaussianProfile {
    double rho1 = 0.25;
    double rho2 = 0.75;
    double sigma = 0.01;

    void validate() const {
        if (!(sigma > 0.0)) throw std::invalid_argument("two-Gaussian profile: sigma must be positive");
        if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw std::invalid_argument("two-Gaussian profile: weights must be positive");
    }

    /// Unnormalized pointwise value; bumps are taken as written, without periodization.
    double operator()(double theta) const {
        const double a = theta - 0.5 * std::numbers::pi;
        const double b = theta - 1.5 * std::numbers::pi;
        return (rho1 * std::exp(-a * a / (2.0 * sigma)) + rho2 * std::exp(-b * b / (2.0 * sigma))) /
               std::sqrt(2.0 * std::numbers::pi * sigma);
    }
};

/// Rescale each node so that dtheta * sum_i rho(i, k) = 1.
inline void normalize(DensityField& field) {
    const double dtheta = field.grid().dtheta;
    for (int k = 0; k < field.n_nodes(); ++k) {
        auto col = field.column(k);
        double s = 0.0;
        for (double v : col) s += v;
        if (!(s > 0.0)) throw std::domain_error("normalize: node has non-positive total mass");
        const double scale = 1.0 / (dtheta * s);
        for (double& v : col) v *= scale;
    }
}

/// Cell averages of the two-Gaussian profile (4-point Gauss-Legendre per cell), identical
/// on every frequency node and normalized discretely.
inline DensityField two_gaussian_initial(GridHandle grid, QuadratureHandle quad, const TwoGaussianProfile& profile) {
    profile.validate();
    DensityField field(std::move(grid), std::move(quad));
    const PhaseGrid& g = field.grid();
    static constexpr double gl_x[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                       0.8611363115940526};
    static constexpr double gl_w[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                       0.3478548451374538};
    std::vector<double> avg(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 0.0;
        for (int q = 0; q < 4; ++q) s += 0.5 * gl_w[q] * profile(g.centers[i] + 0.5 * g.dtheta * gl_x[q]);
        avg[i] = s;
    }
    for (int k = 0; k < field.n_nodes(); ++k) std::copy(avg.begin(), avg.end(), field.column(k).begin());
    normalize(field);
    return field;
}

inline DensityField two_gaussian_initial(const PhaseGrid& grid, const FrequencyQuadrature& quad,
                                         double rho1, double rho2, double sigma) {
    return two_gaussian_initial(std::make_shared<const PhaseGrid>(grid),
                                std::make_shared<const FrequencyQuadrature>(quad), TwoGaussianProfile{rho1, rho2, sigma});
}

/// The incoherent state rho = 1 / (2 pi) on every node.
inline DensityField uniform_field(GridHandle grid, QuadratureHandle quad) {
    return DensityField(std::move(grid), std::move(quad), 1.0 / two_pi);
}

/// dtheta * sum_i rho(i, k).
inline double mass(const DensityField& field, int k) {
    if (k < 0 || k >= field.n_nodes()) throw std::out_of_range("mass: node index out of range");
    double s = 0.0;
    for (double v : field.column(k)) s += v;
    return field.grid().dtheta * s;
}

/// Largest |mass(k) - 1| over all nodes.
inline double mass_defect(const DensityField& field) {
    double worst = 0.0;
    for (int k = 0; k < field.n_nodes(); ++k) worst = std::max(worst, std::abs(mass(field, k) - 1.0));
    return worst;
}

}  // namespace kuramoto
