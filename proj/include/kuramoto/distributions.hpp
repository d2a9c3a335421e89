#pragma once

// Natural-frequency distributions g(w), their Gaussian-quadrature collocation
// and the critical coupling of the incoherent state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace kuramoto {

/// Identical oscillators, g = delta_0.
struct DeltaDistribution {};

/// Uniform on [-sqrt(3 variance), sqrt(3 variance)].
struct UniformDistribution {
    double variance = 0.1;
};

/// Centered normal law with the given variance.
struct GaussianDistribution {
    double variance = 0.1;
};

/// Equal mixture of two normal laws centered at +offset and -offset.
struct BimodalDistribution {
    double offset = 0.0;
    double variance = 0.001;
};

using FrequencyDistribution =
    std::variant<DeltaDistribution, UniformDistribution, GaussianDistribution, BimodalDistribution>;

/// Collocation nodes w_k and probability weights g_k; g is replaced by sum_k g_k delta_{w_k}.
struct FrequencyQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }

    double max_abs_node() const noexcept {
        double m = 0.0;
        for (double w : nodes) m = std::max(m, std::abs(w));
        return m;
    }
};

inline std::string_view distribution_name(const FrequencyDistribution& dist) {
    return std::visit(
        [](const auto& d) -> std::string_view {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DeltaDistribution>) return "delta";
            else if constexpr (std::is_same_v<T, UniformDistribution>) return "uniform";
            else if constexpr (std::is_same_v<T, GaussianDistribution>) return "gaussian";
            else return "bimodal";
        },
        dist);
}

inline bool is_delta(const FrequencyDistribution& dist) noexcept {
    return std::holds_alternative<DeltaDistribution>(dist);
}

inline void validate(const FrequencyDistribution& dist) {
    std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (!std::is_same_v<T, DeltaDistribution>) {
                if (!(d.variance > 0.0) || !std::isfinite(d.variance))
                    throw std::invalid_argument("frequency distribution: variance must be positive");
            }
        },
        dist);
}

namespace detail {

inline double normal_pdf(double x, double mean, double variance) {
    const double z = x - mean;
    return std::exp(-z * z / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

// (p-1)!! for even p, the p-th moment of a standard normal variable.
inline double standard_normal_moment(int p) {
    if (p < 0 || p % 2 != 0) return 0.0;
    double m = 1.0;
    for (int j = p - 1; j > 1; j -= 2) m *= j;
    return m;
}

inline double binomial(int n, int k) {
    double c = 1.0;
    for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
    return c;
}

// Golub-Welsch for a symmetric weight with zero recurrence diagonal. beta[n-1] is the
// monic recurrence coefficient beta_n, n = 1..m-1; the weight is assumed normalized.
inline FrequencyQuadrature symmetric_gauss_rule(int m, const std::vector<double>& beta) {
    FrequencyQuadrature q;
    if (m == 1) {
        q.nodes = {0.0};
        q.weights = {1.0};
        return q;
    }
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sub(m - 1);
    for (int n = 0; n < m - 1; ++n) sub(n) = std::sqrt(beta[static_cast<std::size_t>(n)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw std::runtime_error("Golub-Welsch eigensolve failed");

    q.nodes.resize(static_cast<std::size_t>(m));
    q.weights.resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        q.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
        const double v0 = solver.eigenvectors()(0, k);
        q.weights[static_cast<std::size_t>(k)] = v0 * v0;
    }
    // Enforce the exact mirror symmetry of the rule.
    for (int k = 0; k < m / 2; ++k) {
        const auto lo = static_cast<std::size_t>(k);
        const auto hi = static_cast<std::size_t>(m - 1 - k);
        const double x = 0.5 * (q.nodes[hi] - q.nodes[lo]);
        const double w = 0.5 * (q.weights[hi] + q.weights[lo]);
        q.nodes[lo] = -x;
        q.nodes[hi] = x;
        q.weights[lo] = w;
        q.weights[hi] = w;
    }
    if (m % 2 == 1) q.nodes[static_cast<std::size_t>(m / 2)] = 0.0;
    double total = 0.0;
    for (double w : q.weights) total += w;
    for (double& w : q.weights) w /= total;
    return q;
}

/// Gauss-Legendre rule for the uniform probability density on [-1, 1].
inline FrequencyQuadrature gauss_legendre(int m) {
    std::vector<double> beta;
    for (int n = 1; n < m; ++n) beta.push_back(static_cast<double>(n) * n / (4.0 * n * n - 1.0));
    return symmetric_gauss_rule(m, beta);
}

/// Gauss-Hermite rule for the standard normal density (probabilists' convention).
inline FrequencyQuadrature gauss_hermite(int m) {
    std::vector<double> beta;
    for (int n = 1; n < m; ++n) beta.push_back(static_cast<double>(n));
    return symmetric_gauss_rule(m, beta);
}

}  // namespace detail

/// Probability density g(w).
inline double density(const FrequencyDistribution& dist, double w) {
    return std::visit(
        [w](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DeltaDistribution>) {
                return w == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
            } else if constexpr (std::is_same_v<T, UniformDistribution>) {
                const double a = std::sqrt(3.0 * d.variance);
                return std::abs(w) <= a ? 1.0 / (2.0 * a) : 0.0;
            } else if constexpr (std::is_same_v<T, GaussianDistribution>) {
                return detail::normal_pdf(w, 0.0, d.variance);
            } else {
                return 0.5 * detail::normal_pdf(w, d.offset, d.variance) +
                       0.5 * detail::normal_pdf(w, -d.offset, d.variance);
            }
        },
        dist);
}

/// Closed-form moment int w^p g(w) dw.
inline double moment(const FrequencyDistribution& dist, int p) {
    if (p < 0) throw std::invalid_argument("moment: negative order");
    return std::visit(
        [p](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DeltaDistribution>) {
                return p == 0 ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, UniformDistribution>) {
                if (p % 2 != 0) return 0.0;
                return std::pow(std::sqrt(3.0 * d.variance), p) / (p + 1.0);
            } else if constexpr (std::is_same_v<T, GaussianDistribution>) {
                return detail::standard_normal_moment(p) * std::pow(d.variance, 0.5 * p);
            } else {
                if (p % 2 != 0) return 0.0;
                // E[(mu + s Z)^p]; the -mu half gives the same value for even p.
                double m = 0.0;
                for (int k = 0; k <= p; k += 2)
                    m += detail::binomial(p, k) * std::pow(d.offset, p - k) *
                         std::pow(d.variance, 0.5 * k) * detail::standard_normal_moment(k);
                return m;
            }
        },
        dist);
}

/// Gaussian-quadrature collocation of g with M nodes. Delta always yields the single node 0;
/// the bimodal law takes M/2 Gauss-Hermite nodes around each mode and needs even M.
inline FrequencyQuadrature build_quadrature(const FrequencyDistribution& dist, int m) {
    if (m < 1) throw std::invalid_argument("build_quadrature: M must be >= 1");
    validate(dist);
    return std::visit(
        [m](const auto& d) -> FrequencyQuadrature {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DeltaDistribution>) {
                return FrequencyQuadrature{{0.0}, {1.0}};
            } else if constexpr (std::is_same_v<T, UniformDistribution>) {
                auto q = detail::gauss_legendre(m);
                const double a = std::sqrt(3.0 * d.variance);
                for (double& w : q.nodes) w *= a;
                return q;
            } else if constexpr (std::is_same_v<T, GaussianDistribution>) {
                auto q = detail::gauss_hermite(m);
                const double s = std::sqrt(d.variance);
                for (double& w : q.nodes) w *= s;
                return q;
            } else {
                if (m % 2 != 0) throw std::invalid_argument("build_quadrature: bimodal needs an even M");
                const auto half = detail::gauss_hermite(m / 2);
                const double s = std::sqrt(d.variance);
                std::vector<std::pair<double, double>> pts;
                for (std::size_t j = 0; j < half.size(); ++j) {
                    pts.emplace_back(-d.offset + s * half.nodes[j], 0.5 * half.weights[j]);
                    pts.emplace_back(d.offset + s * half.nodes[j], 0.5 * half.weights[j]);
                }
                std::sort(pts.begin(), pts.end());
                FrequencyQuadrature q;
                for (auto [w, g] : pts) {
                    q.nodes.push_back(w);
                    q.weights.push_back(g);
                }
                return q;
            }
        },
        dist);
}

/// Largest |sum_k w_k^p g_k - int w^p g| over p = 0..degree.
inline double exactness_check(const FrequencyQuadrature& quad, const FrequencyDistribution& dist,
                              int degree) {
    if (degree < 0) throw std::invalid_argument("exactness_check: negative degree");
    double worst = 0.0;
    for (int p = 0; p <= degree; ++p) {
        double s = 0.0;
        for (std::size_t k = 0; k < quad.size(); ++k) s += std::pow(quad.nodes[k], p) * quad.weights[k];
        worst = std::max(worst, std::abs(s - moment(dist, p)));
    }
    return worst;
}

struct CriticalCoupling {
    double value = 0.0;
    /// Set for the bimodal law: the value is only where the incoherent state loses
    /// linear stability, the observed transition may happen elsewhere.
    bool linear_threshold_only = false;
};

/// K_c(D) = 2 / int g(D w) / (w^2 + 1) dw, evaluated after the change of variables
/// x = D w as 2 / int g(x) D / (x^2 + D^2) dx.
inline CriticalCoupling critical_coupling(const FrequencyDistribution& dist, double diffusion) {
    if (!(diffusion > 0.0)) throw std::invalid_argument("critical_coupling: D must be positive");
    validate(dist);
    if (is_delta(dist)) return {2.0 * diffusion, false};

    auto integrand = [&](double x) { return density(dist, x) * diffusion / (x * x + diffusion * diffusion); };

    // Breakpoints resolve the kinks of the uniform law and the narrow peaks of the mixtures.
    std::vector<double> cuts{0.0};
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDistribution>) {
                const double a = std::sqrt(3.0 * d.variance);
                cuts.push_back(-a);
                cuts.push_back(a);
            } else if constexpr (std::is_same_v<T, GaussianDistribution> || std::is_same_v<T, BimodalDistribution>) {
                double center = 0.0;
                if constexpr (std::is_same_v<T, BimodalDistribution>) center = d.offset;
                const double s = std::sqrt(d.variance);
                for (double c : {center, -center})
                    for (double j : {-40.0, -16.0, -8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0, 16.0, 40.0})
                        cuts.push_back(c + j * s);
            }
        },
        dist);
    for (double j : {-8.0, -4.0, -2.0, -1.0, 1.0, 2.0, 4.0, 8.0}) cuts.push_back(j * diffusion);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Clip to the support where g is not negligible.
    double lo = cuts.front();
    double hi = cuts.back();
    if (std::holds_alternative<UniformDistribution>(dist)) {
        const double a = std::sqrt(3.0 * std::get<UniformDistribution>(dist).variance);
        lo = -a;
        hi = a;
    }
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
        const double a = std::max(cuts[j], lo);
        const double b = std::min(cuts[j + 1], hi);
        if (b <= a) continue;
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 15, 1e-13, &err);
    }
    return {2.0 / total, std::holds_alternative<BimodalDistribution>(dist)};
}

/// C_0 = max_k |w_k| + K, the discrete stand-in for |supp g| + K.
inline double velocity_bound(const FrequencyQuadrature& quad, double coupling) {
    return quad.max_abs_node() + coupling;
}

}  // namespace kuramoto
