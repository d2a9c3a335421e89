#pragma once

// Particle Monte Carlo: Euler-Maruyama integration of the noisy finite-N system.
//
// Seed protocol: replica j samples its initial ensemble from mt19937_64 seeded with
// splitmix64(seed + j) and drives the noise from a second stream seeded with
// splitmix64(splitmix64((seed + j) ^ 0xa5a5a5a5a5a5a5a5)). Uniform variates use the top 53 bits, normal variates use Box-Muller, so streams are
// identical across standard libraries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include "kuramoto/diagnostics.hpp"
#include "kuramoto/steppers.hpp"

namespace kuramoto {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        spare_ = rad * std::sin(ang);
        has_spare_ = true;
        return rad * std::cos(ang);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct ParticleEnsemble {
    std::vector<double> theta;
    std::vector<double> omega;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return theta.size(); }
};

inline double wrap_phase(double theta) noexcept {
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    if (t >= two_pi) t = 0.0;
    return t;
}

/// Draws one natural frequency from g.
inline double sample_frequency(const FrequencyDistribution& dist, Rng& rng) {
    return std::visit(
        [&rng](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DeltaDistribution>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, UniformDistribution>) {
                const double a = std::sqrt(3.0 * d.variance);
                return -a + 2.0 * a * rng.uniform();
            } else if constexpr (std::is_same_v<T, GaussianDistribution>) {
                return std::sqrt(d.variance) * rng.normal();
            } else {
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                return sign * d.offset + std::sqrt(d.variance) * rng.normal();
            }
        },
        dist);
}

/// Phases i.i.d. from the two-Gaussian profile by inverse CDF on a 10^4-point table,
/// frequencies i.i.d. from g.
inline ParticleEnsemble sample_ensemble(const FrequencyDistribution& dist, const TwoGaussianProfile& profile,
                                        std::size_t n_particles, std::uint64_t seed) {
    if (n_particles < 1) throw std::invalid_argument("sample_ensemble: need at least one particle");
    profile.validate();
    validate(dist);
    constexpr std::size_t table = 10'000;
    const double h = two_pi / table;
    std::vector<double> cdf(table + 1, 0.0);
    for (std::size_t j = 0; j < table; ++j) {
        const double a = j * h;
        // Simpson on each table cell.
        cdf[j + 1] = cdf[j] + h / 6.0 * (profile(a) + 4.0 * profile(a + 0.5 * h) + profile(a + h));
    }
    for (double& c : cdf) c /= cdf.back();

    Rng rng(seed);
    ParticleEnsemble ens;
    ens.seed = seed;
    ens.theta.resize(n_particles);
    ens.omega.resize(n_particles);
    for (std::size_t p = 0; p < n_particles; ++p) {
        const double u = rng.uniform();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf.begin() - 1, 0,
                                                                           static_cast<std::ptrdiff_t>(table - 1)));
        const double span = cdf[j + 1] - cdf[j];
        const double frac = span > 0.0 ? (u - cdf[j]) / span : 0.5;
        ens.theta[p] = wrap_phase((static_cast<double>(j) + frac) * h);
    }
    for (std::size_t p = 0; p < n_particles; ++p) ens.omega[p] = sample_frequency(dist, rng);
    return ens;
}

/// r e^{i phi} = (1/N) sum_j e^{i theta_j}.
inline OrderParameter pmc_order_parameter(const ParticleEnsemble& ens) {
    if (ens.size() == 0) return {};
    double c = 0.0, s = 0.0;
    for (double t : ens.theta) {
        c += std::cos(t);
        s += std::sin(t);
    }
    const double inv = 1.0 / static_cast<double>(ens.size());
    return order_parameter_from({c * inv, s * inv});
}

/// theta_j += dt (w_j + K r sin(phi - theta_j) + K h r2 sin(phi2 - 2 theta_j)) + sqrt(2 D dt) Z_j.
inline void em_step_inplace(ParticleEnsemble& ens, const SolverParams& params, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("em_step: dt must be positive");
    const std::size_t n = ens.size();
    if (n == 0) return;
    double C = 0.0, S = 0.0, C2 = 0.0, S2 = 0.0;
    const bool daido = params.daido_h != 0.0;
    for (double t : ens.theta) {
        C += std::cos(t);
        S += std::sin(t);
        if (daido) {
            C2 += std::cos(2.0 * t);
            S2 += std::sin(2.0 * t);
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    C *= inv;
    S *= inv;
    C2 *= inv;
    S2 *= inv;
    const double noise = std::sqrt(2.0 * params.D * dt);
    const double kh = params.K * params.daido_h;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = ens.theta[j];
        double drift = ens.omega[j] + params.K * (S * std::cos(t) - C * std::sin(t));
        if (daido) drift += kh * (S2 * std::cos(2.0 * t) - C2 * std::sin(2.0 * t));
        double next = t + dt * drift;
        if (noise != 0.0) next += noise * rng.normal();
        ens.theta[j] = wrap_phase(next);
    }
}

inline ParticleEnsemble em_step(ParticleEnsemble ens, const SolverParams& params, double dt, Rng& rng) {
    em_step_inplace(ens, params, dt, rng);
    return ens;
}

struct PmcSettings {
    std::size_t n_particles = 10'000;
    /// Independent replicas, each seeded from seed + replica index.
    int n_runs = 1;
    /// Relaxation time before sampling starts.
    double horizon = 20.0;
    /// Samples of r per replica, spaced by sample_interval.
    int n_avg_samples = 100;
    double sample_interval = 0.2;
    /// Time step; 0 means one quarter of the semi-implicit bound on a 200-cell grid.
    double dt = 0.0;
    std::uint64_t seed = 1;
    TwoGaussianProfile initial{0.25, 0.75, 0.01};
};

struct PmcEstimate {
    double mean = 0.0;
    /// Batch-means standard error over all samples.
    double std_error = 0.0;
    std::size_t samples = 0;
    double dt = 0.0;
};

/// Default PMC time step: a quarter of dtheta / (2 C_0) with dtheta = 2 pi / 200 and C_0 = K (1 + h)
/// plus the largest frequency a collocation would see.
inline double default_pmc_dt(const SolverParams& params, const FrequencyDistribution& dist) {
    const auto quad = build_quadrature(dist, is_delta(dist) ? 1 : 10);
    const double c0 = std::max(transport_bound(quad, params), 1e-12);
    return 0.25 * (two_pi / 200.0) / (2.0 * c0);
}

inline PmcEstimate run_averaged(const SolverParams& params, const FrequencyDistribution& dist, const PmcSettings& s) {
    if (s.n_runs < 1 || s.n_avg_samples < 1) throw std::invalid_argument("run_averaged: need >= 1 run and sample");
    PmcEstimate est;
    est.dt = s.dt > 0.0 ? s.dt : default_pmc_dt(params, dist);
    std::vector<double> samples;
    for (int run = 0; run < s.n_runs; ++run) {
        const std::uint64_t seed = s.seed + static_cast<std::uint64_t>(run);
        auto ens = sample_ensemble(dist, s.initial, s.n_particles, seed);
        Rng rng(splitmix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL));
        const auto burn = static_cast<std::int64_t>(std::ceil(s.horizon / est.dt));
        for (std::int64_t j = 0; j < burn; ++j) em_step_inplace(ens, params, est.dt, rng);
        const auto gap = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(s.sample_interval / est.dt)));
        for (int a = 0; a < s.n_avg_samples; ++a) {
            for (std::int64_t j = 0; j < gap; ++j) em_step_inplace(ens, params, est.dt, rng);
            samples.push_back(pmc_order_parameter(ens).r);
        }
    }
    est.samples = samples.size();
    double sum = 0.0;
    for (double r : samples) sum += r;
    est.mean = sum / static_cast<double>(samples.size());
    // Batch means over ten batches absorbs the time correlation of consecutive samples.
    const std::size_t batches = std::min<std::size_t>(10, samples.size());
    if (batches >= 2) {
        const std::size_t len = samples.size() / batches;
        std::vector<double> means(batches, 0.0);
        for (std::size_t b = 0; b < batches; ++b) {
            for (std::size_t j = 0; j < len; ++j) means[b] += samples[b * len + j];
            means[b] /= static_cast<double>(len);
        }
        double var = 0.0;
        for (double m : means) var += (m - est.mean) * (m - est.mean);
        var /= static_cast<double>(batches - 1);
        est.std_error = std::sqrt(var / static_cast<double>(batches));
    }
    return est;
}

}  // namespace kuramoto
