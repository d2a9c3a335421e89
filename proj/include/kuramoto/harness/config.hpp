#pragma once

// JSON experiment configuration. Every key is optional and defaults as below; unknown keys
// are rejected so that a config reproduces a run exactly.
//
// {
//   "model":        {"K": 1.0, "D": 0.5, "daido_h": 0.0,
//                    "initial": {"rho1": 0.25, "rho2": 0.75, "sigma": 0.1}},
//   "distribution": {"type": "delta" | "uniform" | "gaussian" | "bimodal", "sigma_g": 0.1, "mu": 0.0},
//   "grid":         {"N": 200, "M": 10},
//   "stepper":      {"method": "isp" | "esp", "flux": "chang_cooper" | "entropic",
//                    "explicit_method": "euler" | "heun", "dt": 0 (auto), "cfl": 0.9, "t_end": 10.0,
//                    "steady_tol": 1e-9, "max_steps": 10000000, "enforce_dt_bound": true},
//   "sweep":        {"parameter": "K" | "D", "values": [], "ranges": [{"start", "stop", "step"}],
//                    "direction": "forward" | "backward" | "both", "warm_start": true,
//                    "perturbation": 1e-4, "threshold": 1e-3},
//   "output":       {"dir": "out", "cadence": 0.1, "snapshots": []},
//   "pmc":          {"particles": 10000, "runs": 1, "horizon": 20.0, "samples": 100,
//                    "sample_interval": 0.2, "dt": 0 (auto)},
//   "compare":      {"methods": ["isp"], "grids": [16, 32, 64], "reference_modes": 2047}
// }

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kuramoto/harness/experiments.hpp"

namespace kuramoto::harness {

using json = nlohmann::json;

struct ExperimentConfig {
    Problem problem;
    SolverParams params;
    StepperOptions stepper;
    TimeStepPolicy time_step;
    SweepPlan sweep;
    std::string output_dir = "out";
    double cadence = 0.1;
    std::vector<double> snapshots;
    PmcSettings pmc;
    std::vector<std::string> compare_methods{"isp"};
    std::vector<int> compare_grids{16, 32, 64};
    int reference_modes = 2047;
    std::uint64_t seed = 1;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw std::invalid_argument("config: section '" + section + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok |= key == a;
        if (!ok) throw std::invalid_argument("config: unknown key '" + section + "." + key + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

inline FrequencyDistribution parse_distribution(const json& j) {
    detail::reject_unknown(j, "distribution", {"type", "sigma_g", "mu"});
    const std::string type = j.value("type", std::string("delta"));
    const double sigma = j.value("sigma_g", 0.1);
    const double mu = j.value("mu", 0.0);
    FrequencyDistribution d;
    if (type == "delta") d = DeltaDistribution{};
    else if (type == "uniform") d = UniformDistribution{sigma};
    else if (type == "gaussian") d = GaussianDistribution{sigma};
    else if (type == "bimodal") d = BimodalDistribution{mu, sigma};
    else throw std::invalid_argument("config: unknown distribution type '" + type + "'");
    validate(d);
    return d;
}

inline json distribution_to_json(const FrequencyDistribution& d) {
    json j;
    j["type"] = std::string(distribution_name(d));
    std::visit(
        [&j](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (!std::is_same_v<T, DeltaDistribution>) j["sigma_g"] = v.variance;
            if constexpr (std::is_same_v<T, BimodalDistribution>) j["mu"] = v.offset;
        },
        d);
    return j;
}

inline ExperimentConfig parse_config(const json& root) {
    detail::reject_unknown(root, "config", {"model", "distribution", "grid", "stepper", "sweep", "output", "pmc", "compare"});
    ExperimentConfig c;
    c.problem.initial = {0.25, 0.75, 0.1};
    if (root.contains("model")) {
        const auto& m = root.at("model");
        detail::reject_unknown(m, "model", {"K", "D", "daido_h", "initial"});
        detail::read(m, "K", c.params.K);
        detail::read(m, "D", c.params.D);
        detail::read(m, "daido_h", c.params.daido_h);
        if (m.contains("initial")) {
            const auto& i = m.at("initial");
            detail::reject_unknown(i, "model.initial", {"rho1", "rho2", "sigma"});
            detail::read(i, "rho1", c.problem.initial.rho1);
            detail::read(i, "rho2", c.problem.initial.rho2);
            detail::read(i, "sigma", c.problem.initial.sigma);
        }
    }
    if (root.contains("distribution")) c.problem.dist = parse_distribution(root.at("distribution"));
    if (root.contains("grid")) {
        const auto& g = root.at("grid");
        detail::reject_unknown(g, "grid", {"N", "M"});
        detail::read(g, "N", c.problem.n_cells);
        detail::read(g, "M", c.problem.n_nodes);
    }
    if (root.contains("stepper")) {
        const auto& s = root.at("stepper");
        detail::reject_unknown(s, "stepper", {"method", "flux", "explicit_method", "dt", "cfl", "t_end", "steady_tol",
                                              "max_steps", "enforce_dt_bound"});
        if (s.contains("method")) c.stepper.kind = stepper_kind_from_string(s.at("method").get<std::string>());
        if (s.contains("flux")) c.stepper.scheme = flux_scheme_from_string(s.at("flux").get<std::string>());
        if (s.contains("explicit_method"))
            c.stepper.explicit_method = explicit_method_from_string(s.at("explicit_method").get<std::string>());
        detail::read(s, "dt", c.time_step.dt);
        detail::read(s, "cfl", c.time_step.cfl);
        detail::read(s, "t_end", c.params.t_end);
        detail::read(s, "steady_tol", c.params.steady_tol);
        if (s.contains("max_steps")) c.params.max_steps = static_cast<std::int64_t>(s.at("max_steps").get<double>());
        detail::read(s, "enforce_dt_bound", c.params.enforce_dt_bound);
    } else {
        c.params.t_end = 10.0;
    }
    if (root.contains("sweep")) {
        const auto& s = root.at("sweep");
        detail::reject_unknown(s, "sweep", {"parameter", "values", "ranges", "direction", "warm_start", "perturbation",
                                            "threshold"});
        const std::string p = s.value("parameter", std::string("K"));
        if (p == "K") c.sweep.parameter = SweepParameter::K;
        else if (p == "D") c.sweep.parameter = SweepParameter::D;
        else throw std::invalid_argument("config: sweep.parameter must be K or D");
        std::vector<double> values;
        detail::read(s, "values", values);
        std::vector<SweepRange> ranges;
        if (s.contains("ranges")) {
            for (const auto& r : s.at("ranges")) {
                detail::reject_unknown(r, "sweep.ranges[]", {"start", "stop", "step"});
                ranges.push_back({r.at("start").get<double>(), r.at("stop").get<double>(), r.at("step").get<double>()});
            }
        }
        c.sweep.values = expand_ranges(ranges, values);
        const std::string dir = s.value("direction", std::string("forward"));
        if (dir == "forward") c.sweep.direction = SweepDirection::Forward;
        else if (dir == "backward") c.sweep.direction = SweepDirection::Backward;
        else if (dir == "both") c.sweep.direction = SweepDirection::Both;
        else throw std::invalid_argument("config: sweep.direction must be forward, backward or both");
        detail::read(s, "warm_start", c.sweep.warm_start);
        detail::read(s, "perturbation", c.sweep.perturbation);
        detail::read(s, "threshold", c.sweep.threshold);
    }
    if (root.contains("output")) {
        const auto& o = root.at("output");
        detail::reject_unknown(o, "output", {"dir", "cadence", "snapshots"});
        detail::read(o, "dir", c.output_dir);
        detail::read(o, "cadence", c.cadence);
        detail::read(o, "snapshots", c.snapshots);
    }
    if (root.contains("pmc")) {
        const auto& p = root.at("pmc");
        detail::reject_unknown(p, "pmc", {"particles", "runs", "horizon", "samples", "sample_interval", "dt"});
        if (p.contains("particles")) c.pmc.n_particles = static_cast<std::size_t>(p.at("particles").get<double>());
        detail::read(p, "runs", c.pmc.n_runs);
        detail::read(p, "horizon", c.pmc.horizon);
        detail::read(p, "samples", c.pmc.n_avg_samples);
        detail::read(p, "sample_interval", c.pmc.sample_interval);
        detail::read(p, "dt", c.pmc.dt);
    }
    if (root.contains("compare")) {
        const auto& p = root.at("compare");
        detail::reject_unknown(p, "compare", {"methods", "grids", "reference_modes"});
        detail::read(p, "methods", c.compare_methods);
        detail::read(p, "grids", c.compare_grids);
        detail::read(p, "reference_modes", c.reference_modes);
    }
    c.pmc.initial = c.problem.initial;
    c.params.validate();
    c.problem.initial.validate();
    if (c.problem.n_cells < 3) throw std::invalid_argument("config: grid.N must be >= 3");
    if (c.problem.n_nodes < 1) throw std::invalid_argument("config: grid.M must be >= 1");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config '" + path + "': " + e.what());
    }
    return parse_config(root);
}

/// The resolved configuration, recorded next to every output for reruns.
inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["model"] = {{"K", c.params.K},
                  {"D", c.params.D},
                  {"daido_h", c.params.daido_h},
                  {"initial", {{"rho1", c.problem.initial.rho1}, {"rho2", c.problem.initial.rho2}, {"sigma", c.problem.initial.sigma}}}};
    j["distribution"] = distribution_to_json(c.problem.dist);
    j["grid"] = {{"N", c.problem.n_cells}, {"M", c.problem.n_nodes}};
    j["stepper"] = {{"method", to_string(c.stepper.kind)},
                    {"flux", to_string(c.stepper.scheme)},
                    {"explicit_method", c.stepper.explicit_method == ExplicitMethod::Euler ? "euler" : "heun"},
                    {"dt", c.time_step.dt},
                    {"cfl", c.time_step.cfl},
                    {"t_end", c.params.t_end},
                    {"steady_tol", c.params.steady_tol},
                    {"max_steps", c.params.max_steps},
                    {"enforce_dt_bound", c.params.enforce_dt_bound}};
    j["sweep"] = {{"parameter", to_string(c.sweep.parameter)},
                  {"values", c.sweep.values},
                  {"direction", to_string(c.sweep.direction)},
                  {"warm_start", c.sweep.warm_start},
                  {"perturbation", c.sweep.perturbation},
                  {"threshold", c.sweep.threshold}};
    j["output"] = {{"dir", c.output_dir}, {"cadence", c.cadence}, {"snapshots", c.snapshots}};
    j["pmc"] = {{"particles", c.pmc.n_particles},
                {"runs", c.pmc.n_runs},
                {"horizon", c.pmc.horizon},
                {"samples", c.pmc.n_avg_samples},
                {"sample_interval", c.pmc.sample_interval},
                {"dt", c.pmc.dt}};
    j["compare"] = {{"methods", c.compare_methods}, {"grids", c.compare_grids}, {"reference_modes", c.reference_modes}};
    return j;
}

}  // namespace kuramoto::harness
