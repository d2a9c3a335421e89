#pragma once

// CSV emission. Floats use 17 significant digits so values round-trip exactly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuramoto/harness/experiments.hpp"

namespace kuramoto::harness {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Quotes a field if it contains a separator, quote or newline.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size()) {
        row_strings(header);
    }

    template <class... Ts>
    void row(const Ts&... values) {
        if (sizeof...(Ts) != columns_) throw std::logic_error("CsvWriter: column count mismatch");
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
        out_ << '\n';
        if (!out_) throw std::runtime_error("CsvWriter: write failed");
    }

private:
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t j = 0; j < cells.size(); ++j) out_ << (j ? "," : "") << csv_field(cells[j]);
        out_ << '\n';
    }
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(std::int64_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(const std::string& s) { return csv_field(s); }
    static std::string cell(const char* s) { return csv_field(s); }

    std::ostream& out_;
    std::size_t columns_;
};

inline const std::vector<std::string> evolve_columns{"t", "r", "phi", "free_energy", "dissipation",
                                                     "mass_drift", "min_rho", "snapshot"};
inline const std::vector<std::string> sweep_columns{"parameter", "value", "direction", "r_inf", "steps",
                                                    "residual", "wall_time", "mass_drift", "min_density", "flags"};
inline const std::vector<std::string> compare_columns{"method", "N", "r_inf", "r_stderr", "l1_error", "wall_time"};

inline void write_evolve_csv(std::ostream& out, const std::vector<EvolveRow>& rows) {
    CsvWriter w(out, evolve_columns);
    for (const auto& r : rows) w.row(r.t, r.r, r.phi, r.free_energy, r.dissipation, r.mass_drift, r.min_rho, r.snapshot);
}

inline void write_sweep_csv(std::ostream& out, const std::vector<RunRecord>& rows) {
    CsvWriter w(out, sweep_columns);
    for (const auto& r : rows)
        w.row(r.parameter, r.value, r.direction, r.r_inf, r.steps, r.residual, r.wall_time, r.mass_drift, r.min_density,
              r.flags);
}

inline void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
    CsvWriter w(out, compare_columns);
    for (const auto& r : rows) w.row(r.method, r.n, r.r_inf, r.r_stderr, r.l1_error, r.wall_time);
}

/// Snapshot file: theta, the g-averaged density, then one column per frequency node.
inline void write_snapshot_csv(std::ostream& out, const DensityField& field) {
    std::vector<std::string> header{"theta", "rho_avg"};
    for (int k = 0; k < field.n_nodes(); ++k) header.push_back("rho_" + std::to_string(k));
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    const auto avg = averaged_density(field);
    for (int i = 0; i < field.n_cells(); ++i) {
        out << format_double(field.grid().centers[static_cast<std::size_t>(i)]) << ',' << format_double(avg[static_cast<std::size_t>(i)]);
        for (int k = 0; k < field.n_nodes(); ++k) out << ',' << format_double(field(i, k));
        out << '\n';
    }
    if (!out) throw std::runtime_error("snapshot: write failed");
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace kuramoto::harness
