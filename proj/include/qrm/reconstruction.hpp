#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qrm/csv.hpp"
#include "qrm/error.hpp"
#include "qrm/forward.hpp"
#include "qrm/grid.hpp"
#include "qrm/quasi_reversibility.hpp"
#include "qrm/sources.hpp"
#include "qrm/time_basis.hpp"

namespace qrm {

/// u(x, t) = sum_n U_n(x) Psi_n(t) on the coefficient grid.
inline GridField synthesize(const QrmSolution& sol, const TimeBasis& basis, double t) {
    require(sol.index.N() == basis.N(), "reconstruct", "basis size does not match the coefficient field");
    require(t >= 0.0 && t <= basis.partition().T, "reconstruct", "time outside [0, T]");
    std::vector<double> psi(static_cast<std::size_t>(basis.N()));
    for (int n = 1; n <= basis.N(); ++n) psi[static_cast<std::size_t>(n - 1)] = basis.value(n, t);
    GridField out(sol.grid);
    for (int i = 1; i <= sol.grid.N_x + 1; ++i)
        for (int j = 1; j <= sol.grid.N_x + 1; ++j) {
            double acc = 0.0;
            for (int n = 1; n <= basis.N(); ++n) acc += sol.coefficient(i, j, n) * psi[static_cast<std::size_t>(n - 1)];
            out(i, j) = acc;
        }
    return out;
}

struct Reconstruction {
    GridField f_comp;
};

inline Reconstruction reconstruct(const QrmSolution& sol, const TimeBasis& basis) {
    return {synthesize(sol, basis, 0.0)};
}

struct MetricsRow {
    std::string region = "all";  // "all", "left" (x < 0) or "right" (x > 0)
    double noise_level = 0.0;
    double max_true = 0.0;
    double max_comp = 0.0;
    double error_rel = 0.0;
    Point2 pos_true;
    Point2 pos_comp;
    double dis_err = 0.0;
    double rel_l2 = 0.0;
};

namespace detail {

struct Argmax {
    int i = 0, j = 0;
    double value = 0.0;
};

// Row-major scan with strict comparison keeps the lexicographically smallest (i, j) on ties.
inline Argmax argmax(const GridField& f, const std::function<bool(double)>& keep_x) {
    Argmax best;
    bool found = false;
    for (int i = 1; i <= f.grid.N_x + 1; ++i) {
        if (!keep_x(f.grid.x(i))) continue;
        for (int j = 1; j <= f.grid.N_x + 1; ++j)
            if (!found || f(i, j) > best.value) {
                best = {i, j, f(i, j)};
                found = true;
            }
    }
    require(found, "metrics", "empty metrics region");
    return best;
}

inline MetricsRow region_metrics(const GridField& f_comp, const GridField& f_true,
                                 const std::function<bool(double)>& keep_x, const std::string& region) {
    const auto t = argmax(f_true, keep_x);
    const auto c = argmax(f_comp, keep_x);
    double diff2 = 0.0, true2 = 0.0;
    for (int i = 1; i <= f_true.grid.N_x + 1; ++i) {
        if (!keep_x(f_true.grid.x(i))) continue;
        for (int j = 1; j <= f_true.grid.N_x + 1; ++j) {
            const double d = f_comp(i, j) - f_true(i, j);
            diff2 += d * d;
            true2 += f_true(i, j) * f_true(i, j);
        }
    }
    require(true2 > 0.0 && t.value > 0.0, "metrics", "true source vanishes; relative error undefined");
    const auto& g = f_true.grid;
    MetricsRow row;
    row.region = region;
    row.max_true = t.value;
    row.max_comp = c.value;
    row.error_rel = std::abs(c.value - t.value) / t.value;
    row.pos_true = {g.x(t.i), g.y(t.j)};
    row.pos_comp = {g.x(c.i), g.y(c.j)};
    row.dis_err = std::hypot(row.pos_comp.x - row.pos_true.x, row.pos_comp.y - row.pos_true.y);
    row.rel_l2 = std::sqrt(diff2 / true2);
    return row;
}

} // namespace detail

/// One row for single-inclusion sources, left then right rows for two bumps.
inline std::vector<MetricsRow> metrics(const GridField& f_comp, const GridField& f_true, const SourceSpec& spec) {
    require(f_comp.grid == f_true.grid, "metrics", "fields live on different grids");
    if (spec.kind == SourceKind::two_bumps)
        return {detail::region_metrics(f_comp, f_true, [](double x) { return x < 0.0; }, "left"),
                detail::region_metrics(f_comp, f_true, [](double x) { return x > 0.0; }, "right")};
    return {detail::region_metrics(f_comp, f_true, [](double) { return true; }, "all")};
}

inline const char* metrics_header() {
    return "noise_level,max_true,max_comp,error_rel,pos_true_x,pos_true_y,pos_comp_x,pos_comp_y,dis_err,rel_l2";
}

inline std::string metrics_line(const MetricsRow& r) {
    std::string s = fmt_double(r.noise_level);
    for (double v : {r.max_true, r.max_comp, r.error_rel, r.pos_true.x, r.pos_true.y, r.pos_comp.x,
                     r.pos_comp.y, r.dis_err, r.rel_l2})
        s += ',' + fmt_double(v);
    return s;
}

inline void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "io", "cannot open " + path);
    os << metrics_header() << '\n';
    for (const auto& r : rows) os << metrics_line(r) << '\n';
}

struct TruncationRow {
    int N = 0;
    double rel_l2 = 0.0;
    double rel_max = 0.0;  // max |error| / max |u(., 0)|
    GridField error;       // partial sum minus u(., 0)
};

/// Projects a forward field onto the first N basis functions at every node and
/// compares the partial sum at t = 0 with the field's first time slice.
inline TruncationRow truncation_error(const SpaceTimeField& field, const TimeBasis& basis) {
    require(field.partition == basis.partition(), "reconstruct", "field and basis use different time partitions");
    const Eigen::MatrixXd& psi = basis.samples();
    const Eigen::VectorXd& w = basis.weights();
    Eigen::VectorXd psi0(basis.N());
    for (int n = 1; n <= basis.N(); ++n) psi0[n - 1] = basis.value(n, 0.0);
    // Coefficients for all nodes at once: u_n(x) = sum_k w_k u(x, t_k) Psi_n(t_k).
    const Eigen::MatrixXd coeff = field.values * w.asDiagonal() * psi.transpose();
    const Eigen::VectorXd partial = coeff * psi0;

    TruncationRow row;
    row.N = basis.N();
    row.error = GridField(field.grid);
    double diff2 = 0.0, ref2 = 0.0, diff_max = 0.0, ref_max = 0.0;
    for (Eigen::Index p = 0; p < field.values.rows(); ++p) {
        const double ref = field.values(p, 0);
        const double d = partial[p] - ref;
        row.error.values[static_cast<std::size_t>(p)] = d;
        diff2 += d * d;
        ref2 += ref * ref;
        diff_max = std::max(diff_max, std::abs(d));
        ref_max = std::max(ref_max, std::abs(ref));
    }
    require(ref2 > 0.0, "reconstruct", "field vanishes at t = 0");
    row.rel_l2 = std::sqrt(diff2 / ref2);
    row.rel_max = diff_max / ref_max;
    return row;
}

inline std::vector<TruncationRow> truncation_report(const SpaceTimeField& field, const std::vector<int>& orders,
                                                    TimeQuadrature quad = TimeQuadrature::span_exact) {
    std::vector<TruncationRow> rows;
    for (int N : orders) rows.push_back(truncation_error(field, build_basis(N, field.partition, quad)));
    return rows;
}

inline void write_truncation_csv(const std::vector<TruncationRow>& rows, const std::string& path) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "io", "cannot open " + path);
    os << "N,rel_l2,rel_max\n";
    for (const auto& r : rows) os << r.N << ',' << fmt_double(r.rel_l2) << ',' << fmt_double(r.rel_max) << '\n';
}

} // namespace qrm
