#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/CholmodSupport>
#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "qrm/cauchy_data.hpp"
#include "qrm/error.hpp"
#include "qrm/grid.hpp"

namespace qrm {

using SparseMatrix = Eigen::SparseMatrix<double>;
using CoefficientField = GridField;

/// Zero-order coefficient: the "peaks" surface scaled by 1/10.
inline double peaks_coefficient(double x, double y) {
    return (3.0 * (1.0 - x) * (1.0 - x) * std::exp(-x * x - (y + 1.0) * (y + 1.0)) -
            10.0 * (x / 5.0 - x * x * x - std::pow(y, 5)) * std::exp(-x * x - y * y) -
            std::exp(-(x + 1.0) * (x + 1.0) - y * y) / 3.0) /
           10.0;
}

/// u(node, k) on a grid: column k holds the field at t_{k+1}.
struct SpaceTimeField {
    SpatialGrid grid;
    TimePartition partition;
    Eigen::MatrixXd values;

    GridField slice(int k) const {
        require(k >= 1 && k <= partition.sample_count(), "forward", "time index out of range");
        GridField f(grid);
        for (std::size_t p = 0; p < f.values.size(); ++p)
            f.values[p] = values(static_cast<Eigen::Index>(p), k - 1);
        return f;
    }
    Eigen::VectorXd series(int i, int j) const {
        return values.row(static_cast<Eigen::Index>(grid.node_offset(i, j))).transpose();
    }
};

/// Per-step quantities over the whole computational domain.
struct ForwardDiagnostics {
    std::vector<double> mass;            // d_x^2 * sum of u
    std::vector<double> max_abs;         // max |u|
    std::vector<double> outer_ring_max;  // max |u| on the ring next to the outer boundary
    std::vector<double> step_residual;   // relative residual of each linear solve
};

struct ForwardSolution {
    SpaceTimeField field;  // restricted to the recording window
    ForwardDiagnostics diagnostics;
};

/// Grid with the same spacing as `measure` and half-width close to factor * R,
/// whose nodes contain those of `measure`.
inline SpatialGrid extended_grid(const SpatialGrid& measure, double factor) {
    require(factor >= 1.0, "forward", "extension factor must be >= 1");
    const int margin = static_cast<int>(std::lround((factor - 1.0) * measure.R / measure.d_x));
    return build_grid(measure.R + margin * measure.d_x, measure.N_x + 2 * margin);
}

/// Number of cells between the outer boundaries of `outer` and `inner`; rejects
/// grids whose nodes do not coincide.
inline int alignment_offset(const SpatialGrid& outer, const SpatialGrid& inner) {
    const bool same_step = std::abs(outer.d_x - inner.d_x) <= 1e-12 * inner.d_x;
    const double cells = (outer.R - inner.R) / inner.d_x;
    const int m = static_cast<int>(std::lround(cells));
    require(same_step && m >= 0 && std::abs(cells - m) <= 1e-9 && outer.N_x == inner.N_x + 2 * m,
            "forward", "measurement grid is not aligned with the forward grid");
    return m;
}

/// Backward Euler for u_t = Laplace(u) + c u on `grid` with u = 0 on its outer
/// boundary: (I - tau (L_h + c)) u^{k+1} = u^k with the 5-point Laplacian and
/// tau = d_t / substeps. The matrix is factored once. Values are recorded on
/// `window` at the partition times only. With `check_support`, an initial
/// condition reaching within 2 cells of the outer boundary is rejected.
inline ForwardSolution solve_forward(const SpatialGrid& grid, const CoefficientField& c,
                                     const GridField& f, const TimePartition& part,
                                     const SpatialGrid& window, int substeps = 1,
                                     bool check_support = true) {
    require(substeps >= 1, "forward", "substeps must be at least 1");
    require(c.grid == grid && f.grid == grid, "forward", "fields are not sampled on the forward grid");
    const int off = alignment_offset(grid, window);
    const int n = grid.N_x + 1;
    for (int i = 1; i <= n && check_support; ++i)
        for (int j = 1; j <= n; ++j) {
            const int edge_dist = std::min(std::min(i - 1, n - i), std::min(j - 1, n - j));
            require(edge_dist > 2 || f(i, j) == 0.0, "forward",
                    "initial condition is nonzero within 2 cells of the outer boundary");
        }

    const int m = grid.N_x - 1;  // interior nodes per axis
    const auto unknown = [m](int i, int j) { return (i - 2) * m + (j - 2); };
    const double h2 = grid.d_x * grid.d_x;
    const double dt = part.d_t / substeps;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(5 * m * m));
    for (int i = 2; i <= grid.N_x; ++i)
        for (int j = 2; j <= grid.N_x; ++j) {
            const int r = unknown(i, j);
            trips.emplace_back(r, r, 1.0 + dt * (4.0 / h2 - c(i, j)));
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int q = 0; q < 4; ++q) {
                const int ii = i + di[q], jj = j + dj[q];
                if (ii >= 2 && ii <= grid.N_x && jj >= 2 && jj <= grid.N_x)
                    trips.emplace_back(r, unknown(ii, jj), -dt / h2);
            }
        }
    SparseMatrix M(m * m, m * m);
    M.setFromTriplets(trips.begin(), trips.end());

    Eigen::CholmodSupernodalLLT<SparseMatrix> llt;
    Eigen::SparseLU<SparseMatrix> lu;
    llt.compute(M);
    const bool spd = llt.info() == Eigen::Success;
    if (!spd) {
        lu.compute(M);
        require(lu.info() == Eigen::Success, "forward", "time-step matrix factorization failed");
    }

    ForwardSolution out;
    out.field.grid = window;
    out.field.partition = part;
    out.field.values.resize(static_cast<Eigen::Index>(window.node_count()), part.sample_count());
    auto& diag = out.diagnostics;

    Eigen::VectorXd u(m * m);
    for (int i = 2; i <= grid.N_x; ++i)
        for (int j = 2; j <= grid.N_x; ++j) u[unknown(i, j)] = f(i, j);

    const auto record = [&](int k, const Eigen::VectorXd& state) {
        const int wn = window.N_x + 1;
        for (int i = 1; i <= wn; ++i)
            for (int j = 1; j <= wn; ++j) {
                const int gi = i + off, gj = j + off;
                const bool inner = gi >= 2 && gi <= grid.N_x && gj >= 2 && gj <= grid.N_x;
                out.field.values(static_cast<Eigen::Index>(window.node_offset(i, j)), k) =
                    inner ? state[unknown(gi, gj)] : 0.0;
            }
        diag.mass.push_back(h2 * state.sum());
        diag.max_abs.push_back(state.cwiseAbs().maxCoeff());
        double ring = 0.0;
        for (int q = 2; q <= grid.N_x; ++q) {
            ring = std::max({ring, std::abs(state[unknown(2, q)]), std::abs(state[unknown(grid.N_x, q)]),
                             std::abs(state[unknown(q, 2)]), std::abs(state[unknown(q, grid.N_x)])});
        }
        diag.outer_ring_max.push_back(ring);
    };
    record(0, u);
    diag.step_residual.push_back(0.0);

    for (int k = 1; k <= part.N_T; ++k) {
        double worst = 0.0;
        for (int s = 0; s < substeps; ++s) {
            Eigen::VectorXd next = spd ? Eigen::VectorXd(llt.solve(u)) : Eigen::VectorXd(lu.solve(u));
            const double rhs_norm = u.norm();
            const double res = rhs_norm > 0.0 ? (M * next - u).norm() / rhs_norm : (M * next).norm();
            require(res <= 1e-10, "forward",
                    "time-step solve reached relative residual " + std::to_string(res) + " > 1e-10");
            worst = std::max(worst, res);
            u = std::move(next);
        }
        diag.step_residual.push_back(worst);
        record(k, u);
    }
    return out;
}

/// F = u on the boundary of `measure`; G = outward normal derivative by the
/// one-sided stencil (3 u_0 - 4 u_1 + u_2) / (2 d_x) along the inward normal.
inline CauchyData extract_cauchy(const SpaceTimeField& field, const SpatialGrid& measure) {
    const int off = alignment_offset(field.grid, measure);
    CauchyData d = CauchyData::zeros(measure, field.partition);
    const auto row = [&](int i, int j) {
        return static_cast<Eigen::Index>(field.grid.node_offset(i + off, j + off));
    };
    for (std::size_t b = 0; b < d.dirichlet_nodes.size(); ++b) {
        const auto& node = d.dirichlet_nodes[b];
        d.F.row(static_cast<Eigen::Index>(b)) = field.values.row(row(node.i, node.j));
    }
    const double inv = 1.0 / (2.0 * measure.d_x);
    for (std::size_t b = 0; b < d.neumann_nodes.size(); ++b) {
        const auto& node = d.neumann_nodes[b];
        const int di = node.inward_di(), dj = node.inward_dj();
        d.G.row(static_cast<Eigen::Index>(b)) =
            (3.0 * field.values.row(row(node.i, node.j)) -
             4.0 * field.values.row(row(node.i + di, node.j + dj)) +
             field.values.row(row(node.i + 2 * di, node.j + 2 * dj))) *
            inv;
    }
    return d;
}

} // namespace qrm
