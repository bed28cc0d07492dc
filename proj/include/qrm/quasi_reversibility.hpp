#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/CholmodSupport>
#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "qrm/csv.hpp"
#include "qrm/error.hpp"
#include "qrm/grid.hpp"
#include "qrm/projection.hpp"

namespace qrm {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discrete operators over the flat vector U = (u_n(x_i, y_j)) in FlatIndex order.
/// All three are square of size (N_x+1)^2 N with nonzero rows for interior
/// nodes 2 <= i, j <= N_x only.
struct CoefficientSystem {
    SpatialGrid grid;
    int N = 0;
    double epsilon = 0.0;
    FlatIndex index{2, 1};
    SparseMatrix L_op;   // Laplacian + c - S
    SparseMatrix Dx_op;  // forward difference in x
    SparseMatrix Dy_op;  // forward difference in y
};

/// Row (i, j, m): sum_n [delta_mn (-4/d_x^2 + c_ij) - s_mn] u_n(i, j) plus
/// u_m / d_x^2 at the four neighbours.
inline CoefficientSystem assemble(const SpatialGrid& grid, const GridField& c, const Eigen::MatrixXd& S,
                                  double epsilon) {
    require(epsilon > 0.0, "qrm", "regularization parameter must be positive");
    require(c.grid == grid, "qrm", "coefficient field is not sampled on the inversion grid");
    require(S.rows() == S.cols() && S.rows() >= 1, "qrm", "coupling matrix must be square");
    const int N = static_cast<int>(S.rows());
    CoefficientSystem sys;
    sys.grid = grid;
    sys.N = N;
    sys.epsilon = epsilon;
    sys.index = FlatIndex(grid.N_x, N);
    const auto& ix = sys.index;
    const auto size = static_cast<Eigen::Index>(ix.size());
    const double h = grid.d_x, h2 = h * h;
    const std::size_t interior = static_cast<std::size_t>(grid.N_x - 1) * (grid.N_x - 1) * N;

    std::vector<Eigen::Triplet<double>> tl, tx, ty;
    tl.reserve(interior * static_cast<std::size_t>(N + 4));
    tx.reserve(interior * 2);
    ty.reserve(interior * 2);
    for (int i = 2; i <= grid.N_x; ++i)
        for (int j = 2; j <= grid.N_x; ++j)
            for (int m = 1; m <= N; ++m) {
                const auto row = static_cast<Eigen::Index>(ix.offset(i, j, m));
                for (int n = 1; n <= N; ++n) {
                    const double v = (m == n ? -4.0 / h2 + c(i, j) : 0.0) - S(m - 1, n - 1);
                    if (v != 0.0) tl.emplace_back(row, static_cast<Eigen::Index>(ix.offset(i, j, n)), v);
                }
                tl.emplace_back(row, static_cast<Eigen::Index>(ix.offset(i + 1, j, m)), 1.0 / h2);
                tl.emplace_back(row, static_cast<Eigen::Index>(ix.offset(i - 1, j, m)), 1.0 / h2);
                tl.emplace_back(row, static_cast<Eigen::Index>(ix.offset(i, j + 1, m)), 1.0 / h2);
                tl.emplace_back(row, static_cast<Eigen::Index>(ix.offset(i, j - 1, m)), 1.0 / h2);

                tx.emplace_back(row, static_cast<Eigen::Index>(ix.offset(i + 1, j, m)), 1.0 / h);
                tx.emplace_back(row, row, -1.0 / h);
                ty.emplace_back(row, static_cast<Eigen::Index>(ix.offset(i, j + 1, m)), 1.0 / h);
                ty.emplace_back(row, row, -1.0 / h);
            }
    sys.L_op.resize(size, size);
    sys.L_op.setFromTriplets(tl.begin(), tl.end());
    sys.Dx_op.resize(size, size);
    sys.Dx_op.setFromTriplets(tx.begin(), tx.end());
    sys.Dy_op.resize(size, size);
    sys.Dy_op.setFromTriplets(ty.begin(), ty.end());
    return sys;
}

/// Data-independent part of the constrained least-squares problem.
///
/// Boundary unknowns are fixed to F_tilde and eliminated. The remaining free
/// (interior) unknowns x minimise |A x - b|^2 where the rows of A are, in order:
///   d_x * L                 (objective d_x^2 |L U|^2)
///   sqrt(eps) d_x * I       (eps d_x^2 |U|^2 over interior nodes)
///   eps d_x * Dx, eps d_x * Dy
///   w_N * normal-derivative stencil at non-corner boundary nodes, with row
///   weight w_N = neumann_scale * d_x (objective w_N^2, the same d_x^2 scale as
///   the other terms).
/// A_fixed holds the same rows restricted to boundary columns; b = r - A_fixed F.
struct ConstraintOperator {
    SpatialGrid grid;
    int N = 0;
    double epsilon = 0.0;
    double neumann_weight = 0.0;           // row weight of the Neumann block
    std::vector<std::size_t> free_cols;    // free column -> flat offset
    std::vector<std::size_t> fixed_cols;   // fixed column -> flat offset
    std::vector<BoundaryNode> dirichlet_nodes;
    std::vector<BoundaryNode> neumann_nodes;
    SparseMatrix A;
    SparseMatrix A_fixed;
    Eigen::Index rows_L = 0, rows_zero = 0, rows_dx = 0, rows_dy = 0, rows_neumann = 0;

    Eigen::Index neumann_begin() const { return rows_L + rows_zero + rows_dx + rows_dy; }
};

inline std::shared_ptr<const ConstraintOperator> build_constraint_operator(const CoefficientSystem& sys,
                                                                           double neumann_scale = 1.0) {
    require(neumann_scale >= 0.0, "qrm", "Neumann weight must be non-negative");
    auto op = std::make_shared<ConstraintOperator>();
    const auto& g = sys.grid;
    const int N = sys.N;
    op->grid = g;
    op->N = N;
    op->epsilon = sys.epsilon;
    op->neumann_weight = neumann_scale * g.d_x;
    const NodeSets sets = classify_nodes(g);
    op->dirichlet_nodes = sets.boundary;
    op->neumann_nodes = sets.neumann();

    const std::size_t total = sys.index.size();
    std::vector<long> col_of(total, -1);  // >= 0 free column, <= -2 fixed column -(c+2)
    for (const auto& node : sets.interior)
        for (int n = 1; n <= N; ++n) {
            col_of[sys.index.offset(node.i, node.j, n)] = static_cast<long>(op->free_cols.size());
            op->free_cols.push_back(sys.index.offset(node.i, node.j, n));
        }
    for (const auto& node : sets.boundary)
        for (int n = 1; n <= N; ++n) {
            col_of[sys.index.offset(node.i, node.j, n)] = -2 - static_cast<long>(op->fixed_cols.size());
            op->fixed_cols.push_back(sys.index.offset(node.i, node.j, n));
        }

    std::vector<Eigen::Triplet<double>> tf, tb;
    Eigen::Index row = 0;
    const auto emit = [&](Eigen::Index r, std::size_t flat, double v) {
        const long c = col_of[flat];
        if (c >= 0) tf.emplace_back(r, c, v);
        else tb.emplace_back(r, -2 - c, v);
    };
    const auto emit_block = [&](const SparseMatrix& M, double w) {
        // Interior rows, in free-column order.
        const Eigen::SparseMatrix<double, Eigen::RowMajor> R = M;
        Eigen::Index count = 0;
        for (std::size_t f = 0; f < op->free_cols.size(); ++f) {
            const auto src = static_cast<Eigen::Index>(op->free_cols[f]);
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, src); it; ++it)
                emit(row + static_cast<Eigen::Index>(f), static_cast<std::size_t>(it.col()), w * it.value());
            ++count;
        }
        row += count;
        return count;
    };

    const double h = g.d_x;
    op->rows_L = emit_block(sys.L_op, h);
    for (std::size_t f = 0; f < op->free_cols.size(); ++f)
        tf.emplace_back(row + static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(f), std::sqrt(sys.epsilon) * h);
    op->rows_zero = static_cast<Eigen::Index>(op->free_cols.size());
    row += op->rows_zero;
    op->rows_dx = emit_block(sys.Dx_op, sys.epsilon * h);
    op->rows_dy = emit_block(sys.Dy_op, sys.epsilon * h);

    const double wn = op->neumann_weight;
    const double inv = 1.0 / (2.0 * h);
    for (const auto& node : op->neumann_nodes) {
        const int di = node.inward_di(), dj = node.inward_dj();
        for (int n = 1; n <= N; ++n) {
            emit(row, sys.index.offset(node.i, node.j, n), wn * 3.0 * inv);
            emit(row, sys.index.offset(node.i + di, node.j + dj, n), -wn * 4.0 * inv);
            emit(row, sys.index.offset(node.i + 2 * di, node.j + 2 * dj, n), wn * inv);
            ++row;
        }
    }
    op->rows_neumann = static_cast<Eigen::Index>(op->neumann_nodes.size()) * N;

    op->A.resize(row, static_cast<Eigen::Index>(op->free_cols.size()));
    op->A.setFromTriplets(tf.begin(), tf.end());
    op->A_fixed.resize(row, static_cast<Eigen::Index>(op->fixed_cols.size()));
    op->A_fixed.setFromTriplets(tb.begin(), tb.end());
    return op;
}

/// Constrained least-squares problem for one data set.
struct ConstrainedSystem {
    std::shared_ptr<const ConstraintOperator> op;
    Eigen::VectorXd rhs;          // b
    Eigen::VectorXd fixed_values; // F_tilde in fixed-column order
};

/// Optional `equation_source` H (full flat layout) turns the equation rows into
/// L U = H; only its interior entries are used. Empty means H = 0.
inline ConstrainedSystem apply_constraints(std::shared_ptr<const ConstraintOperator> op,
                                           const IndirectData& data,
                                           const Eigen::VectorXd& equation_source = Eigen::VectorXd()) {
    require(op != nullptr, "qrm", "missing constraint operator");
    require(data.grid == op->grid && data.N == op->N, "qrm",
            "indirect data dimensions do not match the coefficient system");
    require(static_cast<std::size_t>(data.F_tilde.rows()) == op->dirichlet_nodes.size() &&
                static_cast<std::size_t>(data.G_tilde.rows()) == op->neumann_nodes.size() &&
                data.F_tilde.cols() == op->N && data.G_tilde.cols() == op->N,
            "qrm", "indirect data dimensions do not match the coefficient system");
    ConstrainedSystem cs;
    cs.op = op;
    const int N = op->N;
    cs.fixed_values.resize(static_cast<Eigen::Index>(op->fixed_cols.size()));
    for (std::size_t b = 0; b < op->dirichlet_nodes.size(); ++b)
        for (int n = 0; n < N; ++n)
            cs.fixed_values[static_cast<Eigen::Index>(b * N + n)] = data.F_tilde(static_cast<Eigen::Index>(b), n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(op->A.rows());
    const double wn = op->neumann_weight;
    for (std::size_t b = 0; b < op->neumann_nodes.size(); ++b)
        for (int n = 0; n < N; ++n)
            r[op->neumann_begin() + static_cast<Eigen::Index>(b * N + n)] =
                wn * data.G_tilde(static_cast<Eigen::Index>(b), n);
    if (equation_source.size() > 0) {
        require(static_cast<std::size_t>(equation_source.size()) == FlatIndex(op->grid.N_x, N).size(), "qrm",
                "equation source has the wrong length");
        for (std::size_t f = 0; f < op->free_cols.size(); ++f)
            r[static_cast<Eigen::Index>(f)] =
                op->grid.d_x * equation_source[static_cast<Eigen::Index>(op->free_cols[f])];
    }
    cs.rhs = r - op->A_fixed * cs.fixed_values;
    return cs;
}

inline ConstrainedSystem apply_constraints(const CoefficientSystem& sys, const IndirectData& data,
                                           double neumann_scale = 1.0) {
    return apply_constraints(build_constraint_operator(sys, neumann_scale), data);
}

enum class SolverKind { direct, iterative };

inline const char* to_string(SolverKind s) { return s == SolverKind::direct ? "direct" : "iterative"; }

struct SolverOptions {
    SolverKind kind = SolverKind::direct;
    double tolerance = 1e-9;   // iterative: relative normal-equation residual
    int max_iterations = 100000;
};

/// Terms of the discrete objective evaluated at the minimiser.
struct ResidualNorms {
    double equation = 0.0;    // d_x^2 |L U|^2
    double zero_order = 0.0;  // eps d_x^2 |U|^2 (interior)
    double gradient = 0.0;    // eps^2 d_x^2 (|Dx U|^2 + |Dy U|^2)
    double neumann = 0.0;     // w_N |normal derivative - G_tilde|^2
    double total() const { return equation + zero_order + gradient + neumann; }
};

struct SolverReport {
    std::string method;
    int iterations = 0;
    double relative_residual = 0.0;
    double factor_seconds = 0.0;
    double solve_seconds = 0.0;
    bool reused_factorization = false;
};

struct QrmSolution {
    FlatIndex index{2, 1};
    SpatialGrid grid;
    Eigen::VectorXd U;  // full flat vector, boundary entries equal F_tilde
    ResidualNorms residuals;
    SolverReport report;

    /// Coefficient n (1-based) at node (i, j).
    double coefficient(int i, int j, int n) const {
        return U[static_cast<Eigen::Index>(index.offset(i, j, n))];
    }
};

/// Objective terms of a full flat vector U for a given constrained system.
inline ResidualNorms evaluate_objective(const ConstrainedSystem& cs, const Eigen::VectorXd& x) {
    const auto& op = *cs.op;
    const Eigen::VectorXd r = op.A * x - cs.rhs;
    ResidualNorms out;
    Eigen::Index at = 0;
    out.equation = r.segment(at, op.rows_L).squaredNorm();
    at += op.rows_L;
    out.zero_order = r.segment(at, op.rows_zero).squaredNorm();
    at += op.rows_zero;
    out.gradient = r.segment(at, op.rows_dx + op.rows_dy).squaredNorm();
    at += op.rows_dx + op.rows_dy;
    out.neumann = r.segment(at, op.rows_neumann).squaredNorm();
    return out;
}

/// Solves the constrained least-squares problem. The direct path factors the
/// normal equations A^T A (SPD for eps > 0) with a supernodal Cholesky and keeps
/// the factor for later data sets sharing the same operator. The iterative path
/// runs conjugate gradients on the least-squares form.
class QrmSolver {
public:
    explicit QrmSolver(SolverOptions opts = {}) : opts_(opts) {}

    const SolverOptions& options() const { return opts_; }

    QrmSolution solve(const ConstrainedSystem& cs) {
        require(cs.op != nullptr, "qrm", "missing constraint operator");
        const auto& op = *cs.op;
        QrmSolution sol;
        sol.grid = op.grid;
        sol.index = FlatIndex(op.grid.N_x, op.N);
        Eigen::VectorXd x;
        const auto t0 = std::chrono::steady_clock::now();
        if (opts_.kind == SolverKind::direct) {
            sol.report.method = "cholmod-supernodal-normal-equations";
            if (factored_ != cs.op) {
                const SparseMatrix At = op.A.transpose();
                const SparseMatrix H = (At * op.A).pruned().triangularView<Eigen::Lower>();
                llt_ = std::make_unique<Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower>>();
                llt_->compute(H);
                require(llt_->info() == Eigen::Success, "qrm",
                        "Cholesky factorization of the normal equations failed (matrix not positive definite)");
                factored_ = cs.op;
            } else {
                sol.report.reused_factorization = true;
            }
            const auto t1 = std::chrono::steady_clock::now();
            sol.report.factor_seconds = std::chrono::duration<double>(t1 - t0).count();
            const Eigen::VectorXd atb = op.A.transpose() * cs.rhs;
            x = llt_->solve(atb);
            require(llt_->info() == Eigen::Success, "qrm", "Cholesky solve failed");
            const Eigen::VectorXd g = op.A.transpose() * (op.A * x - cs.rhs);
            sol.report.relative_residual = atb.norm() > 0.0 ? g.norm() / atb.norm() : g.norm();
            sol.report.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
        } else {
            sol.report.method = "lscg";
            Eigen::LeastSquaresConjugateGradient<SparseMatrix> cg;
            cg.setTolerance(opts_.tolerance);
            cg.setMaxIterations(opts_.max_iterations);
            cg.compute(op.A);
            x = cg.solve(cs.rhs);
            sol.report.iterations = static_cast<int>(cg.iterations());
            sol.report.relative_residual = cg.error();
            sol.report.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (cg.info() != Eigen::Success)
                throw Error("qrm", "conjugate gradients did not converge in " + std::to_string(cg.iterations()) +
                                       " iterations; achieved relative residual " + std::to_string(cg.error()));
        }
        sol.residuals = evaluate_objective(cs, x);
        sol.U = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sol.index.size()));
        for (std::size_t f = 0; f < op.free_cols.size(); ++f)
            sol.U[static_cast<Eigen::Index>(op.free_cols[f])] = x[static_cast<Eigen::Index>(f)];
        for (std::size_t f = 0; f < op.fixed_cols.size(); ++f)
            sol.U[static_cast<Eigen::Index>(op.fixed_cols[f])] = cs.fixed_values[static_cast<Eigen::Index>(f)];
        return sol;
    }

private:
    SolverOptions opts_;
    std::shared_ptr<const ConstraintOperator> factored_;
    std::unique_ptr<Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower>> llt_;
};

inline QrmSolution solve(const ConstrainedSystem& cs, SolverOptions opts = {}) {
    QrmSolver solver(opts);
    return solver.solve(cs);
}

/// Matrix Market coordinate dump (general real, 1-based indices, %.17g values).
inline void write_matrix_market(const SparseMatrix& M, const std::string& path) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "qrm", "cannot open " + path);
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << '\n';
    for (Eigen::Index c = 0; c < M.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(M, c); it; ++it)
            os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << fmt_double(it.value()) << '\n';
}

} // namespace qrm
