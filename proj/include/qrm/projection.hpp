#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qrm/cauchy_data.hpp"
#include "qrm/csv.hpp"
#include "qrm/time_basis.hpp"

namespace qrm {

/// First N time-Fourier coefficients of the Cauchy data at every boundary node.
/// Row b of F_tilde belongs to dirichlet_nodes[b], row b of G_tilde to neumann_nodes[b].
struct IndirectData {
    SpatialGrid grid;
    int N = 0;
    std::vector<BoundaryNode> dirichlet_nodes;
    std::vector<BoundaryNode> neumann_nodes;
    Eigen::MatrixXd F_tilde;
    Eigen::MatrixXd G_tilde;

    /// Columns: node,edge,i,j,n,F_tilde,G_tilde (G_tilde empty at corners).
    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        require(static_cast<bool>(os), "projection", "cannot open " + path);
        os << "node,edge,i,j,n,F_tilde,G_tilde\n";
        std::size_t g = 0;
        for (std::size_t b = 0; b < dirichlet_nodes.size(); ++b) {
            const auto& node = dirichlet_nodes[b];
            const bool has_g = g < neumann_nodes.size() && neumann_nodes[g].i == node.i &&
                               neumann_nodes[g].j == node.j;
            for (int n = 0; n < N; ++n) {
                os << b << ',' << edge_name(node.edge) << ',' << node.i << ',' << node.j << ','
                   << n + 1 << ',' << fmt_double(F_tilde(static_cast<Eigen::Index>(b), n)) << ',';
                if (has_g) os << fmt_double(G_tilde(static_cast<Eigen::Index>(g), n));
                os << '\n';
            }
            if (has_g) ++g;
        }
    }
};

/// F_tilde_n(x) = sum_k w_k F(x, t_k) Psi_n(t_k), same for G, with the basis weights.
inline IndirectData project(const CauchyData& data, const TimeBasis& basis) {
    require(data.partition == basis.partition(), "projection",
            "Cauchy data and time basis use different time partitions");
    require(data.F.cols() == basis.partition().sample_count() &&
                data.G.cols() == basis.partition().sample_count(),
            "projection", "Cauchy data has the wrong number of time samples");
    IndirectData out;
    out.grid = data.grid;
    out.N = basis.N();
    out.dirichlet_nodes = data.dirichlet_nodes;
    out.neumann_nodes = data.neumann_nodes;
    const Eigen::MatrixXd weighted = basis.weights().asDiagonal() * basis.samples().transpose();
    out.F_tilde = data.F * weighted;
    out.G_tilde = data.G * weighted;
    return out;
}

} // namespace qrm
