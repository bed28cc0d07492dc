#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qrm/csv.hpp"
#include "qrm/error.hpp"
#include "qrm/grid.hpp"

namespace qrm {

/// Lateral Cauchy data on the measurement boundary. F(b, k) is the Dirichlet
/// trace at dirichlet_nodes[b] and time t_{k+1}; G(b, k) is the outward normal
/// derivative at neumann_nodes[b] (corners have no normal and carry F only).
struct CauchyData {
    SpatialGrid grid;
    TimePartition partition;
    std::vector<BoundaryNode> dirichlet_nodes;
    std::vector<BoundaryNode> neumann_nodes;
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;

    static CauchyData zeros(const SpatialGrid& g, const TimePartition& part) {
        CauchyData d;
        d.grid = g;
        d.partition = part;
        const NodeSets sets = classify_nodes(g);
        d.dirichlet_nodes = sets.boundary;
        d.neumann_nodes = sets.neumann();
        d.F = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.dirichlet_nodes.size()),
                                    part.sample_count());
        d.G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.neumann_nodes.size()),
                                    part.sample_count());
        return d;
    }

    /// Columns: edge,i_or_j,t_k,F,G. Rows follow the boundary node order then time;
    /// G is left empty at corners.
    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        require(static_cast<bool>(os), "forward", "cannot open " + path);
        os << "edge,i_or_j,t_k,F,G\n";
        std::size_t g = 0;
        for (std::size_t b = 0; b < dirichlet_nodes.size(); ++b) {
            const BoundaryNode& node = dirichlet_nodes[b];
            const bool has_g = g < neumann_nodes.size() && neumann_nodes[g].i == node.i &&
                               neumann_nodes[g].j == node.j;
            for (int k = 0; k < partition.sample_count(); ++k) {
                os << edge_name(node.edge) << ',' << node.along() << ','
                   << fmt_double(partition.time(k + 1)) << ','
                   << fmt_double(F(static_cast<Eigen::Index>(b), k)) << ',';
                if (has_g) os << fmt_double(G(static_cast<Eigen::Index>(g), k));
                os << '\n';
            }
            if (has_g) ++g;
        }
    }
};

} // namespace qrm
