#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <fstream>

#include "qrm/csv.hpp"
#include "qrm/error.hpp"

namespace qrm {

// Index convention: every public (i, j, n) triple is 1-based, exactly as the
// lattice is written mathematically. Storage is 0-based; the only place the
// offset is applied is node_offset() / FlatIndex::offset().

/// Square lattice over (-R, R)^2 with N_x subdivisions per axis.
struct SpatialGrid {
    double R = 0.0;
    int N_x = 0;
    double d_x = 0.0;

    int nodes_per_axis() const { return N_x + 1; }
    std::size_t node_count() const {
        return static_cast<std::size_t>(N_x + 1) * static_cast<std::size_t>(N_x + 1);
    }

    /// x_i = -R + (i-1) d_x, evaluated as R (2(i-1) - N_x) / N_x so that -R, 0 and +R
    /// come out exact.
    double coord(int i) const { return R * static_cast<double>(2 * (i - 1) - N_x) / N_x; }
    double x(int i) const { return coord(i); }
    double y(int j) const { return coord(j); }

    bool valid(int i, int j) const { return i >= 1 && i <= N_x + 1 && j >= 1 && j <= N_x + 1; }
    bool on_boundary(int i, int j) const { return i == 1 || j == 1 || i == N_x + 1 || j == N_x + 1; }
    bool is_corner(int i, int j) const {
        return (i == 1 || i == N_x + 1) && (j == 1 || j == N_x + 1);
    }

    /// Row-major node number (0-based), i outer, j inner.
    std::size_t node_offset(int i, int j) const {
        return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(N_x + 1) +
               static_cast<std::size_t>(j - 1);
    }

    bool operator==(const SpatialGrid& o) const { return R == o.R && N_x == o.N_x; }
};

inline SpatialGrid build_grid(double R, int N_x) {
    require(R > 0.0 && std::isfinite(R), "grid", "half-width R must be positive");
    require(N_x >= 2, "grid", "N_x must be at least 2");
    return SpatialGrid{R, N_x, 2.0 * R / N_x};
}

/// Uniform partition 0 = t_1 < ... < t_{N_T+1} = T.
struct TimePartition {
    double T = 0.0;
    int N_T = 0;
    double d_t = 0.0;

    int sample_count() const { return N_T + 1; }
    double time(int k) const {
        if (k == N_T + 1) return T;
        return (k - 1) * d_t;
    }

    bool operator==(const TimePartition& o) const { return T == o.T && N_T == o.N_T; }
};

inline TimePartition build_partition(double T, int N_T) {
    require(T > 0.0 && std::isfinite(T), "grid", "final time T must be positive");
    require(N_T >= 1, "grid", "N_T must be at least 1");
    return TimePartition{T, N_T, T / N_T};
}

enum class Edge { left, right, bottom, top, corner };

inline const char* edge_name(Edge e) {
    switch (e) {
    case Edge::left: return "left";
    case Edge::right: return "right";
    case Edge::bottom: return "bottom";
    case Edge::top: return "top";
    case Edge::corner: return "corner";
    }
    return "?";
}

struct GridNode {
    int i = 0;
    int j = 0;
    bool operator==(const GridNode& o) const { return i == o.i && j == o.j; }
};

/// A boundary node together with the edge it lies on. Corners get Edge::corner
/// and carry no outward normal.
struct BoundaryNode {
    int i = 0;
    int j = 0;
    Edge edge = Edge::corner;

    bool has_normal() const { return edge != Edge::corner; }
    /// Unit step pointing into the domain, (0, 0) for corners.
    int inward_di() const { return edge == Edge::left ? 1 : edge == Edge::right ? -1 : 0; }
    int inward_dj() const { return edge == Edge::bottom ? 1 : edge == Edge::top ? -1 : 0; }
    /// Position along the edge (j on vertical edges, i on horizontal ones and corners).
    int along() const { return (edge == Edge::left || edge == Edge::right) ? j : i; }
};

struct NodeSets {
    std::vector<GridNode> interior;      // 2 <= i, j <= N_x
    std::vector<BoundaryNode> boundary;  // i or j in {1, N_x+1}, row-major order
    std::vector<GridNode> first_layer;   // interior nodes with a boundary neighbour

    /// Boundary nodes that carry a Neumann trace (all but the four corners).
    std::vector<BoundaryNode> neumann() const {
        std::vector<BoundaryNode> out;
        out.reserve(boundary.size());
        for (const auto& b : boundary)
            if (b.has_normal()) out.push_back(b);
        return out;
    }
};

inline Edge classify_edge(const SpatialGrid& g, int i, int j) {
    if (g.is_corner(i, j)) return Edge::corner;
    if (i == 1) return Edge::left;
    if (i == g.N_x + 1) return Edge::right;
    if (j == 1) return Edge::bottom;
    return Edge::top;
}

inline NodeSets classify_nodes(const SpatialGrid& g) {
    NodeSets s;
    const int n = g.N_x + 1;
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (g.on_boundary(i, j)) {
                s.boundary.push_back({i, j, classify_edge(g, i, j)});
            } else {
                s.interior.push_back({i, j});
                if (i == 2 || j == 2 || i == g.N_x || j == g.N_x) s.first_layer.push_back({i, j});
            }
        }
    }
    return s;
}

/// The map (i, j, n) -> (i-1)(N_x+1)N + (j-1)N + n over all nodes and all
/// N time-basis components.
class FlatIndex {
public:
    FlatIndex(int N_x, int N) : N_x_(N_x), N_(N) {
        require(N_x >= 2, "grid", "N_x must be at least 2");
        require(N >= 1, "grid", "N must be at least 1");
    }

    int N_x() const { return N_x_; }
    int N() const { return N_; }
    std::size_t size() const {
        return static_cast<std::size_t>(N_x_ + 1) * static_cast<std::size_t>(N_x_ + 1) *
               static_cast<std::size_t>(N_);
    }

    /// 1-based index.
    std::size_t flatten(int i, int j, int n) const {
        check(i, j, n);
        return unchecked(i, j, n) + 1;
    }

    struct Triple {
        int i, j, n;
        bool operator==(const Triple& o) const { return i == o.i && j == o.j && n == o.n; }
    };

    Triple unflatten(std::size_t idx) const {
        require(idx >= 1 && idx <= size(), "grid",
                "flat index " + std::to_string(idx) + " out of range");
        const std::size_t z = idx - 1;
        const std::size_t per_row = static_cast<std::size_t>(N_x_ + 1) * N_;
        const int i = static_cast<int>(z / per_row) + 1;
        const std::size_t rem = z % per_row;
        const int j = static_cast<int>(rem / N_) + 1;
        const int n = static_cast<int>(rem % N_) + 1;
        return {i, j, n};
    }

    /// 0-based storage position of u_n(x_i, y_j).
    std::size_t offset(int i, int j, int n) const { return unchecked(i, j, n); }

private:
    std::size_t unchecked(int i, int j, int n) const {
        return (static_cast<std::size_t>(i - 1) * (N_x_ + 1) + static_cast<std::size_t>(j - 1)) *
                   static_cast<std::size_t>(N_) +
               static_cast<std::size_t>(n - 1);
    }
    void check(int i, int j, int n) const {
        const bool ok = i >= 1 && i <= N_x_ + 1 && j >= 1 && j <= N_x_ + 1 && n >= 1 && n <= N_;
        require(ok, "grid",
                "index (" + std::to_string(i) + ", " + std::to_string(j) + ", " +
                    std::to_string(n) + ") out of range");
    }

    int N_x_;
    int N_;
};

/// Scalar field sampled on every node of a grid.
struct GridField {
    SpatialGrid grid;
    std::vector<double> values;

    GridField() = default;
    explicit GridField(const SpatialGrid& g) : grid(g), values(g.node_count(), 0.0) {}

    double& operator()(int i, int j) { return values[grid.node_offset(i, j)]; }
    double operator()(int i, int j) const { return values[grid.node_offset(i, j)]; }

    template <class Fn>
    static GridField sample(const SpatialGrid& g, Fn&& fn) {
        GridField f(g);
        for (int i = 1; i <= g.N_x + 1; ++i)
            for (int j = 1; j <= g.N_x + 1; ++j) f(i, j) = fn(g.x(i), g.y(j));
        return f;
    }
};

/// Common field dump format: i,j,x,y,value in row-major node order.
inline void write_field_csv(const GridField& f, const std::string& path) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "io", "cannot open " + path);
    os << "i,j,x,y,value\n";
    for (int i = 1; i <= f.grid.N_x + 1; ++i)
        for (int j = 1; j <= f.grid.N_x + 1; ++j)
            os << i << ',' << j << ',' << fmt_double(f.grid.x(i)) << ',' << fmt_double(f.grid.y(j))
               << ',' << fmt_double(f(i, j)) << '\n';
}

} // namespace qrm
