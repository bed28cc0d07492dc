#pragma once

#include <array>
#include <cmath>
#include <functional>

#include <Eigen/Core>

#include "qrm/qrm.hpp"

namespace qrm_test {

/// Gauss-Legendre nodes/weights on [-1, 1] (20 points), from the standard tables.
inline const std::array<std::pair<double, double>, 10>& gl20_half() {
    static const std::array<std::pair<double, double>, 10> t{{
        {0.0765265211334973337546404, 0.1527533871307258506980843},
        {0.2277858511416450780804962, 0.1491729864726037467878287},
        {0.3737060887154195606725482, 0.1420961093183820513292983},
        {0.5108670019508270980043641, 0.1316886384491766268984945},
        {0.6360536807265150254528367, 0.1181945319615184173123774},
        {0.7463319064601507926143051, 0.1019301198172404350367501},
        {0.8391169718222188233945291, 0.0832767415767047487247581},
        {0.9122344282513259058677524, 0.0626720483341090635695065},
        {0.9639719272779137912676661, 0.0406014298003869413310400},
        {0.9931285991850949247861224, 0.0176140071391521183118620},
    }};
    return t;
}

/// Composite 20-point Gauss-Legendre on [a, b] with `panels` panels.
inline double integrate(const std::function<double(double)>& f, double a, double b, int panels = 16) {
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h, half = h / 2;
        for (const auto& [x, w] : gl20_half()) acc += w * half * (f(mid - half * x) + f(mid + half * x));
    }
    return acc;
}

/// Discrete H^1 norm of a flat coefficient vector: d_x^2 times the sum of
/// squared values and forward differences over all nodes and components.
inline double h1_norm(const Eigen::VectorXd& e, const qrm::FlatIndex& ix, const qrm::SpatialGrid& g) {
    double s = 0.0;
    for (int i = 1; i <= g.N_x + 1; ++i)
        for (int j = 1; j <= g.N_x + 1; ++j)
            for (int n = 1; n <= ix.N(); ++n) {
                const double v = e[static_cast<Eigen::Index>(ix.offset(i, j, n))];
                s += v * v;
                if (i <= g.N_x) {
                    const double d = (e[static_cast<Eigen::Index>(ix.offset(i + 1, j, n))] - v) / g.d_x;
                    s += d * d;
                }
                if (j <= g.N_x) {
                    const double d = (e[static_cast<Eigen::Index>(ix.offset(i, j + 1, n))] - v) / g.d_x;
                    s += d * d;
                }
            }
    return std::sqrt(s) * g.d_x;
}

/// Cauchy data of the space-time field sum_n U_n(x) Psi_n(t): F from the
/// boundary values, G from the same one-sided stencil the solver uses.
inline qrm::CauchyData cauchy_from_coefficients(const Eigen::VectorXd& U, const qrm::FlatIndex& ix,
                                                const qrm::SpatialGrid& g, const qrm::TimeBasis& basis) {
    auto d = qrm::CauchyData::zeros(g, basis.partition());
    const Eigen::MatrixXd& psi = basis.samples();
    const auto at = [&](int i, int j, int n) { return U[static_cast<Eigen::Index>(ix.offset(i, j, n))]; };
    for (std::size_t b = 0; b < d.dirichlet_nodes.size(); ++b) {
        const auto& nd = d.dirichlet_nodes[b];
        for (int n = 1; n <= ix.N(); ++n) d.F.row(static_cast<Eigen::Index>(b)) += at(nd.i, nd.j, n) * psi.row(n - 1);
    }
    for (std::size_t b = 0; b < d.neumann_nodes.size(); ++b) {
        const auto& nd = d.neumann_nodes[b];
        const int di = nd.inward_di(), dj = nd.inward_dj();
        for (int n = 1; n <= ix.N(); ++n) {
            const double gn = (3.0 * at(nd.i, nd.j, n) - 4.0 * at(nd.i + di, nd.j + dj, n) +
                               at(nd.i + 2 * di, nd.j + 2 * dj, n)) /
                              (2.0 * g.d_x);
            d.G.row(static_cast<Eigen::Index>(b)) += gn * psi.row(n - 1);
        }
    }
    return d;
}

/// Smooth test coefficients U_n(x, y) = cos(0.6 n x + 0.3 y + 0.2 n) exp(-0.1 y^2) / n.
inline Eigen::VectorXd smooth_coefficients(const qrm::FlatIndex& ix, const qrm::SpatialGrid& g) {
    Eigen::VectorXd U(static_cast<Eigen::Index>(ix.size()));
    for (int i = 1; i <= g.N_x + 1; ++i)
        for (int j = 1; j <= g.N_x + 1; ++j)
            for (int n = 1; n <= ix.N(); ++n) {
                const double x = g.x(i), y = g.y(j);
                U[static_cast<Eigen::Index>(ix.offset(i, j, n))] =
                    std::cos(0.6 * n * x + 0.3 * y + 0.2 * n) * std::exp(-0.1 * y * y) / n;
            }
    return U;
}

} // namespace qrm_test
