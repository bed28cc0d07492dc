#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "qrm/csv.hpp"
#include "qrm/error.hpp"
#include "qrm/grid.hpp"

namespace qrm {

using hp_float = boost::multiprecision::cpp_bin_float_50;

/// How sampled functions of time are integrated over [0, T].
enum class TimeQuadrature {
    /// Trapezoid weights plus the smallest correction (in the trapezoid-weighted
    /// norm) that makes the rule exact on span{(t-t0)^p e^{2(t-t0)} : p <= 2N-2}.
    /// Every product Psi_m Psi_n and Psi_m Psi_n' lies in that span, so discrete and
    /// continuous inner products coincide for the basis.
    span_exact,
    /// Plain composite trapezoid.
    trapezoid,
    /// Unweighted Euclidean dot product of the sample vectors, scaled by d_t.
    uniform,
};

inline const char* to_string(TimeQuadrature q) {
    switch (q) {
    case TimeQuadrature::span_exact: return "span_exact";
    case TimeQuadrature::trapezoid: return "trapezoid";
    case TimeQuadrature::uniform: return "uniform";
    }
    return "?";
}

namespace detail {

/// Dense SPD solve by Cholesky in extended precision.
inline std::vector<hp_float> hp_cholesky_solve(std::vector<std::vector<hp_float>> a,
                                               std::vector<hp_float> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        hp_float d = a[k][k];
        for (std::size_t p = 0; p < k; ++p) d -= a[k][p] * a[k][p];
        require(d > 0, "timebasis", "quadrature moment matrix is not positive definite");
        a[k][k] = sqrt(d);
        for (std::size_t i = k + 1; i < n; ++i) {
            hp_float v = a[i][k];
            for (std::size_t p = 0; p < k; ++p) v -= a[i][p] * a[k][p];
            a[i][k] = v / a[k][k];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < i; ++p) b[i] -= a[i][p] * b[p];
        b[i] /= a[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t p = i + 1; p < n; ++p) b[i] -= a[p][i] * b[p];
        b[i] /= a[i][i];
    }
    return b;
}

/// Chebyshev moments  h * int_{-1}^{1} T_p(x) e^{2 h x} dx,  p = 0..P-1.
/// Monomial moments come from the everywhere-positive Taylor series of the
/// exponential, then T_p is expanded in monomials.
inline std::vector<hp_float> chebyshev_exp_moments(const hp_float& h, int P) {
    const hp_float a = 2 * h;
    std::vector<hp_float> mono(static_cast<std::size_t>(P), hp_float(0));
    for (int q = 0; q < P; ++q) {
        hp_float term = 1;  // a^m / m!
        hp_float sum = 0;
        for (int m = 0; m < 400; ++m) {
            if (m > 0) term *= a / m;
            if ((q + m) % 2 == 0) {
                const hp_float add = term * 2 / (q + m + 1);
                sum += add;
                if (m > 2 * static_cast<int>(a.convert_to<double>()) + 10 && add < sum * 1e-60) break;
            }
        }
        mono[static_cast<std::size_t>(q)] = sum;
    }
    // Rows of Chebyshev coefficients: T_0 = 1, T_1 = x, T_{p+1} = 2x T_p - T_{p-1}.
    std::vector<std::vector<hp_float>> cheb(static_cast<std::size_t>(P),
                                            std::vector<hp_float>(static_cast<std::size_t>(P), 0));
    cheb[0][0] = 1;
    if (P > 1) cheb[1][1] = 1;
    for (int p = 1; p + 1 < P; ++p) {
        for (int q = 0; q < P; ++q) {
            hp_float v = -cheb[p - 1][q];
            if (q > 0) v += 2 * cheb[p][q - 1];
            cheb[p + 1][q] = v;
        }
    }
    std::vector<hp_float> out(static_cast<std::size_t>(P));
    for (int p = 0; p < P; ++p) {
        hp_float s = 0;
        for (int q = 0; q <= p; ++q) s += cheb[p][q] * mono[q];
        out[p] = h * s;
    }
    return out;
}

inline std::vector<hp_float> trapezoid_weights(const TimePartition& part) {
    const hp_float dt = hp_float(part.T) / part.N_T;
    std::vector<hp_float> w(static_cast<std::size_t>(part.sample_count()), dt);
    w.front() = dt / 2;
    w.back() = dt / 2;
    return w;
}

/// Trapezoid rule corrected to integrate T_p((t-t0)/h) e^{2(t-t0)} exactly for
/// p < P. The correction c minimises sum c_k^2 / w_k. When there are fewer
/// samples than constraints, P is capped at the sample count.
inline std::vector<hp_float> span_exact_weights(const TimePartition& part,
                                                const std::vector<hp_float>& s, int P) {
    P = std::min(P, part.sample_count());
    const hp_float h = hp_float(part.T) / 2;
    const std::size_t K = s.size();
    std::vector<hp_float> w = trapezoid_weights(part);

    std::vector<std::vector<hp_float>> V(static_cast<std::size_t>(P), std::vector<hp_float>(K));
    for (std::size_t k = 0; k < K; ++k) {
        const hp_float x = s[k] / h;
        const hp_float e2 = exp(2 * s[k]);
        hp_float tm = 1, tp = x;
        V[0][k] = e2;
        if (P > 1) V[1][k] = x * e2;
        for (int p = 2; p < P; ++p) {
            const hp_float tn = 2 * x * tp - tm;
            V[p][k] = tn * e2;
            tm = tp;
            tp = tn;
        }
    }
    const auto mu = chebyshev_exp_moments(h, P);
    std::vector<hp_float> r(static_cast<std::size_t>(P));
    for (int p = 0; p < P; ++p) {
        hp_float acc = 0;
        for (std::size_t k = 0; k < K; ++k) acc += V[p][k] * w[k];
        r[p] = mu[p] - acc;
    }
    std::vector<std::vector<hp_float>> A(static_cast<std::size_t>(P),
                                         std::vector<hp_float>(static_cast<std::size_t>(P)));
    for (int p = 0; p < P; ++p)
        for (int q = 0; q <= p; ++q) {
            hp_float acc = 0;
            for (std::size_t k = 0; k < K; ++k) acc += V[p][k] * w[k] * V[q][k];
            A[p][q] = acc;
            A[q][p] = acc;
        }
    const auto lambda = hp_cholesky_solve(std::move(A), std::move(r));
    std::vector<hp_float> out(K);
    for (std::size_t k = 0; k < K; ++k) {
        hp_float c = 0;
        for (int p = 0; p < P; ++p) c += V[p][k] * lambda[p];
        out[k] = w[k] + w[k] * c;
    }
    return out;
}

} // namespace detail

/// Orthonormal time basis Psi_n(t) = P_{n-1}(t - t0) e^{t - t0}, t0 = T/2, obtained
/// by Gram-Schmidt on (t - t0)^{n-1} e^{t - t0} under the quadrature inner
/// product <f, g> = sum_k w_k f(t_k) g(t_k).
class TimeBasis {
public:
    int N() const { return N_; }
    const TimePartition& partition() const { return part_; }
    double t0() const { return part_.T / 2; }
    TimeQuadrature quadrature() const { return quad_; }

    /// Row n-1 holds Psi_n(t_k), k = 1..N_T+1.
    const Eigen::MatrixXd& samples() const { return samples_; }
    const Eigen::MatrixXd& derivative_samples() const { return deriv_; }
    /// Quadrature weights w_k shared by Gram-Schmidt, S and the data projection.
    const Eigen::VectorXd& weights() const { return weights_; }
    /// coefficients()(n-1, k) multiplies (t - t0)^k. Rounded to double; value()
    /// evaluates the extended-precision originals.
    const Eigen::MatrixXd& coefficients() const { return coeffs_; }

    double value(int n, double t) const { return eval(n, t, false); }
    double derivative(int n, double t) const { return eval(n, t, true); }

    double inner(const Eigen::Ref<const Eigen::VectorXd>& f,
                 const Eigen::Ref<const Eigen::VectorXd>& g) const {
        long double acc = 0;
        for (Eigen::Index k = 0; k < weights_.size(); ++k)
            acc += static_cast<long double>(weights_[k]) * f[k] * g[k];
        return static_cast<double>(acc);
    }

    /// CSV: first column t, then one column per Psi_n.
    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        require(static_cast<bool>(os), "timebasis", "cannot open " + path);
        os << "t";
        for (int n = 1; n <= N_; ++n) os << ",psi_" << n;
        os << '\n';
        for (int k = 1; k <= part_.sample_count(); ++k) {
            os << fmt_double(part_.time(k));
            for (int n = 1; n <= N_; ++n) os << ',' << fmt_double(samples_(n - 1, k - 1));
            os << '\n';
        }
    }

    friend TimeBasis build_basis(int N, const TimePartition& part, TimeQuadrature quad);

private:
    double eval(int n, double t, bool derivative) const {
        require(n >= 1 && n <= N_, "timebasis", "basis index " + std::to_string(n) + " out of range");
        require(t >= 0.0 && t <= part_.T, "timebasis", "time outside [0, T]");
        const hp_float s = hp_float(t) - hp_float(part_.T) / 2;
        const auto& c = hp_coeffs_[static_cast<std::size_t>(n - 1)];
        hp_float p = 0, dp = 0;
        for (std::size_t k = c.size(); k-- > 0;) {
            dp = dp * s + p;
            p = p * s + c[k];
        }
        const hp_float v = derivative ? (p + dp) * exp(s) : p * exp(s);
        return v.convert_to<double>();
    }

    int N_ = 0;
    TimePartition part_;
    TimeQuadrature quad_ = TimeQuadrature::span_exact;
    std::vector<std::vector<hp_float>> hp_coeffs_;
    Eigen::MatrixXd coeffs_;
    Eigen::MatrixXd samples_;
    Eigen::MatrixXd deriv_;
    Eigen::VectorXd weights_;
};

/// Gram-Schmidt runs on the coefficient vectors with the Gram matrix
/// G_ij = <(t-t0)^i e^{t-t0}, (t-t0)^j e^{t-t0}>, two classical passes per
/// vector. A residual whose norm drops below 1e-12 of the input's norm means the
/// family is numerically dependent on this partition (N too large).
inline TimeBasis build_basis(int N, const TimePartition& part,
                             TimeQuadrature quad = TimeQuadrature::span_exact) {
    require(N >= 1, "timebasis", "N must be at least 1");
    require(N <= part.N_T, "timebasis",
            "N = " + std::to_string(N) + " exceeds N_T = " + std::to_string(part.N_T));

    const std::size_t K = static_cast<std::size_t>(part.sample_count());
    const hp_float dt = hp_float(part.T) / part.N_T;
    const hp_float t0 = hp_float(part.T) / 2;
    std::vector<hp_float> s(K), es(K);
    for (std::size_t k = 0; k < K; ++k) {
        s[k] = k + 1 == K ? t0 : dt * k - t0;
        es[k] = exp(s[k]);
    }

    std::vector<hp_float> w;
    switch (quad) {
    case TimeQuadrature::span_exact: w = detail::span_exact_weights(part, s, 2 * N - 1); break;
    case TimeQuadrature::trapezoid: w = detail::trapezoid_weights(part); break;
    case TimeQuadrature::uniform: w.assign(K, hp_float(part.T) / part.N_T); break;
    }

    // Moments m_p = sum_k w_k s_k^p e^{2 s_k}; G_ij = m_{i+j}.
    std::vector<hp_float> mom(static_cast<std::size_t>(2 * N - 1), hp_float(0));
    for (std::size_t k = 0; k < K; ++k) {
        hp_float pw = w[k] * es[k] * es[k];
        for (auto& m : mom) {
            m += pw;
            pw *= s[k];
        }
    }
    const auto gram = [&](const std::vector<hp_float>& a, const std::vector<hp_float>& b) {
        hp_float acc = 0;
        for (int i = 0; i < N; ++i) {
            if (a[i] == 0) continue;
            hp_float row = 0;
            for (int j = 0; j < N; ++j)
                if (b[j] != 0) row += mom[static_cast<std::size_t>(i + j)] * b[j];
            acc += a[i] * row;
        }
        return acc;
    };

    std::vector<std::vector<hp_float>> C;
    C.reserve(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        std::vector<hp_float> v(static_cast<std::size_t>(N), hp_float(0));
        v[n] = 1;
        const hp_float norm0 = sqrt(mom[static_cast<std::size_t>(2 * n)]);
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<hp_float> h(C.size());
            for (std::size_t m = 0; m < C.size(); ++m) h[m] = gram(C[m], v);
            for (std::size_t m = 0; m < C.size(); ++m)
                for (int i = 0; i <= static_cast<int>(m); ++i) v[i] -= h[m] * C[m][i];
        }
        const hp_float nrm2 = gram(v, v);
        if (!(nrm2 > 0) || sqrt(nrm2) < norm0 * 1e-12)
            throw Error("timebasis", "Gram-Schmidt pivot vanished at n = " + std::to_string(n + 1) +
                                         "; N is too large for this time partition");
        const hp_float nrm = sqrt(nrm2);
        for (auto& x : v) x /= nrm;
        C.push_back(std::move(v));
    }

    TimeBasis b;
    b.N_ = N;
    b.part_ = part;
    b.quad_ = quad;
    b.coeffs_.resize(N, N);
    b.samples_.resize(N, static_cast<Eigen::Index>(K));
    b.deriv_.resize(N, static_cast<Eigen::Index>(K));
    b.weights_.resize(static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) b.weights_[static_cast<Eigen::Index>(k)] = w[k].convert_to<double>();
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < N; ++k) b.coeffs_(n, k) = C[n][k].convert_to<double>();
    for (int n = 0; n < N; ++n) {
        const auto& c = C[static_cast<std::size_t>(n)];
        for (std::size_t k = 0; k < K; ++k) {
            hp_float p = 0, dp = 0;
            for (int q = n; q >= 0; --q) {
                dp = dp * s[k] + p;
                p = p * s[k] + c[q];
            }
            b.samples_(n, static_cast<Eigen::Index>(k)) = (p * es[k]).convert_to<double>();
            b.deriv_(n, static_cast<Eigen::Index>(k)) = ((p + dp) * es[k]).convert_to<double>();
        }
    }
    b.hp_coeffs_ = std::move(C);
    return b;
}

/// s_mn = <Psi_m, Psi_n'> with the basis quadrature and analytic derivative samples.
inline Eigen::MatrixXd coupling_matrix(const TimeBasis& basis) {
    const int N = basis.N();
    Eigen::MatrixXd S(N, N);
    for (int m = 0; m < N; ++m)
        for (int n = 0; n < N; ++n)
            S(m, n) = basis.inner(basis.samples().row(m).transpose(),
                                  basis.derivative_samples().row(n).transpose());
    return S;
}

} // namespace qrm
