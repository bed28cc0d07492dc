#pragma once

#include <cstdint>
#include <string>

#include "qrm/cauchy_data.hpp"
#include "qrm/csv.hpp"
#include "qrm/error.hpp"

namespace qrm {

/// SplitMix64 (Steele, Lea, Flood 2014) used as a counter-based generator:
/// the value at position i of a stream with key s is finalize(s + (i + 1) * gamma),
/// i.e. exactly the (i+1)-th output of a SplitMix64 generator seeded with s.
struct SplitMix64 {
    static constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t at(std::uint64_t key, std::uint64_t index) {
        return finalize(key + (index + 1) * gamma);
    }

    /// Uniform double in [0, 1): the top 53 bits scaled by 2^-53.
    static constexpr double uniform(std::uint64_t key, std::uint64_t index) {
        return static_cast<double>(at(key, index) >> 11) * 0x1.0p-53;
    }

    /// Sequential interface over the same stream.
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += gamma;
        return finalize(state_);
    }

private:
    std::uint64_t state_;
};

struct NoiseSpec {
    double delta = 0.0;
    std::uint64_t seed = 0;
};

/// Stream keys. F uses the seed itself, G a key derived from it.
inline std::uint64_t noise_key_F(std::uint64_t seed) { return seed; }
inline std::uint64_t noise_key_G(std::uint64_t seed) {
    return SplitMix64::finalize(seed ^ 0x6a09e667f3bcc909ULL);
}

/// Multiplies every sample by 1 + delta (2 r - 1), r uniform on [0, 1). Sample
/// (b, k) of F uses position b (N_T + 1) + k of the F stream; same for G.
inline CauchyData add_noise(const CauchyData& clean, const NoiseSpec& spec) {
    require(spec.delta >= 0.0, "noise", "noise level delta must be non-negative");
    CauchyData out = clean;
    if (spec.delta == 0.0) return out;
    const auto perturb = [&](Eigen::MatrixXd& m, std::uint64_t key) {
        const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
        for (Eigen::Index b = 0; b < m.rows(); ++b)
            for (Eigen::Index k = 0; k < m.cols(); ++k) {
                const double r = SplitMix64::uniform(key, static_cast<std::uint64_t>(b) * cols +
                                                              static_cast<std::uint64_t>(k));
                m(b, k) *= 1.0 + spec.delta * (2.0 * r - 1.0);
            }
    };
    perturb(out.F, noise_key_F(spec.seed));
    perturb(out.G, noise_key_G(spec.seed));
    return out;
}

/// Fingerprint of the data values (F then G, row by row).
inline std::string data_checksum(const CauchyData& d) {
    Fnv1a h;
    for (Eigen::Index b = 0; b < d.F.rows(); ++b)
        for (Eigen::Index k = 0; k < d.F.cols(); ++k) h.add(d.F(b, k));
    for (Eigen::Index b = 0; b < d.G.rows(); ++b)
        for (Eigen::Index k = 0; k < d.G.cols(); ++k) h.add(d.G(b, k));
    return h.hex();
}

} // namespace qrm
