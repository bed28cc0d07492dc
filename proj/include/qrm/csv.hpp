#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace qrm {

/// Locale-independent shortest-ish round-trip formatting used by every CSV writer.
inline std::string fmt_double(double v, int digits = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// FNV-1a over the raw bytes of a sequence of doubles. Used to fingerprint noisy data.
class Fnv1a {
public:
    void add(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void add(double v) { add(&v, sizeof v); }
    std::uint64_t value() const { return h_; }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
        return buf;
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace qrm
