#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "qrm/error.hpp"
#include "qrm/grid.hpp"

namespace qrm {

enum class SourceKind { bump, two_bumps, letter_Y, letter_lambda };

inline const char* to_string(SourceKind k) {
    switch (k) {
    case SourceKind::bump: return "bump";
    case SourceKind::two_bumps: return "two_bumps";
    case SourceKind::letter_Y: return "letter_Y";
    case SourceKind::letter_lambda: return "letter_lambda";
    }
    return "?";
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Segment {
    Point2 a;
    Point2 b;
};

/// Ground-truth initial condition. Bumps are e^{1 - r^2/(r^2 - |x - c|^2)} inside
/// each disk; letters are the indicator of the points within half_width of a stroke.
struct SourceSpec {
    SourceKind kind = SourceKind::bump;
    std::vector<Point2> centers;
    double radius = 1.0;
    std::vector<Segment> strokes;
    double half_width = 0.15;
    double amplitude = 1.0;

    bool is_letter() const { return kind == SourceKind::letter_Y || kind == SourceKind::letter_lambda; }

    double operator()(double x, double y) const {
        if (is_letter()) {
            for (const auto& s : strokes)
                if (distance_to_segment({x, y}, s) <= half_width) return amplitude;
            return 0.0;
        }
        const double r2 = radius * radius;
        for (const auto& c : centers) {
            const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
            if (d2 < r2) return amplitude * std::exp(1.0 - r2 / (r2 - d2));
        }
        return 0.0;
    }

    /// Axis-aligned box containing the closed support.
    std::array<double, 4> support_box() const {
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        const auto grow = [&](double x, double y, double r) {
            x0 = std::min(x0, x - r);
            x1 = std::max(x1, x + r);
            y0 = std::min(y0, y - r);
            y1 = std::max(y1, y + r);
        };
        if (is_letter()) {
            for (const auto& s : strokes) {
                grow(s.a.x, s.a.y, half_width);
                grow(s.b.x, s.b.y, half_width);
            }
        } else {
            for (const auto& c : centers) grow(c.x, c.y, radius);
        }
        return {x0, x1, y0, y1};
    }

    static double distance_to_segment(Point2 p, const Segment& s) {
        const double vx = s.b.x - s.a.x, vy = s.b.y - s.a.y;
        const double wx = p.x - s.a.x, wy = p.y - s.a.y;
        const double len2 = vx * vx + vy * vy;
        double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dx = wx - t * vx, dy = wy - t * vy;
        return std::sqrt(dx * dx + dy * dy);
    }
};

inline SourceSpec bump_source() {
    SourceSpec s;
    s.kind = SourceKind::bump;
    s.centers = {{0.0, 0.0}};
    s.radius = 1.0;
    return s;
}

inline SourceSpec two_bumps_source() {
    SourceSpec s;
    s.kind = SourceKind::two_bumps;
    s.centers = {{-1.0, 0.0}, {1.0, 0.0}};
    s.radius = 0.8;
    return s;
}

inline SourceSpec letter_Y_source() {
    SourceSpec s;
    s.kind = SourceKind::letter_Y;
    s.strokes = {{{0.0, 0.0}, {0.0, -1.0}}, {{0.0, 0.0}, {-0.7, 1.0}}, {{0.0, 0.0}, {0.7, 1.0}}};
    return s;
}

inline SourceSpec letter_lambda_source() {
    SourceSpec s;
    s.kind = SourceKind::letter_lambda;
    // Long leg from the top left to the bottom right, short leg from its midpoint
    // down to the left.
    s.strokes = {{{-0.7, 1.0}, {0.5, -1.0}}, {{-0.1, 0.0}, {-0.7, -1.0}}};
    return s;
}

/// Source for experiment number 1..4.
inline SourceSpec test_source(int test_id) {
    switch (test_id) {
    case 1: return bump_source();
    case 2: return two_bumps_source();
    case 3: return letter_Y_source();
    case 4: return letter_lambda_source();
    }
    throw Error("sources", "unknown test id " + std::to_string(test_id));
}

/// Rejects sources whose closed support touches or crosses the boundary of the
/// measurement square.
inline void validate_support(const SourceSpec& spec, const SpatialGrid& grid) {
    const auto box = spec.support_box();
    const double lim = grid.R;
    const bool inside = box[0] > -lim && box[1] < lim && box[2] > -lim && box[3] < lim;
    require(inside, "sources",
            std::string("support of ") + to_string(spec.kind) +
                " is not strictly inside the measurement square");
}

inline GridField sample_source(const SourceSpec& spec, const SpatialGrid& grid) {
    validate_support(spec, grid);
    return GridField::sample(grid, spec);
}

} // namespace qrm
