// Coverings of half-ball regions by axis-aligned cubes or by boundary- and
// interior-centered balls, with the containment constraints checked by
// enumeration.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stablab/linalg.hpp"

namespace stablab::geometry {

struct CoveringPiece {
    enum class Kind { Cube, Ball };
    enum class Tag { Interior, BoundaryCentered };
    Kind kind;
    Tag tag;
    linalg::Vec center;  // cube: center of the cube
    double size;         // cube: side length; ball: radius
};

struct Covering {
    std::vector<CoveringPiece> pieces;
    int n_boundary = 0, n_interior = 0;
};

enum class CoveringMode { Cubes, BoundaryAndInteriorBalls };

namespace detail {
inline bool point_in_piece(const CoveringPiece& p, const linalg::Vec& x) {
    if (p.kind == CoveringPiece::Kind::Cube) {
        for (int k = 0; k < x.n; ++k)
            if (std::abs(x[k] - p.center[k]) > 0.5 * p.size + 1e-12) return false;
        return true;
    }
    linalg::Vec d = x;
    for (int k = 0; k < x.n; ++k) d[k] -= p.center[k];
    return linalg::norm2(d) <= p.size + 1e-12;
}
}  // namespace detail

// Cubes mode: disjoint open lattice cubes of side `scale` covering the
// half-ball B_{1/2}^+ up to a null set, each contained in B_{4/7}^+.
// Balls mode: boundary balls of radius scale/4 centered on the flat boundary
// covering its trace in B_{1/2}, with B_scale(y_i) inside B_1, plus interior
// balls covering the rest of B_{1/2}^+ with the doubled ball inside B_1^+.
inline Covering make_covering(int n, CoveringMode mode, double scale) {
    if (scale <= 0.0 || scale >= 1.0) throw std::invalid_argument("make_covering: scale must be in (0,1)");
    if (n < 1 || n > 3) throw std::invalid_argument("make_covering: n must be 1..3");
    Covering cov;
    const double target = 0.5;

    if (mode == CoveringMode::Cubes) {
        const double s = scale;
        const double outer = 4.0 / 7.0;
        int kmax = static_cast<int>(std::ceil(target / s)) + 1;
        std::array<int, 3> idx{};
        std::vector<std::array<int, 3>> cells;
        std::function<void(int)> rec = [&](int axis) {
            if (axis == n) {
                cells.push_back(idx);
                return;
            }
            int lo = (axis == n - 1) ? 0 : -kmax;  // last axis stays in the half-space
            for (int k = lo; k < kmax; ++k) {
                idx[axis] = k;
                rec(axis + 1);
            }
        };
        rec(0);
        for (const auto& c : cells) {
            // keep the cube if it intersects B_{1/2}^+ (nearest corner inside)
            double near2 = 0.0, far2 = 0.0;
            for (int k = 0; k < n; ++k) {
                double lo = c[k] * s, hi = (c[k] + 1) * s;
                double nearest = (lo > 0) ? lo : (hi < 0 ? -hi : 0.0);
                double farthest = std::max(std::abs(lo), std::abs(hi));
                near2 += nearest * nearest;
                far2 += farthest * farthest;
            }
            if (near2 >= target * target - 1e-12) continue;
            if (far2 > outer * outer + 1e-12)
                throw std::invalid_argument("make_covering: scale too large, cube escapes the 4/7 half-ball");
            CoveringPiece p{CoveringPiece::Kind::Cube, CoveringPiece::Tag::Interior,
                            linalg::Vec(n), s};
            for (int k = 0; k < n; ++k) p.center[k] = (c[k] + 0.5) * s;
            cov.pieces.push_back(p);
            ++cov.n_interior;
        }
        if (cov.pieces.empty()) throw std::invalid_argument("make_covering: empty target");
        return cov;
    }

    // boundary/interior balls
    const double delta = scale;
    const double r_bdy = delta / 4.0;
    if (delta >= 1.0 - target)
        throw std::invalid_argument("make_covering: scale too large, boundary ball escapes B_1");
    // boundary centers on the flat plane x_n = 0, spaced to cover the disc of
    // radius 1/2 with radius delta/4 balls
    double spacing = r_bdy / std::sqrt(std::max(1, n - 1));
    int m = static_cast<int>(std::ceil(target / spacing));
    std::function<void(int, linalg::Vec&)> recb = [&](int axis, linalg::Vec& y) {
        if (axis == n - 1) {
            y[n - 1] = 0.0;
            double r = linalg::norm2(y);
            if (r > target + r_bdy) return;
            if (r + delta > 1.0 + 1e-12)
                throw std::invalid_argument("make_covering: scale too large, boundary ball escapes B_1");
            cov.pieces.push_back({CoveringPiece::Kind::Ball, CoveringPiece::Tag::BoundaryCentered, y, r_bdy});
            ++cov.n_boundary;
            return;
        }
        for (int k = -m; k <= m; ++k) {
            y[axis] = k * spacing;
            recb(axis + 1, y);
        }
    };
    linalg::Vec y(n);
    recb(0, y);

    // interior balls of radius dt/2 with the doubled ball inside B_1^+
    double dt = std::min(delta / 4.0, 0.2);
    double ispacing = (dt / 2.0) / std::sqrt(n);
    int mi = static_cast<int>(std::ceil(target / ispacing)) + 1;
    std::function<void(int, linalg::Vec&)> reci = [&](int axis, linalg::Vec& z) {
        if (axis == n) {
            double r = linalg::norm2(z);
            if (r > target + dt || z[n - 1] <= 0) return;
            if (z[n - 1] < dt || r + dt > 1.0) return;  // doubled ball must fit in B_1^+
            // skip centers already covered by the boundary layer
            if (z[n - 1] < r_bdy / 2) return;
            cov.pieces.push_back({CoveringPiece::Kind::Ball, CoveringPiece::Tag::Interior, z, dt / 2.0});
            ++cov.n_interior;
            return;
        }
        for (int k = (axis == n - 1 ? 0 : -mi); k <= mi; ++k) {
            z[axis] = k * ispacing;
            reci(axis + 1, z);
        }
    };
    linalg::Vec z(n);
    reci(0, z);
    if (cov.pieces.empty()) throw std::invalid_argument("make_covering: empty target");
    return cov;
}

// Checks by dense sampling that the covering contains the target half-ball
// B_{1/2}^+ (up to the sampling resolution). Returns the worst uncovered
// sample count.
inline int covering_gap_count(const Covering& cov, int n, int samples_per_axis = 40) {
    int missing = 0;
    std::array<int, 3> idx{};
    std::function<void(int)> rec = [&](int axis) {
        if (axis == n) {
            linalg::Vec x(n);
            for (int k = 0; k < n; ++k) x[k] = -0.5 + (idx[k] + 0.5) / samples_per_axis;
            if (x[n - 1] <= 0) x[n - 1] = std::abs(x[n - 1]) + 1e-6;
            if (linalg::norm2(x) >= 0.5) return;
            for (const auto& p : cov.pieces)
                if (detail::point_in_piece(p, x)) return;
            ++missing;
            return;
        }
        for (int k = 0; k < samples_per_axis; ++k) {
            idx[axis] = k;
            rec(axis + 1);
        }
    };
    rec(0);
    return missing;
}

// Largest lattice-aligned side 2^-k such that cubes intersecting B_{1/2}^+
// stay inside B_{4/7}^+.
inline double feasible_cube_side(int n) {
    double bound = (4.0 / 7.0 - 0.5) / std::sqrt(static_cast<double>(n));
    double s = 1.0;
    while (s > bound) s *= 0.5;
    return s;
}

}  // namespace stablab::geometry
