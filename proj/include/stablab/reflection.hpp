// Third-order reflection of a half-ball field across the flat boundary:
//   u(x', x_n) = -10 u(x',-x_n) + 160 u(x',-x_n/2) - 405 u(x',-x_n/3)
//                + 256 u(x',-x_n/4)   for x_n < 0.
// The four coefficients match the moment identities sum c_k (-1/m_k)^j = 1
// for j = 0..3, so polynomials of degree <= 3 in x_n extend exactly.
#pragma once

#include "stablab/grid.hpp"

namespace stablab::geometry {

struct ReflectionResult {
    ScalarField field;   // on the ball grid
    int clamped = 0;     // sample points that fell outside the column and were clamped
};

inline constexpr std::array<double, 4> kReflectionCoeff{-10.0, 160.0, -405.0, 256.0};
inline constexpr std::array<double, 4> kReflectionDivisor{1.0, 2.0, 3.0, 4.0};

// Cubic Lagrange interpolation of column values at height z >= 0; the column
// is the set of lattice nodes above (x', 0) in the half-ball grid.
namespace detail {
inline double column_interpolate(const Grid& g, const ScalarField& u, std::array<int, 3> base,
                                 double z, bool& clamped) {
    const int axis = g.lattice_dim() - 1;
    const auto& counts = g.lattice_counts();
    const double h = g.h();
    // nodes available in this column
    int top = 0;
    {
        std::array<int, 3> c = base;
        for (int k = 0; k < counts[axis]; ++k) {
            c[axis] = k;
            if (g.node_of_lattice(g.lattice_index(c)) < 0) break;
            top = k;
        }
    }
    double zi = z / h;
    int k0 = static_cast<int>(std::floor(zi)) - 1;  // 4-point stencil start
    if (k0 < 0) k0 = 0;
    if (k0 + 3 > top) k0 = top - 3;
    if (k0 < 0) {  // fewer than 4 nodes: clamp to linear/constant
        clamped = true;
        std::array<int, 3> c = base;
        c[axis] = std::min(std::max(0, static_cast<int>(std::round(zi))), top);
        int node = g.node_of_lattice(g.lattice_index(c));
        return node >= 0 ? u[node] : 0.0;
    }
    if (zi > top + 1e-9) clamped = true;
    double result = 0.0;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b) {
            if (a == b) continue;
            w *= (zi - (k0 + b)) / static_cast<double>(a - b);
        }
        std::array<int, 3> c = base;
        c[axis] = k0 + a;
        int node = g.node_of_lattice(g.lattice_index(c));
        result += w * (node >= 0 ? u[node] : 0.0);
    }
    return result;
}
}  // namespace detail

inline ReflectionResult reflect_third_order(const ScalarField& u, const Grid& ball_grid) {
    const Grid& hg = u.grid();
    if (!hg.is_half_ball()) throw std::invalid_argument("reflect_third_order: source must be a half-ball field");
    if (ball_grid.domain().kind != DomainSpec::Kind::Ball || ball_grid.h() != hg.h() ||
        ball_grid.dim() != hg.dim())
        throw std::invalid_argument("reflect_third_order: ball grid must match the half-ball grid");

    const int d = hg.lattice_dim();
    const int axis = d - 1;
    ReflectionResult out{ScalarField(ball_grid), 0};
    bool clamped = false;
    for (int node = 0; node < ball_grid.n_nodes(); ++node) {
        Vec p = ball_grid.point(node);
        double xn = p[axis];
        // locate the matching half-ball column
        std::array<int, 3> base{};
        bool in_lattice = true;
        for (int k = 0; k < d - 1; ++k) {
            double ck = (p[k] - hg.lattice_origin()[k]) / hg.h();
            int ci = static_cast<int>(std::round(ck));
            if (std::abs(ck - ci) > 1e-9 || ci < 0 || ci >= hg.lattice_counts()[k]) in_lattice = false;
            base[k] = ci;
        }
        if (!in_lattice) continue;
        if (xn >= -1e-12) {
            base[axis] = static_cast<int>(std::round((xn - hg.lattice_origin()[axis]) / hg.h()));
            int src = (base[axis] >= 0 && base[axis] < hg.lattice_counts()[axis])
                          ? hg.node_of_lattice(hg.lattice_index(base))
                          : -1;
            out.field[node] = src >= 0 ? u[src] : 0.0;
            continue;
        }
        double v = 0.0;
        for (int k = 0; k < 4; ++k)
            v += kReflectionCoeff[k] *
                 detail::column_interpolate(hg, u, base, -xn / kReflectionDivisor[k], clamped);
        out.field[node] = v;
        if (clamped) ++out.clamped, clamped = false;
    }
    return out;
}

}  // namespace stablab::geometry
