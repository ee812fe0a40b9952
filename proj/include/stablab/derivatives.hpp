// Finite-difference gradient and Hessian of grid fields: central differences
// where the stencil fits, one-sided second-order next to boundaries. Mixed
// second derivatives are symmetrized first derivatives of the gradient.
#pragma once

#include "stablab/grid.hpp"

namespace stablab::geometry {

namespace detail {

// Best available first derivative of nodal values along one axis.
inline double fd_first(const Grid& g, const std::function<double(int)>& val, int node, int axis) {
    const double h = g.h();
    int p1 = g.neighbor(node, axis, +1);
    int m1 = g.neighbor(node, axis, -1);
    if (p1 >= 0 && m1 >= 0) return (val(p1) - val(m1)) / (2 * h);
    if (p1 >= 0) {
        int p2 = g.neighbor(p1, axis, +1);
        if (p2 >= 0) return (-3 * val(node) + 4 * val(p1) - val(p2)) / (2 * h);
        return (val(p1) - val(node)) / h;
    }
    if (m1 >= 0) {
        int m2 = g.neighbor(m1, axis, -1);
        if (m2 >= 0) return (3 * val(node) - 4 * val(m1) + val(m2)) / (2 * h);
        return (val(node) - val(m1)) / h;
    }
    return 0.0;
}

// Best available second derivative along one axis.
inline double fd_second(const Grid& g, const std::function<double(int)>& val, int node, int axis) {
    const double h = g.h();
    int p1 = g.neighbor(node, axis, +1);
    int m1 = g.neighbor(node, axis, -1);
    if (p1 >= 0 && m1 >= 0) return (val(p1) - 2 * val(node) + val(m1)) / (h * h);
    if (p1 >= 0) {
        int p2 = g.neighbor(p1, axis, +1);
        if (p2 >= 0) {
            int p3 = g.neighbor(p2, axis, +1);
            if (p3 >= 0)
                return (2 * val(node) - 5 * val(p1) + 4 * val(p2) - val(p3)) / (h * h);
            return (val(node) - 2 * val(p1) + val(p2)) / (h * h);
        }
    }
    if (m1 >= 0) {
        int m2 = g.neighbor(m1, axis, -1);
        if (m2 >= 0) {
            int m3 = g.neighbor(m2, axis, -1);
            if (m3 >= 0)
                return (2 * val(node) - 5 * val(m1) + 4 * val(m2) - val(m3)) / (h * h);
            return (val(node) - 2 * val(m1) + val(m2)) / (h * h);
        }
    }
    return 0.0;
}

}  // namespace detail

inline VecField gradient(const ScalarField& u) {
    const Grid& g = u.grid();
    const int d = g.lattice_dim();
    VecField grad(g, d);
    auto val = [&](int n) { return u[n]; };
    for (int node = 0; node < g.n_nodes(); ++node)
        for (int k = 0; k < d; ++k) grad.at(node, k) = detail::fd_first(g, val, node, k);
    return grad;
}

struct GradHessian {
    VecField grad;
    MatField hess;
};

inline GradHessian grad_hessian(const ScalarField& u) {
    const Grid& g = u.grid();
    const int d = g.lattice_dim();
    GradHessian out{gradient(u), MatField(g, d)};
    auto uval = [&](int n) { return u[n]; };
    for (int node = 0; node < g.n_nodes(); ++node) {
        for (int i = 0; i < d; ++i)
            out.hess.at(node, i, i) = detail::fd_second(g, uval, node, i);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                auto gj = [&](int n) { return out.grad.at(n, j); };
                auto gi = [&](int n) { return out.grad.at(n, i); };
                double dij = detail::fd_first(g, gj, node, i);
                double dji = detail::fd_first(g, gi, node, j);
                out.hess.at(node, i, j) = 0.5 * (dij + dji);
            }
    }
    return out;
}

}  // namespace stablab::geometry
