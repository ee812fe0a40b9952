// Interpolation inequalities on the unit cube:
//   ||grad u||^2_{L2} <= C ( delta || |grad u| D^2 u ||_{L1} + delta^-2 ||u||^2_{L2} ),
//   ||u||^2_{L2} <= C ( dt^2 ||grad u||^2_{L2} + dt^-n ||u||^2_{L1} ).
#pragma once

#include "stablab/derivatives.hpp"
#include "stablab/quadrature.hpp"
#include "stablab/report.hpp"

namespace stablab::estimators {

struct CubeNorms {
    double grad_l2_sq = 0;
    double hess_grad_l1 = 0;
    double u_l2_sq = 0;
    double u_l1 = 0;
};

inline CubeNorms cube_norms(const ScalarField& u) {
    const Grid& g = u.grid();
    if (g.domain().kind != geometry::DomainSpec::Kind::Box)
        throw std::invalid_argument("interpolation checks run on box grids");
    GradHessian gh = geometry::grad_hessian(u);
    CubeNorms n;
    n.grad_l2_sq = geometry::volume_integral_fn(g, geometry::Region::whole(), [&](int node) {
        Vec gu = gh.grad.get(node);
        return dot(gu, gu);
    });
    n.hess_grad_l1 = geometry::volume_integral_fn(g, geometry::Region::whole(), [&](int node) {
        return linalg::norm2(gh.grad.get(node)) * linalg::frobenius(gh.hess.get(node));
    });
    n.u_l2_sq = geometry::volume_integral_fn(g, geometry::Region::whole(),
                                             [&](int node) { return u[node] * u[node]; });
    n.u_l1 = geometry::volume_integral_fn(g, geometry::Region::whole(),
                                          [&](int node) { return std::abs(u[node]); });
    return n;
}

inline EstimateReport interpolation_props(const ScalarField& u, double delta, double tilde_delta) {
    if (delta <= 0 || delta >= 1 || tilde_delta <= 0 || tilde_delta >= 1)
        throw std::invalid_argument("interpolation_props: deltas must lie in (0,1)");
    const int n = u.grid().lattice_dim();
    CubeNorms norms = cube_norms(u);
    EstimateReport rep;
    {
        double lhs = norms.grad_l2_sq;
        double rhs = delta * norms.hess_grad_l1 + norms.u_l2_sq / (delta * delta);
        CheckRecord r = make_record("interpolation_gradient", "interpol", lhs, rhs,
                                    std::max(1.0, norms.u_l2_sq));
        r.params["delta"] = delta;
        rep.add(std::move(r));
    }
    {
        double lhs = norms.u_l2_sq;
        double rhs = tilde_delta * tilde_delta * norms.grad_l2_sq +
                     std::pow(tilde_delta, -n) * norms.u_l1 * norms.u_l1;
        CheckRecord r = make_record("interpolation_nash", "nash", lhs, rhs,
                                    std::max(1.0, norms.u_l1));
        r.params["tilde_delta"] = tilde_delta;
        rep.add(std::move(r));
    }
    return rep;
}

}  // namespace stablab::estimators
