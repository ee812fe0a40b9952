// Evaluators for the stability inequalities, the boundary Hessian estimates,
// the boundary-gradient identity, the energy ratios, and the level-set
// bounds, all as explicit LHS/RHS pairs over a solved field.
#pragma once

#include "stablab/curvature.hpp"
#include "stablab/quadrature.hpp"
#include "stablab/report.hpp"
#include "stablab/solver.hpp"
#include "stablab/testfunction.hpp"

namespace stablab::estimators {

using geometry::Region;
using operators::DiscreteOperator;
using solver::Problem;

// discretization slack for the stability-gap checks: lhs <= rhs + kGapTol h rhs
inline constexpr double kStabilityGapTolFactor = 1.0;

// Everything the estimators need about one solved configuration.
struct Context {
    const Grid* grid = nullptr;
    const CoefficientSpec* spec = nullptr;
    const exprlang::Nonlinearity* f = nullptr;
    double lambda = 0.0;
    const ScalarField* u = nullptr;
    GradHessian gh;
    Vec anchor;
    Mat A_anchor;
    Vec big_n;
    VecField hat_b;
    double eps = 0.0;
    double grad_max = 0.0;
    double tol_grad = 0.0;
    CurvatureFields curv;

    double grad_norm(int node) const { return linalg::norm2(gh.grad.get(node)); }
    double hess_norm(int node) const { return linalg::frobenius(gh.hess.get(node)); }
};

inline Context make_context(const Problem& p, const ScalarField& u, Vec anchor = {}) {
    if (p.grid->is_radial())
        throw std::invalid_argument("estimators: radial grids are not supported, use a Cartesian domain");
    Context c;
    c.grid = p.grid;
    c.spec = &p.coeffs;
    c.f = &p.f;
    c.lambda = p.lambda;
    c.u = &u;
    c.gh = geometry::grad_hessian(u);
    if (anchor.n == 0) anchor = Vec(p.grid->lattice_dim());
    c.anchor = anchor;
    c.A_anchor = p.coeffs.a_at(anchor);
    c.big_n = operators::big_N(c.A_anchor);
    c.hat_b = p.coeffs.hat_b(*p.grid);
    c.eps = p.coeffs.eps;
    for (int node = 0; node < p.grid->n_nodes(); ++node)
        c.grad_max = std::max(c.grad_max, c.grad_norm(node));
    c.tol_grad = 1e-8 * c.grad_max;
    c.curv = curvature_A(c.gh, p.coeffs, anchor);
    return c;
}

// Observed constant in the comparability bound
//   |A^2 - A0^2| <= C eps |x| A0^2
// between the curvature quantity and its anchored variant.
struct ComparabilityStats {
    double observed_C = 0;
    int samples = 0;
};

inline ComparabilityStats curvature_comparability(const Context& c) {
    ComparabilityStats st;
    if (c.eps <= 1e-14) return st;  // constant coefficients: the two coincide
    const Grid& g = *c.grid;
    for (int node = 0; node < g.n_nodes(); ++node) {
        double a = c.curv.value[node], a0 = c.curv.anchored[node];
        double x = linalg::norm2(g.point(node));
        if (a0 * a0 <= 1e-10 * c.grad_max * c.grad_max || x < 1e-6) continue;
        st.observed_C = std::max(st.observed_C,
                                 std::abs(a * a - a0 * a0) / (c.eps * x * a0 * a0));
        ++st.samples;
    }
    return st;
}

// ---------------------------------------------------------------------------
// Integral stability inequality: for compactly supported xi,
//   lhs = int lambda f'(u) xi^2,  rhs = int |grad xi - xi A^{-1} b_hat / 2|^2_A.
// ---------------------------------------------------------------------------

struct GapResult {
    double lhs = 0, rhs = 0;
};

inline GapResult stability_gap(const Context& c, const TestFunction& xi) {
    const Grid& g = *c.grid;
    if (xi.radius() < 1.5 * g.h())
        throw std::invalid_argument("stability_gap: test function is unresolved by the grid");
    for (int node = 0; node < g.n_nodes(); ++node)
        if (g.is_boundary(node) && std::abs(xi.value(g.point(node))) > 1e-12)
            throw std::invalid_argument("stability_gap: test function support touches the boundary");
    GapResult r;
    r.lhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
        double xv = xi.value(g.point(node));
        if (xv == 0.0) return 0.0;
        return c.lambda * c.f->deriv((*c.u)[node]) * xv * xv;
    });
    r.rhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
        Vec p = g.point(node);
        double xv = xi.value(p);
        Vec gx = xi.grad(p);
        if (xv == 0.0 && linalg::norm2(gx) == 0.0) return 0.0;
        Mat A = c.spec->a_at(p);
        Vec corr = linalg::matvec(linalg::inverse(A), c.hat_b.get(node));
        Vec arg = gx - (0.5 * xv) * corr;
        return linalg::quad_form(A, arg);
    });
    return r;
}

// Boundary variant: lhs = int c (J_u c) eta^2 with the discrete J_u, rhs uses
// the drift b (not b_hat). c must vanish on the flat boundary wherever the
// cutoff eta is active.
inline GapResult stability_gap_boundary(const Context& c, const DiscreteOperator& Ju,
                                        const ScalarField& cfun, const TestFunction& eta) {
    const Grid& g = *c.grid;
    for (int node = 0; node < g.n_nodes(); ++node)
        if (g.node_class(node) == geometry::NodeClass::FlatBoundary &&
            std::abs(eta.value(g.point(node))) > 1e-14 &&
            std::abs(cfun[node]) > 1e-12 * (1.0 + c.grad_max))
            throw std::invalid_argument("stability_gap_boundary: c does not vanish on the flat boundary");
    std::vector<double> Jc = Ju.apply(cfun);
    GapResult r;
    r.lhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
        int i = g.node_to_interior(node);
        if (i < 0) return 0.0;
        Vec p = g.point(node);
        double ev = eta.value(p);
        return cfun[node] * Jc[i] * ev * ev;
    });
    r.rhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
        Vec p = g.point(node);
        double ev = eta.value(p);
        Vec ge = eta.grad(p);
        if (ev == 0.0 && linalg::norm2(ge) == 0.0) return 0.0;
        Mat A = c.spec->a_at(p);
        Vec b = c.spec->b_at(p);
        Vec corr = linalg::matvec(linalg::inverse(A), b);
        Vec arg = ge - (0.5 * ev) * corr;
        return cfun[node] * cfun[node] * linalg::quad_form(A, arg);
    });
    return r;
}

// c_delta = phi_delta(grad u) - N . grad u, the nonlinearity-free test field.
inline ScalarField c_delta_field(const Context& c, double delta) {
    const Grid& g = *c.grid;
    ScalarField out(g);
    for (int node = 0; node < g.n_nodes(); ++node) {
        Vec gu = c.gh.grad.get(node);
        out[node] = phi_delta(gu, delta, c.A_anchor).value - dot(c.big_n, gu);
    }
    return out;
}

// Smallest anchored gradient norm on the flat boundary inside supp eta: the
// observed slope bound, delta must stay below it for c_delta to vanish there.
inline double observed_hopf_constant(const Context& c, const TestFunction& eta) {
    const Grid& g = *c.grid;
    double hopf = std::numeric_limits<double>::infinity();
    for (int node = 0; node < g.n_nodes(); ++node) {
        if (g.node_class(node) != geometry::NodeClass::FlatBoundary) continue;
        if (std::abs(eta.value(g.point(node))) <= 1e-14) continue;
        hopf = std::min(hopf, linalg::weighted_norm(c.gh.grad.get(node), c.A_anchor));
    }
    return std::isfinite(hopf) ? hopf : 0.0;
}

// ---------------------------------------------------------------------------
// Curvature energy bound: lhs = int A^2 eta^2 against the three-term right
// side (volume gradient terms, Hessian-gradient terms, flat-surface term).
// ---------------------------------------------------------------------------

struct SzzTerms {
    double lhs = 0;
    double vol_grad = 0, vol_hess = 0, surface = 0;
    double rhs() const { return vol_grad + vol_hess + surface; }
};

inline SzzTerms curvature_energy_bound(const Context& c, const TestFunction& eta) {
    const Grid& g = *c.grid;
    const double eps = c.eps;
    SzzTerms t;
    t.lhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
        double ev = eta.value(g.point(node));
        double a = c.curv.value[node];
        return a * a * ev * ev;
    });
    t.vol_grad = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
        Vec p = g.point(node);
        double ev = eta.value(p);
        Vec ge = eta.grad(p);
        Mat he = eta.hess(p);
        // D^2(eta^2) = 2 (grad eta) (grad eta)^T + 2 eta D^2 eta
        Mat d2e2 = 2.0 * he;
        for (int i = 0; i < p.n; ++i)
            for (int j = 0; j < p.n; ++j) d2e2(i, j) = 2.0 * ge[i] * ge[j] + ev * d2e2(i, j);
        double grad_e2 = 2.0 * std::abs(ev) * linalg::norm2(ge);
        double gu = c.grad_norm(node);
        return gu * gu *
               (dot(ge, ge) + linalg::frobenius(d2e2) + eps * grad_e2 + eps * eps * ev * ev);
    });
    t.vol_hess = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
        Vec p = g.point(node);
        double ev = eta.value(p);
        Vec ge = eta.grad(p);
        double grad_e2 = 2.0 * std::abs(ev) * linalg::norm2(ge);
        return c.hess_norm(node) * c.grad_norm(node) * (grad_e2 + eps * ev * ev);
    });
    if (g.is_half_ball()) {
        t.surface = geometry::surface_integral_flat_fn(g, g.domain().radius, [&](int node) {
            Vec p = g.point(node);
            double ev = eta.value(p);
            Vec ge = eta.grad(p);
            double grad_e2 = 2.0 * std::abs(ev) * linalg::norm2(ge);
            double gu = c.grad_norm(node);
            return gu * gu * (grad_e2 + eps * ev * ev);
        });
    }
    return t;
}

// ---------------------------------------------------------------------------
// The four concentric-region estimates of the boundary Hessian suite.
// ---------------------------------------------------------------------------

inline double grad_l2(const Context& c, const Region& reg) {
    return std::sqrt(geometry::volume_integral_fn(*c.grid, reg, [&](int node) {
        double gu = c.grad_norm(node);
        return gu * gu;
    }));
}

inline EstimateReport hessian_suite(const Context& c) {
    const Grid& g = *c.grid;
    if (!g.is_half_ball()) throw std::invalid_argument("hessian_suite: requires a half-ball grid");
    if (!c.f->flagged_nondecreasing())
        throw std::invalid_argument("hessian_suite: f must be flagged nondecreasing");
    EstimateReport rep;
    double gradL2 = grad_l2(c, Region::whole());
    double scale = std::max(1.0, gradL2 * gradL2);

    double bdy = geometry::surface_integral_flat_fn(g, 2.0 / 3.0, [&](int node) {
        double gu = c.grad_norm(node);
        return gu * gu;
    });
    rep.add(make_record("boundary_gradient_l2", "ineq:pohozaev", std::sqrt(bdy), gradL2, scale));

    double hg = geometry::volume_integral_fn(g, Region::half_ball(4.0 / 7.0), [&](int node) {
        return c.hess_norm(node) * c.grad_norm(node);
    });
    rep.add(make_record("hessian_gradient_l1", "ineq:hessgrad", hg, gradL2 * gradL2, scale));

    double a2 = geometry::volume_integral_fn(g, Region::half_ball(0.5), [&](int node) {
        double a = c.curv.value[node];
        return a * a;
    });
    rep.add(make_record("curvature_l2", "ineq:szkinda", std::sqrt(a2), gradL2, scale));

    double h1 = geometry::volume_integral_fn(g, Region::half_ball(4.0 / 7.0),
                                             [&](int node) { return c.hess_norm(node); });
    rep.add(make_record("hessian_l1", "ineq:hessian", h1, gradL2, scale));
    return rep;
}

// ---------------------------------------------------------------------------
// Superharmonic Hessian bounds (test-function form). Requires L u <= tol.
// ---------------------------------------------------------------------------

inline EstimateReport superharmonic_checks(const Context& c, const DiscreteOperator& L,
                                           const TestFunction& zeta) {
    const Grid& g = *c.grid;
    std::vector<double> Lu = L.apply(*c.u);
    double scale = 0;
    for (int i = 0; i < g.n_interior(); ++i) scale = std::max(scale, std::abs(Lu[i]));
    for (int i = 0; i < g.n_interior(); ++i)
        if (Lu[i] > 1e-8 * std::max(1.0, scale))
            throw std::invalid_argument("superharmonic_checks: L u > 0 at an interior node");

    const double eps = c.eps;
    EstimateReport rep;
    auto zeta_terms = [&](int node, double power) {
        Vec p = g.point(node);
        double zv = zeta.value(p);
        double zg = linalg::norm2(zeta.grad(p));
        double gu = c.grad_norm(node);
        return std::pow(gu, power) * (zg + eps * zv);
    };
    {
        double lhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
            return c.hess_norm(node) * zeta.value(g.point(node));
        });
        double rhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
                         return zeta_terms(node, 1.0);
                     }) +
                     geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
                         return c.curv.value[node] * zeta.value(g.point(node));
                     }) +
                     (g.is_half_ball()
                          ? geometry::surface_integral_flat_fn(g, g.domain().radius,
                                                               [&](int node) {
                                                                   return c.grad_norm(node) *
                                                                          zeta.value(g.point(node));
                                                               })
                          : 0.0);
        rep.add(make_record("superharmonic_hessian_l1", "hess:test", lhs, rhs,
                            std::max(1.0, c.grad_max)));
    }
    {
        double lhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
            return c.hess_norm(node) * c.grad_norm(node) * zeta.value(g.point(node));
        });
        double rhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
                         return zeta_terms(node, 2.0);
                     }) +
                     geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
                         return c.curv.value[node] * c.grad_norm(node) * zeta.value(g.point(node));
                     }) +
                     (g.is_half_ball()
                          ? geometry::surface_integral_flat_fn(
                                g, g.domain().radius,
                                [&](int node) {
                                    double gu = c.grad_norm(node);
                                    return gu * gu * zeta.value(g.point(node));
                                })
                          : 0.0);
        rep.add(make_record("superharmonic_hessian_gradient_l1", "hessgrad:test", lhs, rhs,
                            std::max(1.0, c.grad_max * c.grad_max)));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Boundary-gradient identity (divergence form): the flat-boundary integral
//   |e_n|_{A0} int |grad u|^2_{A0} eta^2
// equals the volume integral of div(V) eta^2 + V . grad(eta^2) with
//   V = |grad u|^2_{A0} N - 2 (N . grad u) A0 grad u,
//   div V = -2 (N . grad u) tr(A0 D^2 u).
// ---------------------------------------------------------------------------

struct IdentityResult {
    double lhs = 0, rhs = 0;
    double residual() const { return std::abs(lhs - rhs); }
};

inline IdentityResult boundary_gradient_identity(const Context& c, const TestFunction& eta) {
    const Grid& g = *c.grid;
    if (!g.is_half_ball())
        throw std::invalid_argument("boundary_gradient_identity: requires a half-ball grid");
    IdentityResult r;
    double en = std::sqrt(c.A_anchor(g.lattice_dim() - 1, g.lattice_dim() - 1));
    r.lhs = en * geometry::surface_integral_flat_fn(g, g.domain().radius, [&](int node) {
        Vec gu = c.gh.grad.get(node);
        double ev = eta.value(g.point(node));
        return linalg::quad_form(c.A_anchor, gu) * ev * ev;
    });
    r.rhs = geometry::volume_integral_fn(g, Region::whole(), [&](int node) {
        Vec p = g.point(node);
        double ev = eta.value(p);
        Vec ge = eta.grad(p);
        Vec gu = c.gh.grad.get(node);
        Mat H = c.gh.hess.get(node);
        double ndotg = dot(c.big_n, gu);
        Mat A0H = linalg::matmul(c.A_anchor, H);
        double tr = 0;
        for (int i = 0; i < p.n; ++i) tr += A0H(i, i);
        double divv = -2.0 * ndotg * tr;
        Vec V = linalg::quad_form(c.A_anchor, gu) * c.big_n -
                (2.0 * ndotg) * linalg::matvec(c.A_anchor, gu);
        // grad(eta^2) = 2 eta grad eta
        return divv * ev * ev + 2.0 * ev * dot(V, ge);
    });
    return r;
}

// ---------------------------------------------------------------------------
// Energy ratios.
// ---------------------------------------------------------------------------

inline double admissible_gamma_bound(int n) { return 4.0 / (3.0 * n - 2.0); }

struct EnergyRatio {
    double lhs = 0, rhs = 0, gamma = 0;
    bool gamma_admissible = true;
};

inline EnergyRatio energy_ratio(const Context& c, double gamma) {
    const Grid& g = *c.grid;
    EnergyRatio r;
    r.gamma = gamma;
    r.gamma_admissible = gamma > 0 && gamma < admissible_gamma_bound(g.dim());
    Region inner = g.is_half_ball() ? Region::half_ball(0.5)
                                    : Region::ball(Vec(g.lattice_dim()), 0.5);
    double p = 2.0 + gamma;
    double ip = geometry::volume_integral_fn(
        g, inner, [&](int node) { return std::pow(c.grad_norm(node), p); });
    r.lhs = std::pow(ip, 1.0 / p);
    r.rhs = geometry::volume_integral_fn(g, Region::whole(),
                                         [&](int node) { return std::abs((*c.u)[node]); });
    return r;
}

inline EnergyRatio grad_l2_vs_l1(const Context& c) {
    EnergyRatio r;
    r.gamma = 0.0;
    r.lhs = grad_l2(c, c.grid->is_half_ball() ? Region::half_ball(0.5)
                                              : Region::ball(Vec(c.grid->lattice_dim()), 0.5));
    r.rhs = geometry::volume_integral_fn(*c.grid, Region::whole(),
                                         [&](int node) { return std::abs((*c.u)[node]); });
    return r;
}

// ---------------------------------------------------------------------------
// Level-set bound: sup over level values t of
//   int_{u = t, inner half} |grad u|^2 dH^{n-1} / ||grad u||^2_{L^2}.
// t runs over quantiles of u; near-critical levels are skipped and counted.
// ---------------------------------------------------------------------------

struct LevelsetSweep {
    double max_ratio = 0;
    double max_t = 0;
    int evaluated = 0, skipped = 0;
};

inline LevelsetSweep levelset_sweep(const Context& c, int nt = 32) {
    const Grid& g = *c.grid;
    Region inner = g.is_half_ball() ? Region::half_ball(0.5)
                                    : Region::ball(Vec(g.lattice_dim()), 0.5);
    // quantiles of u over the inner region
    std::vector<double> vals;
    for (int node = 0; node < g.n_nodes(); ++node) {
        Vec p = g.point(node);
        if (linalg::norm2(p) <= 0.5) vals.push_back((*c.u)[node]);
    }
    std::sort(vals.begin(), vals.end());
    if (vals.empty()) throw std::runtime_error("levelset_sweep: empty inner region");

    double denom = 0;
    {
        double gl2 = grad_l2(c, Region::whole());
        denom = gl2 * gl2;
    }
    LevelsetSweep sweep;
    ScalarField w(g);
    for (int node = 0; node < g.n_nodes(); ++node) {
        double gu = c.grad_norm(node);
        w[node] = gu * gu;
    }
    for (int k = 1; k <= nt; ++k) {
        double t = vals[static_cast<size_t>((vals.size() - 1) * k / (nt + 1.0))];
        if (t <= vals.front() || t >= vals.back()) continue;
        try {
            double surf = geometry::levelset_surface_integral(*c.u, w, c.gh.grad, t, inner);
            ++sweep.evaluated;
            double ratio = denom > 0 ? surf / denom : 0.0;
            if (ratio > sweep.max_ratio) {
                sweep.max_ratio = ratio;
                sweep.max_t = t;
            }
        } catch (const std::runtime_error&) {
            ++sweep.skipped;
        }
    }
    return sweep;
}

}  // namespace stablab::estimators
