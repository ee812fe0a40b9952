// Nonlinear solves of -L u = lambda f(u) + g with homogeneous Dirichlet
// data: damped Newton, sub/supersolution monotone iteration, principal
// eigenvalue of the linearization by shifted inverse power iteration, and
// branch continuation in lambda with fold detection.
#pragma once

#include <algorithm>
#include <functional>
#include <optional>

#include "stablab/operators.hpp"

namespace stablab::solver {

using exprlang::Nonlinearity;
using geometry::Grid;
using geometry::ScalarField;
using linalg::Vec;
using operators::CoefficientSpec;
using operators::DiscreteOperator;

struct SolverOptions {
    double newton_rtol = 1e-10;
    int newton_max_iter = 50;
    int newton_max_halvings = 10;
    double eig_tol = 1e-10;
    int eig_max_iter = 1000;
    double monotone_rtol = 1e-8;
    int monotone_max_iter = 2000;
};

struct Problem {
    const Grid* grid = nullptr;
    CoefficientSpec coeffs;
    Nonlinearity f;
    double lambda = 0.0;
    std::function<double(const Vec&)> source;  // optional g
    SolverOptions opts;

    Problem() = default;
    Problem(const Grid& g, CoefficientSpec spec, Nonlinearity nl, double lam,
            std::function<double(const Vec&)> src = nullptr)
        : grid(&g), coeffs(std::move(spec)), f(std::move(nl)), lambda(lam), source(std::move(src)) {
        if (lambda < 0) throw std::invalid_argument("Problem: lambda must be nonnegative");
        if (!coeffs.audited) coeffs.audit(g);
    }
};

struct SolveFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NewtonResult {
    ScalarField u;
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline std::vector<double> source_vector(const Problem& p) {
    const Grid& g = *p.grid;
    std::vector<double> s(g.n_interior(), 0.0);
    if (p.source)
        for (int i = 0; i < g.n_interior(); ++i) s[i] = p.source(g.point(g.interior_to_node(i)));
    return s;
}

inline double inf_norm(std::span<const double> v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// residual r = L u + lambda f(u) + g on interior nodes
inline std::vector<double> residual(const Problem& p, const DiscreteOperator& L,
                                    const ScalarField& u, std::span<const double> g_vec) {
    const Grid& g = *p.grid;
    std::vector<double> r = L.apply(u);
    for (int i = 0; i < g.n_interior(); ++i)
        r[i] += p.lambda * p.f.value(u[g.interior_to_node(i)]) + g_vec[i];
    return r;
}

inline double residual_scale(const Problem& p, const DiscreteOperator& L, const ScalarField& u,
                             std::span<const double> g_vec) {
    const Grid& g = *p.grid;
    double s = 1.0;
    std::vector<double> lu = L.apply(u);
    s = std::max(s, inf_norm(lu));
    double fs = 0;
    for (int i = 0; i < g.n_interior(); ++i)
        fs = std::max(fs, std::abs(p.lambda * p.f.value(u[g.interior_to_node(i)]) + g_vec[i]));
    return std::max(s, fs);
}

}  // namespace detail

inline NewtonResult solve_newton_detailed(const Problem& p, const ScalarField& u0,
                                          const DiscreteOperator* L_pre = nullptr) {
    const Grid& g = *p.grid;
    const SolverOptions& o = p.opts;
    DiscreteOperator L_local;
    const DiscreteOperator* L = L_pre;
    if (!L) {
        L_local = operators::assemble_L(p.coeffs, g);
        L = &L_local;
    }
    std::vector<double> g_vec = detail::source_vector(p);

    ScalarField u = u0;
    for (int node = 0; node < g.n_nodes(); ++node)
        if (g.is_boundary(node)) u[node] = 0.0;  // homogeneous Dirichlet

    std::vector<double> r = detail::residual(p, *L, u, g_vec);
    double rnorm = detail::inf_norm(r);
    for (int it = 0; it < o.newton_max_iter; ++it) {
        double scale = detail::residual_scale(p, *L, u, g_vec);
        if (rnorm <= o.newton_rtol * scale) return {u, it, rnorm};

        DiscreteOperator J = operators::assemble_Ju(*L, p.f, u, p.lambda);
        auto lu = linalg::BandedLU::factor(J.matrix());
        if (!lu) throw SolveFailure("solve_newton: singular Jacobian");
        std::vector<double> d(r);
        for (double& x : d) x = -x;
        lu->solve_inplace(d);

        double alpha = 1.0;
        ScalarField u_try = u;
        std::vector<double> r_try;
        double rnorm_try = 0;
        int halvings = 0;
        for (;;) {
            for (int i = 0; i < g.n_interior(); ++i)
                u_try[g.interior_to_node(i)] = u[g.interior_to_node(i)] + alpha * d[i];
            bool finite = true;
            for (int i = 0; i < g.n_interior() && finite; ++i)
                if (!std::isfinite(u_try[g.interior_to_node(i)])) finite = false;
            if (finite) {
                try {
                    r_try = detail::residual(p, *L, u_try, g_vec);
                    rnorm_try = detail::inf_norm(r_try);
                    if (rnorm_try <= (1.0 - 0.25 * alpha) * rnorm) break;
                } catch (const exprlang::DomainError&) {
                    // step left the nonlinearity's domain; damp further
                }
            }
            if (++halvings > o.newton_max_halvings)
                throw SolveFailure("solve_newton: divergence (residual not reduced)");
            alpha *= 0.5;
        }
        u = u_try;
        r = std::move(r_try);
        rnorm = rnorm_try;
    }
    double scale = detail::residual_scale(p, *L, u, g_vec);
    if (rnorm <= p.opts.newton_rtol * scale)
        return {u, p.opts.newton_max_iter, rnorm};
    throw SolveFailure("solve_newton: no convergence within iteration budget");
}

inline ScalarField solve_newton(const Problem& p, const ScalarField& u0) {
    return solve_newton_detailed(p, u0).u;
}

// ---------------------------------------------------------------------------
// Monotone iteration between a discrete subsolution and an upper bracket.
// Solves (L - K) u_{k+1} = -lambda f(u_k) - K u_k with K = lambda max f' on
// the bracket range; iterates increase from `lower` to the minimal solution.
// ---------------------------------------------------------------------------

struct HypothesisViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline ScalarField monotone_iteration(const Problem& p, const ScalarField& lower,
                                      const ScalarField& upper) {
    const Grid& g = *p.grid;
    if (p.source) throw std::invalid_argument("monotone_iteration: manufactured sources unsupported");
    if (!p.f.flagged_nondecreasing())
        throw HypothesisViolation("monotone_iteration: f must be flagged nondecreasing");
    const double tol = 1e-12;
    for (int node = 0; node < g.n_nodes(); ++node)
        if (lower[node] > upper[node] + tol)
            throw HypothesisViolation("monotone_iteration: lower exceeds upper");

    DiscreteOperator L = operators::assemble_L(p.coeffs, g);
    std::vector<double> zero_src(g.n_interior(), 0.0);
    {
        std::vector<double> r = detail::residual(p, L, lower, zero_src);
        double scale = detail::residual_scale(p, L, lower, zero_src);
        for (double x : r)
            if (x < -1e-8 * scale)
                throw HypothesisViolation("monotone_iteration: lower is not a discrete subsolution");
    }

    double lo = lower.min(), hi = upper.max();
    double K = 0.0;
    for (int s = 0; s <= 500; ++s) {
        double u = lo + (hi - lo) * s / 500.0;
        K = std::max(K, p.lambda * p.f.deriv(u));
    }
    DiscreteOperator M = L;
    M.add_identity(-K);
    auto lu = linalg::BandedLU::factor(M.matrix());
    if (!lu) throw SolveFailure("monotone_iteration: shifted operator singular");

    ScalarField u = lower;
    for (int node = 0; node < g.n_nodes(); ++node)
        if (g.is_boundary(node)) u[node] = 0.0;
    for (int it = 0; it < p.opts.monotone_max_iter; ++it) {
        std::vector<double> rhs(g.n_interior());
        for (int i = 0; i < g.n_interior(); ++i) {
            double ui = u[g.interior_to_node(i)];
            rhs[i] = -p.lambda * p.f.value(ui) - K * ui;
        }
        // boundary couplings act on u = 0, nothing to move
        lu->solve_inplace(rhs);
        ScalarField u_next = u;
        for (int i = 0; i < g.n_interior(); ++i) u_next[g.interior_to_node(i)] = rhs[i];

        for (int node = 0; node < g.n_nodes(); ++node) {
            if (u_next[node] < u[node] - 1e-10 * (1 + std::abs(u[node])))
                throw HypothesisViolation("monotone_iteration: iterate lost monotonicity");
            if (u_next[node] > upper[node] + tol)
                throw HypothesisViolation("monotone_iteration: iterate exits [lower, upper]");
        }
        u = u_next;
        std::vector<double> r = detail::residual(p, L, u, zero_src);
        double scale = detail::residual_scale(p, L, u, zero_src);
        if (detail::inf_norm(r) <= p.opts.monotone_rtol * scale) return u;
    }
    throw SolveFailure("monotone_iteration: no convergence within iteration budget");
}

// ---------------------------------------------------------------------------
// Principal eigenvalue of J with the convention J phi = -mu phi, i.e. mu is
// the lowest eigenvalue of -J. Shifted inverse power iteration; the shift
// sits below the spectrum by a Gershgorin bound. Positivity of phi is
// verified a posteriori and reported.
// ---------------------------------------------------------------------------

struct Eigenpair {
    double mu = 0.0;
    ScalarField phi;
    bool positive = false;
    double residual = 0.0;  // ||J phi + mu phi||_inf with ||phi||_inf = 1
    double op_norm = 0.0;   // ||J||_inf, the natural residual scale
    int iterations = 0;
};

inline Eigenpair principal_eigenvalue(const DiscreteOperator& J, const SolverOptions& o = {}) {
    const Grid& g = J.grid();
    const int n = g.n_interior();
    linalg::BandedMatrix M(n, J.matrix().kl, J.matrix().ku);
    for (int j = 0; j < n; ++j) {
        int ilo = std::max(0, j - M.ku), ihi = std::min(n - 1, j + M.kl);
        for (int i = ilo; i <= ihi; ++i) {
            double v = J.matrix().get(i, j);
            if (v != 0.0) M.set(i, j, -v);
        }
    }
    double lower = M.gershgorin_lower();
    double margin = 1.0;
    std::optional<linalg::BandedLU> lu;
    double sigma = 0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        sigma = lower - margin;
        linalg::BandedMatrix shifted = M;
        for (int i = 0; i < n; ++i) shifted.add(i, i, -sigma);
        lu = linalg::BandedLU::factor(shifted);
        if (lu && lu->min_abs_pivot() > 1e-14) break;
        lu.reset();
        margin *= 2.0;
    }
    if (!lu) throw SolveFailure("principal_eigenvalue: could not factor shifted operator");

    double op_norm = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0;
        int jlo = std::max(0, i - M.kl), jhi = std::min(n - 1, i + M.ku);
        for (int j = jlo; j <= jhi; ++j) row += std::abs(M.get(i, j));
        op_norm = std::max(op_norm, row);
    }

    std::vector<double> v(n, 1.0);
    double mu = 0, mu_prev = std::numeric_limits<double>::infinity();
    double res = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < o.eig_max_iter; ++it) {
        std::vector<double> y = lu->solve(v);
        double vy = 0, vv = 0;
        for (int i = 0; i < n; ++i) vy += v[i] * y[i], vv += v[i] * v[i];
        if (vy == 0) throw SolveFailure("principal_eigenvalue: iteration stagnation");
        mu = sigma + vv / vy;
        double ymax = 0;
        int imax = 0;
        for (int i = 0; i < n; ++i)
            if (std::abs(y[i]) > ymax) ymax = std::abs(y[i]), imax = i;
        if (ymax == 0) throw SolveFailure("principal_eigenvalue: iteration stagnation");
        double s = (y[imax] > 0 ? 1.0 : -1.0) / ymax;
        for (int i = 0; i < n; ++i) v[i] = y[i] * s;
        if (std::abs(mu - mu_prev) <= o.eig_tol * std::max(1.0, std::abs(mu))) {
            std::vector<double> Mv = M.matvec(v);
            res = 0;
            for (int i = 0; i < n; ++i) res = std::max(res, std::abs(Mv[i] - mu * v[i]));
            if (res <= 1e-8 * op_norm) break;
        }
        mu_prev = mu;
    }
    if (it == o.eig_max_iter) throw SolveFailure("principal_eigenvalue: iteration stagnation");

    Eigenpair e;
    e.mu = mu;
    e.iterations = it;
    e.op_norm = op_norm;
    e.phi = ScalarField(g);
    for (int i = 0; i < n; ++i) e.phi[g.interior_to_node(i)] = v[i];
    e.residual = res;
    e.positive = true;
    for (int i = 0; i < n; ++i)
        if (v[i] <= 0) e.positive = false;
    return e;
}

// ---------------------------------------------------------------------------
// Branch continuation.
// ---------------------------------------------------------------------------

struct BranchPoint {
    double lambda;
    ScalarField u;
    double mu1;
    int newton_iters;
    double residual;
    bool stable;
};

struct Branch {
    std::vector<BranchPoint> points;
    double lambda_star = 0.0;  // last accepted stable lambda
};

struct StepPolicy {
    double lambda0 = 0.05;
    double step0 = 0.05;
    double grow = 1.4;
    double step_min_rel = 1e-6;
    int max_points = 400;
    double eig_tol_rel = 1e-6;  // stability tolerance vs mu1 at the branch foot
    bool arclength = false;
    int arclength_points = 0;
    double arclength_ds = 0.0;  // 0: derived from the last natural step
};

inline Branch trace_branch(Problem p, const StepPolicy& policy = {}) {
    const Grid& g = *p.grid;
    DiscreteOperator L = operators::assemble_L(p.coeffs, g);
    Branch br;
    ScalarField u(g);

    double mu_scale = 0.0;
    auto try_point = [&](double lambda, const ScalarField& from,
                         double stab_tol) -> std::optional<BranchPoint> {
        Problem q = p;
        q.lambda = lambda;
        try {
            NewtonResult r = solve_newton_detailed(q, from, &L);
            DiscreteOperator J = operators::assemble_Ju(L, p.f, r.u, lambda);
            Eigenpair e = principal_eigenvalue(J, p.opts);
            BranchPoint pt{lambda, std::move(r.u), e.mu, r.iterations, r.residual,
                           e.mu >= -stab_tol && e.positive};
            return pt;
        } catch (const SolveFailure&) {
            return std::nullopt;
        }
    };

    // first point
    double lambda = policy.lambda0;
    std::optional<BranchPoint> first;
    for (int k = 0; k < 30 && !first; ++k) {
        first = try_point(lambda, u, std::numeric_limits<double>::infinity());
        if (!first) lambda *= 0.5;
    }
    if (!first) throw SolveFailure("trace_branch: no starting point found");
    mu_scale = std::abs(first->mu1);
    double stab_tol = policy.eig_tol_rel * std::max(mu_scale, 1e-30);
    first->stable = first->mu1 >= -stab_tol;
    if (!first->stable) throw SolveFailure("trace_branch: starting point is already unstable");
    u = first->u;
    br.points.push_back(std::move(*first));

    double step = policy.step0;
    while (static_cast<int>(br.points.size()) < policy.max_points &&
           step >= policy.step_min_rel * std::max(lambda, policy.lambda0)) {
        double target = lambda + step;
        std::optional<BranchPoint> pt = try_point(target, u, stab_tol);
        if (pt && pt->stable) {
            lambda = target;
            u = pt->u;
            br.points.push_back(std::move(*pt));
            step *= policy.grow;
        } else {
            step *= 0.5;
        }
    }
    br.lambda_star = lambda;

    if (policy.arclength && br.points.size() >= 2 && policy.arclength_points > 0) {
        // Keller pseudo-arclength around the fold; unknowns (u, lambda).
        std::vector<double> g_vec(g.n_interior(), 0.0);
        auto& pts = br.points;
        const int n = g.n_interior();
        auto interior_of = [&](const ScalarField& f) {
            std::vector<double> x(n);
            for (int i = 0; i < n; ++i) x[i] = f[g.interior_to_node(i)];
            return x;
        };
        std::vector<double> u1 = interior_of(pts.back().u);
        std::vector<double> u0 = interior_of(pts[pts.size() - 2].u);
        double l1 = pts.back().lambda, l0 = pts[pts.size() - 2].lambda;
        double ds = 0.0;
        std::vector<double> tu(n);
        for (int i = 0; i < n; ++i) tu[i] = u1[i] - u0[i], ds += tu[i] * tu[i];
        double tl = l1 - l0;
        ds = std::sqrt(ds + tl * tl);
        for (double& x : tu) x /= ds;
        tl /= ds;
        if (policy.arclength_ds > 0) ds = policy.arclength_ds;

        std::vector<double> uc = u1;
        double lc = l1;
        for (int kpt = 0; kpt < policy.arclength_points; ++kpt) {
            std::vector<double> up(n);
            for (int i = 0; i < n; ++i) up[i] = uc[i] + ds * tu[i];
            double lp = lc + ds * tl;
            ScalarField uf(g);
            bool ok = true;
            for (int newt = 0; newt < p.opts.newton_max_iter; ++newt) {
                for (int i = 0; i < n; ++i) uf[g.interior_to_node(i)] = up[i];
                Problem q = p;
                q.lambda = lp;
                std::vector<double> F = detail::residual(q, L, uf, g_vec);
                double nc = -0.0;
                {
                    double acc = 0;
                    for (int i = 0; i < n; ++i) acc += tu[i] * (up[i] - (uc[i] + ds * tu[i]));
                    acc += tl * (lp - (lc + ds * tl));
                    nc = acc;
                }
                double scale = detail::residual_scale(q, L, uf, g_vec);
                if (detail::inf_norm(F) <= p.opts.newton_rtol * scale && std::abs(nc) <= 1e-12 * (1 + ds))
                    break;
                DiscreteOperator J = operators::assemble_Ju(L, p.f, uf, lp);
                auto lu = linalg::BandedLU::factor(J.matrix());
                if (!lu) {
                    ok = false;
                    break;
                }
                std::vector<double> a(F);
                for (double& x : a) x = -x;
                lu->solve_inplace(a);
                std::vector<double> b(n);
                for (int i = 0; i < n; ++i) b[i] = -p.f.value(uf[g.interior_to_node(i)]);
                lu->solve_inplace(b);
                double tub = 0, tua = 0;
                for (int i = 0; i < n; ++i) tub += tu[i] * b[i], tua += tu[i] * a[i];
                double denom = tl + tub;
                if (denom == 0) {
                    ok = false;
                    break;
                }
                double dl = -(nc + tua) / denom;
                for (int i = 0; i < n; ++i) up[i] += a[i] + dl * b[i];
                lp += dl;
                if (newt == p.opts.newton_max_iter - 1) ok = false;
            }
            if (!ok) break;
            // new tangent from the secant
            double nds = 0;
            for (int i = 0; i < n; ++i) {
                double d = up[i] - uc[i];
                nds += d * d;
            }
            nds = std::sqrt(nds + (lp - lc) * (lp - lc));
            if (nds == 0) break;
            for (int i = 0; i < n; ++i) tu[i] = (up[i] - uc[i]) / nds;
            tl = (lp - lc) / nds;
            uc = up;
            lc = lp;
            for (int i = 0; i < n; ++i) uf[g.interior_to_node(i)] = uc[i];
            DiscreteOperator J = operators::assemble_Ju(L, p.f, uf, lc);
            Eigenpair e = principal_eigenvalue(J, p.opts);
            br.points.push_back({lc, uf, e.mu, 0, 0.0, e.mu >= -stab_tol && e.positive});
        }
    }
    return br;
}

// ---------------------------------------------------------------------------
// Stability of the singular profile u* = -2 log r for -Delta u = lambda e^u,
// lambda = 2(n-2): sign of the quadratic form
//   Q(xi) = int (|xi'|^2 - (2(n-2)/r^2) xi^2) r^{n-1} dr
// over discrete test functions on (r_min, 1) with Dirichlet ends, decided by
// the inertia of the tridiagonal form matrix.
// ---------------------------------------------------------------------------

enum class StabilitySign { Stable, Unstable };

inline StabilitySign radial_singular_stability(int n, double tol = 1e-8, double r_min = 1e-4,
                                               int n_cells = 200000) {
    if (n < 3 || n > 15) throw std::invalid_argument("radial_singular_stability: n must be in 3..15");
    const double h = (1.0 - r_min) / n_cells;
    const double c = 2.0 * (n - 2);
    const int m = n_cells - 1;  // interior nodes
    // form matrix scaled symmetrically by the mass weights r_i^{n-1} h, so
    // rows keep comparable magnitudes across thirty orders of r^{n-1}
    std::vector<double> diag(m), off(m - 1);
    for (int i = 0; i < m; ++i) {
        double r = r_min + (i + 1) * h;
        double wp = std::pow((r + 0.5 * h) / r, n - 1) / (h * h);
        double wm = std::pow((r - 0.5 * h) / r, n - 1) / (h * h);
        diag[i] = wp + wm - c / (r * r);
        if (i + 1 < m) {
            double rn = r + h;
            off[i] = -std::pow(r + 0.5 * h, n - 1) /
                     (h * h * std::sqrt(std::pow(r, n - 1.0) * std::pow(rn, n - 1.0)));
        }
    }
    // threshold on the natural scale of the potential term
    double tau = -tol * c / (r_min * r_min);
    int below = linalg::tridiag_count_below(diag, off, tau);
    return below > 0 ? StabilitySign::Unstable : StabilitySign::Stable;
}

}  // namespace stablab::solver
