// Discrete elliptic operators: central-difference assembly of L and the
// linearization J_u over interior nodes, the radial (conservative) variant,
// and boundary flattening by the graph shear.
#pragma once

#include <tuple>

#include "stablab/coefficients.hpp"
#include "stablab/nonlinearity.hpp"

namespace stablab::operators {

using geometry::NodeClass;

struct StencilError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sparse operator over interior nodes plus explicit couplings to boundary
// nodes (so residuals of fields with inhomogeneous boundary values work).
class DiscreteOperator {
  public:
    DiscreteOperator() = default;

    const Grid& grid() const { return *grid_; }
    const linalg::BandedMatrix& matrix() const { return mat_; }
    linalg::BandedMatrix& matrix() { return mat_; }

    // y = (L u) restricted to interior nodes; boundary values come from u.
    std::vector<double> apply(const ScalarField& u) const {
        const Grid& g = *grid_;
        std::vector<double> x(g.n_interior());
        for (int i = 0; i < g.n_interior(); ++i) x[i] = u[g.interior_to_node(i)];
        std::vector<double> y = mat_.matvec(x);
        for (const auto& [row, node, coeff] : boundary_) y[row] += coeff * u[node];
        return y;
    }

    std::vector<double> apply_interior(std::span<const double> x) const { return mat_.matvec(x); }

    void add_diagonal(std::span<const double> d) {
        for (int i = 0; i < mat_.n; ++i) mat_.add(i, i, d[i]);
    }
    void add_identity(double c) {
        for (int i = 0; i < mat_.n; ++i) mat_.add(i, i, c);
    }

    static DiscreteOperator from_triplets(const Grid& g,
                                          const std::vector<std::tuple<int, int, double>>& interior,
                                          std::vector<std::tuple<int, int, double>> boundary) {
        DiscreteOperator op;
        op.grid_ = &g;
        int bw = 0;
        for (const auto& [i, j, v] : interior) bw = std::max(bw, std::abs(i - j));
        op.mat_ = linalg::BandedMatrix(g.n_interior(), bw, bw);
        for (const auto& [i, j, v] : interior) op.mat_.add(i, j, v);
        op.boundary_ = std::move(boundary);
        return op;
    }

    const std::vector<std::tuple<int, int, double>>& boundary_couplings() const { return boundary_; }

  private:
    const Grid* grid_ = nullptr;
    linalg::BandedMatrix mat_;
    std::vector<std::tuple<int, int, double>> boundary_;
};

namespace detail {

inline void add_entry(const Grid& g, int row, int node, double v,
                      std::vector<std::tuple<int, int, double>>& interior,
                      std::vector<std::tuple<int, int, double>>& boundary) {
    int j = g.node_to_interior(node);
    if (j >= 0) interior.emplace_back(row, j, v);
    else boundary.emplace_back(row, node, v);
}

inline DiscreteOperator assemble_radial_laplacian(const Grid& g) {
    const int n = g.dim();
    const double h = g.h();
    const double rmin = g.domain().radial_rmin;
    std::vector<std::tuple<int, int, double>> in, bnd;
    for (int i = 0; i < g.n_interior(); ++i) {
        int node = g.interior_to_node(i);
        double r = g.radial_r(node);
        double rp = r + 0.5 * h, rm = r - 0.5 * h;
        double vol = (std::pow(rp, n) - std::pow(rm, n)) / n;
        double wp = std::pow(rp, n - 1) / h;
        int up = g.neighbor(node, 0, +1);
        add_entry(g, i, up, wp / vol, in, bnd);
        in.emplace_back(i, i, -wp / vol);
        int dn = g.neighbor(node, 0, -1);
        if (dn >= 0) {
            double wm = std::pow(rm, n - 1) / h;
            add_entry(g, i, dn, wm / vol, in, bnd);
            in.emplace_back(i, i, -wm / vol);
        } else if (rmin > 0.0) {
            // Dirichlet truncation at r = rmin (ghost value 0)
            double wm = std::pow(rm, n - 1) / h;
            in.emplace_back(i, i, -wm / vol);
        } else {
            // first node above the origin: inner flux from the even
            // quadratic fit u'(h/2) ~ (u_2 - u_1)/(3h), exact on even
            // quadratics
            double wm = std::pow(rm, n - 1) / (3 * h);
            add_entry(g, i, up, -wm / vol, in, bnd);
            in.emplace_back(i, i, wm / vol);
        }
    }
    return DiscreteOperator::from_triplets(g, in, std::move(bnd));
}

}  // namespace detail

// Row at x implements a_ij(x) d2_ij + b_i(x) d_i with central differences;
// mixed terms use the symmetric 4-point cross stencil.
inline DiscreteOperator assemble_L(const CoefficientSpec& spec, const Grid& g) {
    const int d = spec.dim();
    if (g.is_radial()) {
        // radial mode supports the isotropic Laplacian only
        std::vector<double> zeros(d, 0.0);
        bool ident = spec.is_constant();
        for (int i = 0; i < d && ident; ++i)
            for (int j = i; j < d && ident; ++j)
                if (std::abs(spec.a(i, j).eval(zeros) - (i == j ? 1.0 : 0.0)) > 1e-14) ident = false;
        for (int i = 0; i < d && ident; ++i)
            if (std::abs(spec.b(i).eval(zeros)) > 1e-14) ident = false;
        if (!ident) throw std::invalid_argument("radial grids support A = I, b = 0 only");
        return detail::assemble_radial_laplacian(g);
    }
    if (d != g.lattice_dim()) throw std::invalid_argument("coefficient dimension mismatch");
    const double h = g.h();
    std::vector<std::tuple<int, int, double>> in, bnd;
    for (int i = 0; i < g.n_interior(); ++i) {
        int node = g.interior_to_node(i);
        Vec x = g.point(node);
        Mat A = spec.a_at(x);
        Vec b = spec.b_at(x);
        double diag = 0.0;
        for (int k = 0; k < d; ++k) {
            int up = g.neighbor(node, k, +1);
            int dn = g.neighbor(node, k, -1);
            // interior nodes always have both axis neighbors non-exterior
            double c2 = A(k, k) / (h * h), c1 = b[k] / (2 * h);
            detail::add_entry(g, i, up, c2 + c1, in, bnd);
            detail::add_entry(g, i, dn, c2 - c1, in, bnd);
            diag -= 2 * c2;
        }
        for (int k = 0; k < d; ++k)
            for (int l = k + 1; l < d; ++l) {
                if (A(k, l) == 0.0) continue;
                double c = 2.0 * A(k, l) / (4 * h * h);  // a_kl + a_lk
                int pp = g.neighbor(g.neighbor(node, k, +1), l, +1);
                int mm = g.neighbor(g.neighbor(node, k, -1), l, -1);
                int pm = g.neighbor(g.neighbor(node, k, +1), l, -1);
                int mp = g.neighbor(g.neighbor(node, k, -1), l, +1);
                if (pp < 0 || mm < 0 || pm < 0 || mp < 0)
                    throw StencilError("mixed-derivative stencil reaches an exterior node; refine the grid");
                detail::add_entry(g, i, pp, c, in, bnd);
                detail::add_entry(g, i, mm, c, in, bnd);
                detail::add_entry(g, i, pm, -c, in, bnd);
                detail::add_entry(g, i, mp, -c, in, bnd);
            }
        in.emplace_back(i, i, diag);
    }
    return DiscreteOperator::from_triplets(g, in, std::move(bnd));
}

// J_u = L + lambda f'(u) as a diagonal update.
inline DiscreteOperator assemble_Ju(const DiscreteOperator& L, const exprlang::Nonlinearity& f,
                                    const ScalarField& u, double lambda) {
    DiscreteOperator J = L;
    const Grid& g = L.grid();
    std::vector<double> d(g.n_interior());
    for (int i = 0; i < g.n_interior(); ++i) d[i] = lambda * f.deriv(u[g.interior_to_node(i)]);
    J.add_diagonal(d);
    return J;
}

// ---------------------------------------------------------------------------
// Boundary flattening. For the graph shear Phi(x) = (x', x_n - gamma(x')) the
// transformed coefficients are
//   a~_kl = (DPhi A DPhi^T)_kl o Phi^{-1},
//   b~_k  = (b . grad Phi_k + a_ij d2_ij Phi_k) o Phi^{-1};
// only b~_n picks up the Hessian of gamma.
// ---------------------------------------------------------------------------

inline Expr compose_with_graph_inverse(const Expr& e, const Expr& gamma_full,
                                       const std::vector<std::string>& sig) {
    // substitute x_n -> x_n + gamma(x')
    std::string xn = sig.back();
    Expr repl = Expr::variable(xn, sig) + gamma_full;
    return e.substituted(xn, repl, sig);
}

inline CoefficientSpec flatten(const Expr& gamma, const CoefficientSpec& spec) {
    const int n = spec.dim();
    auto sig = CoefficientSpec::coords(n);
    if (gamma.nonsmooth())
        throw std::invalid_argument("flatten: boundary graph must be twice differentiable");
    // lift gamma (a function of x1..x_{n-1}) to the full coordinate list
    Expr zero = Expr::constant(0.0, sig);
    Expr gfull = gamma.substituted("", zero, sig);
    std::vector<Expr> dg, d2g;  // gradient and upper-triangle Hessian of gamma
    for (int i = 0; i < n - 1; ++i) dg.push_back(gfull.derivative(sig[i]));
    for (int i = 0; i < n - 1; ++i)
        for (int j = i; j < n - 1; ++j) d2g.push_back(dg[i].derivative(sig[j]));
    auto d2g_at = [&](int i, int j) {
        if (i > j) std::swap(i, j);
        return d2g[i * (n - 1) - i * (i - 1) / 2 + (j - i)];
    };

    auto compose = [&](const Expr& e) { return compose_with_graph_inverse(e, gfull, sig); };

    std::vector<Expr> a_new, b_new;
    for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
            Expr e = zero;
            if (k < n - 1 && l < n - 1) {
                e = spec.a(k, l);
            } else if (k < n - 1) {  // l == n-1
                e = spec.a(k, n - 1);
                for (int j = 0; j < n - 1; ++j) e = e - spec.a(k, j) * dg[j];
            } else {  // k == l == n-1
                e = spec.a(n - 1, n - 1);
                for (int j = 0; j < n - 1; ++j)
                    e = e - Expr::constant(2.0, sig) * spec.a(n - 1, j) * dg[j];
                for (int i = 0; i < n - 1; ++i)
                    for (int j = 0; j < n - 1; ++j) e = e + spec.a(i, j) * dg[i] * dg[j];
            }
            a_new.push_back(compose(e));
        }
    for (int k = 0; k < n; ++k) {
        Expr e = spec.b(k);
        if (k == n - 1) {
            for (int i = 0; i < n - 1; ++i) e = e - spec.b(i) * dg[i];
            for (int i = 0; i < n - 1; ++i)
                for (int j = 0; j < n - 1; ++j) {
                    Expr term = spec.a(i, j) * d2g_at(i, j);
                    e = e - term;
                }
        }
        b_new.push_back(compose(e));
    }
    // the transformed coefficients have their own ellipticity and smallness
    // constants; callers audit the result before use
    return CoefficientSpec(n, std::move(a_new), std::move(b_new));
}

}  // namespace stablab::operators
