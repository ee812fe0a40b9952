// Elliptic operator coefficients L = a_ij(x) d_ij + b_i(x) d_i: symbolic
// entries, hypothesis audits (ellipticity constants, Lipschitz smallness),
// and the derived objects b_hat, N, n(x).
#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stablab/expr.hpp"
#include "stablab/grid.hpp"
#include "stablab/linalg.hpp"

namespace stablab::operators {

using exprlang::Expr;
using geometry::Grid;
using geometry::ScalarField;
using geometry::VecField;
using linalg::Mat;
using linalg::Vec;

struct AuditReport {
    double c0 = 0, C0 = 0;    // sampled ellipticity bounds
    double eps = 0;           // sampled max of ||DA|| + ||b||
    int samples = 0;
};

class CoefficientSpec {
  public:
    // Symmetry is structural: only entries i <= j are stored.
    CoefficientSpec() = default;
    CoefficientSpec(int dim, std::vector<Expr> a_upper, std::vector<Expr> b)
        : dim_(dim), a_(std::move(a_upper)), b_(std::move(b)) {
        if (static_cast<int>(a_.size()) != dim * (dim + 1) / 2)
            throw std::invalid_argument("CoefficientSpec: expected n(n+1)/2 upper-triangle entries");
        if (static_cast<int>(b_.size()) != dim)
            throw std::invalid_argument("CoefficientSpec: expected n drift entries");
    }

    static std::vector<std::string> coords(int dim) {
        std::vector<std::string> sig;
        for (int k = 1; k <= dim; ++k) sig.push_back("x" + std::to_string(k));
        return sig;
    }

    static CoefficientSpec laplacian(int dim) {
        std::vector<Expr> a, b;
        auto sig = coords(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) a.push_back(Expr::constant(i == j ? 1.0 : 0.0, sig));
        for (int i = 0; i < dim; ++i) b.push_back(Expr::constant(0.0, sig));
        return CoefficientSpec(dim, std::move(a), std::move(b));
    }

    static CoefficientSpec from_strings(int dim, const std::vector<std::vector<std::string>>& a,
                                        const std::vector<std::string>& b) {
        auto sig = coords(dim);
        std::vector<Expr> au, bv;
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) {
                if (a[i][j] != a[j][i])
                    throw std::invalid_argument("coefficient matrix entries must be symmetric");
                au.push_back(Expr::parse(a[i][j], sig));
            }
        for (int i = 0; i < dim; ++i) bv.push_back(Expr::parse(b[i], sig));
        return CoefficientSpec(dim, std::move(au), std::move(bv));
    }

    int dim() const { return dim_; }
    const Expr& a(int i, int j) const { return a_[tri(i, j)]; }
    const Expr& b(int i) const { return b_[i]; }

    Mat a_at(const Vec& x) const {
        Mat m(dim_);
        std::span<const double> xs(x.v.data(), dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = i; j < dim_; ++j) m(i, j) = m(j, i) = a_[tri(i, j)].eval(xs);
        return m;
    }
    Vec b_at(const Vec& x) const {
        Vec v(dim_);
        std::span<const double> xs(x.v.data(), dim_);
        for (int i = 0; i < dim_; ++i) v[i] = b_[i].eval(xs);
        return v;
    }

    bool is_constant() const {
        auto sig = coords(dim_);
        for (const auto& e : a_)
            for (const auto& v : sig)
                if (e.depends_on(v)) return false;
        for (const auto& e : b_)
            for (const auto& v : sig)
                if (e.depends_on(v)) return false;
        return true;
    }

    // declared constants; audit() fills them from samples when not asserted
    double c0 = 0.0, C0 = 0.0, eps = 0.0;
    bool audited = false;

    // Samples ellipticity over grid nodes plus random points and measures the
    // Lipschitz/drift smallness by finite differences of a_ij.
    AuditReport audit(const Grid& grid, uint64_t seed = 1, int random_samples = 2000) {
        std::mt19937_64 rng(seed);
        AuditReport rep;
        rep.c0 = std::numeric_limits<double>::infinity();
        rep.C0 = 0.0;
        auto sample_point = [&](const Vec& x) {
            Mat A = a_at(x);
            linalg::EigenSym e = linalg::eigen_sym(A);
            rep.c0 = std::min(rep.c0, e.values[0]);
            rep.C0 = std::max(rep.C0, e.values[dim_ - 1]);
            double da = 0.0;
            double fd = 1e-6;
            for (int k = 0; k < dim_; ++k) {
                Vec xp = x, xm = x;
                xp[k] += fd;
                xm[k] -= fd;
                Mat Ap = a_at(xp), Am = a_at(xm);
                for (int i = 0; i < dim_; ++i)
                    for (int j = 0; j < dim_; ++j)
                        da = std::max(da, std::abs(Ap(i, j) - Am(i, j)) / (2 * fd));
            }
            double bnorm = linalg::norm2(b_at(x));
            rep.eps = std::max(rep.eps, da + bnorm);
            ++rep.samples;
        };
        if (!grid.is_radial())
            for (int node = 0; node < grid.n_nodes(); ++node) sample_point(grid.point(node));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int s = 0; s < random_samples; ++s) {
            Vec x(dim_);
            if (grid.is_radial()) {
                x[0] = grid.domain().radial_rmin +
                       unif(rng) * (grid.domain().radius - grid.domain().radial_rmin);
                for (int k = 1; k < dim_; ++k) x[k] = 0.0;
            } else {
                const auto& counts = grid.lattice_counts();
                const auto& origin = grid.lattice_origin();
                for (int k = 0; k < dim_; ++k)
                    x[k] = origin[k] + unif(rng) * (counts[k] - 1) * grid.h();
            }
            sample_point(x);
        }
        if (rep.c0 <= 0) throw std::runtime_error("coefficient audit: ellipticity violated (c0 <= 0)");
        c0 = rep.c0;
        C0 = rep.C0;
        eps = rep.eps;
        audited = true;
        return rep;
    }

    // b_hat_i = b_i - d_k a_ki, entrywise symbolic.
    std::vector<Expr> hat_b_exprs() const {
        auto sig = coords(dim_);
        std::vector<Expr> out;
        for (int i = 0; i < dim_; ++i) {
            Expr e = b_[i];
            for (int k = 0; k < dim_; ++k) e = e - a_[tri(k, i)].derivative("x" + std::to_string(k + 1));
            out.push_back(e);
        }
        return out;
    }

    VecField hat_b(const Grid& grid) const {
        auto hb = hat_b_exprs();
        VecField out(grid, dim_);
        for (int node = 0; node < grid.n_nodes(); ++node) {
            Vec p = grid.point(node);
            std::span<const double> xs(p.v.data(), dim_);
            for (int i = 0; i < dim_; ++i) out.at(node, i) = hb[i].eval(xs);
        }
        return out;
    }

  private:
    int dim_ = 0;
    std::vector<Expr> a_;  // upper triangle, row-major
    std::vector<Expr> b_;

    int tri(int i, int j) const {
        if (i > j) std::swap(i, j);
        return i * dim_ - i * (i - 1) / 2 + (j - i);
    }
};

// N = |e_n|_{A(anchor)}^{-1} A(anchor) e_n, i.e. N_i = a_nn^{-1/2} a_in; it
// has unit norm in the A^{-1}(anchor) scalar product.
inline Vec big_N(const Mat& A0) {
    int n = A0.n;
    double ann = A0(n - 1, n - 1);
    if (ann <= 0) throw std::runtime_error("big_N: a_nn(anchor) must be positive");
    Vec N(n);
    for (int i = 0; i < n; ++i) N[i] = A0(i, n - 1) / std::sqrt(ann);
    return N;
}

// n(x) = |grad u|_{A0}^{-1} A0^{1/2} grad u; nodes with |grad u| below
// tol_grad are masked (flag value 0 vector).
inline VecField n_field(const Mat& A0, const VecField& grad_u, double tol_grad_rel = 1e-8) {
    const Grid& g = grad_u.grid();
    int n = grad_u.components();
    Mat root = linalg::sqrt_spd(A0);
    double gmax = 0.0;
    for (int node = 0; node < g.n_nodes(); ++node)
        gmax = std::max(gmax, linalg::norm2(grad_u.get(node)));
    double tol = tol_grad_rel * gmax;
    VecField out(g, n);
    for (int node = 0; node < g.n_nodes(); ++node) {
        Vec gu = grad_u.get(node);
        if (linalg::norm2(gu) <= tol) continue;  // masked
        double wn = linalg::weighted_norm(gu, A0);
        out.set(node, (1.0 / wn) * linalg::matvec(root, gu));
    }
    return out;
}

}  // namespace stablab::operators
