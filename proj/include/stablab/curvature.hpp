// The curvature-type quantity controlling the Hessian off the gradient
// direction, in its two algebraically equivalent forms, plus the convex
// C^{1,1} regularization of the anisotropic modulus.
#pragma once

#include "stablab/coefficients.hpp"
#include "stablab/derivatives.hpp"

namespace stablab::estimators {

using geometry::GradHessian;
using geometry::Grid;
using geometry::MatField;
using geometry::ScalarField;
using geometry::VecField;
using linalg::Mat;
using linalg::Vec;
using operators::CoefficientSpec;

// trace form: tr(Ax H A0 H) - |H A0 g|^2_{Ax} / |g|^2_{A0}
inline double curvature_sq_trace_form(const Mat& Ax, const Mat& A0, const Mat& H, const Vec& g) {
    double g2 = linalg::quad_form(A0, g);
    if (g2 <= 0) return 0.0;
    Mat HA0H = linalg::matmul(linalg::matmul(H, A0), H);
    Mat AxHA0H = linalg::matmul(Ax, HA0H);
    double tr = 0;
    for (int i = 0; i < Ax.n; ++i) tr += AxHA0H(i, i);
    Vec HA0g = linalg::matvec(H, linalg::matvec(A0, g));
    return tr - linalg::quad_form(Ax, HA0g) / g2;
}

// root form: ||Ax^{1/2} H A0^{1/2}||_HS^2 - |Ax^{1/2} H A0^{1/2} n|^2 with
// n = A0^{1/2} g / |g|_{A0}
inline double curvature_sq_root_form(const Mat& Ax_root, const Mat& A0_root, const Mat& H,
                                     const Vec& g, const Mat& A0) {
    double gnorm = linalg::weighted_norm(g, A0);
    if (gnorm == 0) return 0.0;
    Mat B = linalg::matmul(linalg::matmul(Ax_root, H), A0_root);
    double hs2 = 0;
    for (int i = 0; i < B.n; ++i)
        for (int j = 0; j < B.n; ++j) hs2 += B(i, j) * B(i, j);
    Vec nvec = (1.0 / gnorm) * linalg::matvec(A0_root, g);
    Vec Bn = linalg::matvec(B, nvec);
    return hs2 - dot(Bn, Bn);
}

struct CurvatureFields {
    ScalarField value;    // the curvature quantity (zero where grad u is masked)
    ScalarField anchored; // the variant with the anchor matrix in both slots
    double route_gap = 0; // worst scaled disagreement between the two forms
};

// Evaluates both forms nodewise, verifies they agree to 1e-8 on the natural
// scale, and returns the anchored auxiliary alongside.
inline CurvatureFields curvature_A(const GradHessian& gh, const CoefficientSpec& spec,
                                   const Vec& anchor, double tol_grad_rel = 1e-8) {
    const Grid& g = gh.grad.grid();
    Mat A0 = spec.a_at(anchor);
    Mat A0_root = linalg::sqrt_spd(A0);
    double gmax = 0;
    for (int node = 0; node < g.n_nodes(); ++node)
        gmax = std::max(gmax, linalg::norm2(gh.grad.get(node)));
    const double tol_grad = tol_grad_rel * gmax;

    CurvatureFields out{ScalarField(g), ScalarField(g), 0.0};
    for (int node = 0; node < g.n_nodes(); ++node) {
        Vec grad = gh.grad.get(node);
        if (linalg::norm2(grad) <= tol_grad) continue;  // masked: value 0
        Mat H = gh.hess.get(node);
        Mat Ax = spec.a_at(g.point(node));
        double a2 = curvature_sq_trace_form(Ax, A0, H, grad);
        double b2 = curvature_sq_root_form(linalg::sqrt_spd(Ax), A0_root, H, grad, A0);
        double scale = std::max(1e-300, linalg::frobenius(Ax) * linalg::frobenius(A0) *
                                            linalg::frobenius(H) * linalg::frobenius(H));
        out.route_gap = std::max(out.route_gap, std::abs(a2 - b2) / scale);
        out.value[node] = std::sqrt(std::max(0.0, a2));
        double c2 = curvature_sq_trace_form(A0, A0, H, grad);
        out.anchored[node] = std::sqrt(std::max(0.0, c2));
    }
    if (out.route_gap > 1e-8)
        throw std::runtime_error("curvature_A: the two forms disagree beyond 1e-8");
    return out;
}

// ---------------------------------------------------------------------------
// phi_delta: |z|_{A0} outside {|z|_{A0} < delta}, quadratic cap inside;
// C^{1,1} across the interface and convex.
// ---------------------------------------------------------------------------

struct PhiDeltaValue {
    double value;
    Vec grad;
    Mat hess;
};

inline PhiDeltaValue phi_delta(const Vec& z, double delta, const Mat& A0) {
    if (delta <= 0) throw std::invalid_argument("phi_delta: delta must be positive");
    double nz = linalg::weighted_norm(z, A0);
    PhiDeltaValue out;
    Vec A0z = linalg::matvec(A0, z);
    if (nz > delta) {
        out.value = nz;
        out.grad = (1.0 / nz) * A0z;
        out.hess = (1.0 / nz) * A0;
        double inv3 = 1.0 / (nz * nz * nz);
        for (int i = 0; i < A0.n; ++i)
            for (int j = 0; j < A0.n; ++j) out.hess(i, j) -= inv3 * A0z[i] * A0z[j];
    } else {
        out.value = 0.5 * delta + 0.5 * nz * nz / delta;
        out.grad = (1.0 / delta) * A0z;
        out.hess = (1.0 / delta) * A0;
    }
    return out;
}

}  // namespace stablab::estimators
