// Small dense kernels (n <= 3), banded sparse storage with LU, and a few
// scalar numerics shared by the whole lab.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stablab::linalg {

inline constexpr int kMaxDim = 3;

struct Vec {
    int n = 0;
    std::array<double, kMaxDim> v{};

    Vec() = default;
    explicit Vec(int dim) : n(dim) {}
    Vec(std::initializer_list<double> xs) : n(static_cast<int>(xs.size())) {
        int i = 0;
        for (double x : xs) v[i++] = x;
    }
    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }
};

inline Vec operator+(Vec a, const Vec& b) {
    for (int i = 0; i < a.n; ++i) a.v[i] += b.v[i];
    return a;
}
inline Vec operator-(Vec a, const Vec& b) {
    for (int i = 0; i < a.n; ++i) a.v[i] -= b.v[i];
    return a;
}
inline Vec operator*(double s, Vec a) {
    for (int i = 0; i < a.n; ++i) a.v[i] *= s;
    return a;
}
inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (int i = 0; i < a.n; ++i) s += a.v[i] * b.v[i];
    return s;
}
inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

// Dense symmetric-friendly square matrix of order n <= 3.
struct Mat {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim> m{};

    Mat() = default;
    explicit Mat(int dim) : n(dim) {}
    static Mat identity(int dim) {
        Mat I(dim);
        for (int i = 0; i < dim; ++i) I(i, i) = 1.0;
        return I;
    }
    static Mat diag(std::initializer_list<double> d) {
        Mat M(static_cast<int>(d.size()));
        int i = 0;
        for (double x : d) M(i, i) = x, ++i;
        return M;
    }
    double& operator()(int i, int j) { return m[i * kMaxDim + j]; }
    double operator()(int i, int j) const { return m[i * kMaxDim + j]; }
};

inline Mat operator+(Mat a, const Mat& b) {
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) a(i, j) += b(i, j);
    return a;
}
inline Mat operator-(Mat a, const Mat& b) {
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) a(i, j) -= b(i, j);
    return a;
}
inline Mat operator*(double s, Mat a) {
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) a(i, j) *= s;
    return a;
}
inline Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) {
            double s = 0;
            for (int k = 0; k < a.n; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}
inline Vec matvec(const Mat& a, const Vec& x) {
    Vec y(a.n);
    for (int i = 0; i < a.n; ++i) {
        double s = 0;
        for (int j = 0; j < a.n; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}
inline Mat transpose(const Mat& a) {
    Mat t(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) t(i, j) = a(j, i);
    return t;
}
inline double quad_form(const Mat& a, const Vec& x) { return dot(x, matvec(a, x)); }
inline double frobenius(const Mat& a) {
    double s = 0;
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}
inline double max_abs(const Mat& a) {
    double s = 0;
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) s = std::max(s, std::abs(a(i, j)));
    return s;
}

inline Mat inverse(const Mat& a) {
    Mat inv(a.n);
    if (a.n == 1) {
        if (a(0, 0) == 0.0) throw std::runtime_error("singular 1x1 matrix");
        inv(0, 0) = 1.0 / a(0, 0);
        return inv;
    }
    if (a.n == 2) {
        double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        if (det == 0.0) throw std::runtime_error("singular 2x2 matrix");
        inv(0, 0) = a(1, 1) / det;
        inv(1, 1) = a(0, 0) / det;
        inv(0, 1) = -a(0, 1) / det;
        inv(1, 0) = -a(1, 0) / det;
        return inv;
    }
    // n == 3 by cofactors
    double c00 = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
    double c01 = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
    double c02 = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
    double det = a(0, 0) * c00 + a(0, 1) * c01 + a(0, 2) * c02;
    if (det == 0.0) throw std::runtime_error("singular 3x3 matrix");
    inv(0, 0) = c00 / det;
    inv(1, 0) = c01 / det;
    inv(2, 0) = c02 / det;
    inv(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / det;
    inv(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / det;
    inv(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / det;
    inv(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / det;
    inv(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / det;
    inv(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / det;
    return inv;
}

struct EigenSym {
    Vec values;   // ascending
    Mat vectors;  // columns
};

// Cyclic Jacobi for symmetric matrices of order <= 3.
inline EigenSym eigen_sym(const Mat& a0) {
    Mat a = a0;
    Mat q = Mat::identity(a.n);
    const int n = a.n;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off <= 1e-30 * (1.0 + frobenius(a0) * frobenius(a0))) break;
        for (int p = 0; p < n; ++p)
            for (int qi = p + 1; qi < n; ++qi) {
                if (std::abs(a(p, qi)) < 1e-300) continue;
                double theta = (a(qi, qi) - a(p, p)) / (2.0 * a(p, qi));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, qi);
                    a(k, p) = c * akp - s * akq;
                    a(k, qi) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(qi, k);
                    a(p, k) = c * apk - s * aqk;
                    a(qi, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double qkp = q(k, p), qkq = q(k, qi);
                    q(k, p) = c * qkp - s * qkq;
                    q(k, qi) = s * qkp + c * qkq;
                }
            }
    }
    // sort ascending
    std::array<int, kMaxDim> idx{0, 1, 2};
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (a(idx[j], idx[j]) < a(idx[i], idx[i])) std::swap(idx[i], idx[j]);
    EigenSym e;
    e.values = Vec(n);
    e.vectors = Mat(n);
    for (int i = 0; i < n; ++i) {
        e.values[i] = a(idx[i], idx[i]);
        for (int k = 0; k < n; ++k) e.vectors(k, i) = q(k, idx[i]);
    }
    return e;
}

// Symmetric square root of an SPD matrix. Closed form for n = 2, Jacobi
// eigendecomposition otherwise. Throws if the smallest eigenvalue is <= 0.
inline Mat sqrt_spd(const Mat& m) {
    if (m.n == 1) {
        if (m(0, 0) <= 0) throw std::runtime_error("sqrt_spd: matrix not SPD");
        Mat s(1);
        s(0, 0) = std::sqrt(m(0, 0));
        return s;
    }
    if (m.n == 2) {
        double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        double tr = m(0, 0) + m(1, 1);
        double disc = tr * tr - 4.0 * det;
        double lmin = 0.5 * (tr - std::sqrt(std::max(disc, 0.0)));
        if (det <= 0 || lmin <= 0) throw std::runtime_error("sqrt_spd: matrix not SPD");
        double s = std::sqrt(det);
        double t = std::sqrt(tr + 2.0 * s);
        Mat r = m;
        r(0, 0) += s;
        r(1, 1) += s;
        return (1.0 / t) * r;
    }
    EigenSym e = eigen_sym(m);
    if (e.values[0] <= 0) throw std::runtime_error("sqrt_spd: matrix not SPD");
    Mat d(m.n);
    for (int i = 0; i < m.n; ++i) d(i, i) = std::sqrt(e.values[i]);
    return matmul(matmul(e.vectors, d), transpose(e.vectors));
}

// |p|_M = (p^T M p)^(1/2); flags non-SPD quadratic forms.
inline double weighted_norm(const Vec& p, const Mat& m) {
    double q = quad_form(m, p);
    if (q < 0) throw std::runtime_error("weighted_norm: quadratic form negative (non-SPD)");
    return std::sqrt(q);
}

// ---------------------------------------------------------------------------
// Banded matrices. Storage mirrors the classic (kl+ku+1) x n band layout; the
// LU factorization uses partial pivoting with kl extra superdiagonal rows.
// ---------------------------------------------------------------------------

struct BandedMatrix {
    int n = 0, kl = 0, ku = 0;
    std::vector<double> a;  // (kl+ku+1) rows, column j holds entries i in [j-ku, j+kl]

    BandedMatrix() = default;
    BandedMatrix(int order, int lower, int upper)
        : n(order), kl(lower), ku(upper), a(static_cast<size_t>(kl + ku + 1) * order, 0.0) {}

    bool in_band(int i, int j) const { return i - j <= kl && j - i <= ku; }
    double& at(int i, int j) { return a[static_cast<size_t>(j) * (kl + ku + 1) + (ku + i - j)]; }
    double get(int i, int j) const {
        if (i < 0 || j < 0 || i >= n || j >= n || !in_band(i, j)) return 0.0;
        return a[static_cast<size_t>(j) * (kl + ku + 1) + (ku + i - j)];
    }
    void add(int i, int j, double v) {
        if (!in_band(i, j)) throw std::runtime_error("BandedMatrix::add outside band");
        at(i, j) += v;
    }
    void set(int i, int j, double v) {
        if (!in_band(i, j)) throw std::runtime_error("BandedMatrix::set outside band");
        at(i, j) = v;
    }

    std::vector<double> matvec(std::span<const double> x) const {
        std::vector<double> y(n, 0.0);
        for (int j = 0; j < n; ++j) {
            int ilo = std::max(0, j - ku), ihi = std::min(n - 1, j + kl);
            for (int i = ilo; i <= ihi; ++i) y[i] += get(i, j) * x[j];
        }
        return y;
    }

    // Lower bound on the real parts of the spectrum (Gershgorin discs).
    double gershgorin_lower() const {
        double lo = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            double diag = get(i, i), rad = 0;
            int jlo = std::max(0, i - kl), jhi = std::min(n - 1, i + ku);
            for (int j = jlo; j <= jhi; ++j)
                if (j != i) rad += std::abs(get(i, j));
            lo = std::min(lo, diag - rad);
        }
        return lo;
    }
};

class BandedLU {
  public:
    static std::optional<BandedLU> factor(const BandedMatrix& m) {
        BandedLU f;
        f.n_ = m.n;
        f.kl_ = m.kl;
        f.ku_ = m.ku + m.kl;  // fill-in rows for pivoting
        f.ab_.assign(static_cast<size_t>(f.kl_ + f.ku_ + 1) * f.n_, 0.0);
        f.piv_.resize(f.n_);
        for (int j = 0; j < m.n; ++j) {
            int ilo = std::max(0, j - m.ku), ihi = std::min(m.n - 1, j + m.kl);
            for (int i = ilo; i <= ihi; ++i) f.at(i, j) = m.get(i, j);
        }
        const int n = f.n_, kl = f.kl_, ku = f.ku_;
        for (int k = 0; k < n; ++k) {
            int imax = k;
            double amax = std::abs(f.at(k, k));
            int ilim = std::min(n - 1, k + kl);
            for (int i = k + 1; i <= ilim; ++i) {
                double v = std::abs(f.at(i, k));
                if (v > amax) amax = v, imax = i;
            }
            f.piv_[k] = imax;
            if (amax == 0.0) return std::nullopt;  // exactly singular
            if (imax != k) {
                int jlim = std::min(n - 1, k + ku);
                for (int j = k; j <= jlim; ++j) std::swap(f.at(k, j), f.at(imax, j));
            }
            double pivot = f.at(k, k);
            for (int i = k + 1; i <= ilim; ++i) {
                double l = f.at(i, k) / pivot;
                f.at(i, k) = l;
                int jlim = std::min(n - 1, k + ku);
                for (int j = k + 1; j <= jlim; ++j) f.at(i, j) -= l * f.at(k, j);
            }
        }
        return f;
    }

    void solve_inplace(std::span<double> b) const {
        const int n = n_, kl = kl_, ku = ku_;
        for (int k = 0; k < n; ++k) {
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
            int ilim = std::min(n - 1, k + kl);
            for (int i = k + 1; i <= ilim; ++i) b[i] -= at_c(i, k) * b[k];
        }
        for (int k = n - 1; k >= 0; --k) {
            int jlim = std::min(n - 1, k + ku);
            for (int j = k + 1; j <= jlim; ++j) b[k] -= at_c(k, j) * b[j];
            b[k] /= at_c(k, k);
        }
    }

    std::vector<double> solve(std::span<const double> b) const {
        std::vector<double> x(b.begin(), b.end());
        solve_inplace(x);
        return x;
    }

    double min_abs_pivot() const {
        double m = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n_; ++k) m = std::min(m, std::abs(at_c(k, k)));
        return m;
    }

  private:
    int n_ = 0, kl_ = 0, ku_ = 0;
    std::vector<double> ab_;
    std::vector<int> piv_;
    double& at(int i, int j) { return ab_[static_cast<size_t>(j) * (kl_ + ku_ + 1) + (ku_ + i - j)]; }
    double at_c(int i, int j) const {
        return ab_[static_cast<size_t>(j) * (kl_ + ku_ + 1) + (ku_ + i - j)];
    }
};

// Number of eigenvalues of a symmetric tridiagonal matrix strictly below tau
// (LDL^T sign count with the usual safeguard against tiny pivots).
inline int tridiag_count_below(std::span<const double> diag, std::span<const double> off,
                               double tau) {
    int count = 0;
    double t = 0.0;
    for (size_t i = 0; i < diag.size(); ++i) {
        double d = diag[i] - tau - (i > 0 ? off[i - 1] * off[i - 1] / t : 0.0);
        if (d == 0.0) d = -1e-300;
        if (d < 0) ++count;
        t = d;
    }
    return count;
}

// Adaptive Simpson on [a, b] with relative tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double rel_tol, int max_depth = 40) {
    auto simpson = [&](double x0, double x2, double f0, double f1, double f2) {
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2);
    };
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double x0, double x2, double f0, double f1, double f2, double whole, int depth) {
            double x1 = 0.5 * (x0 + x2);
            double fl = f(0.5 * (x0 + x1)), fr = f(0.5 * (x1 + x2));
            double left = simpson(x0, x1, f0, fl, f1);
            double right = simpson(x1, x2, f1, fr, f2);
            double err = left + right - whole;
            if (depth <= 0 || std::abs(err) <= 15.0 * rel_tol * (std::abs(left + right) + 1e-300))
                return left + right + err / 15.0;
            return rec(x0, x1, f0, fl, f1, left, depth - 1) +
                   rec(x1, x2, f1, fr, f2, right, depth - 1);
        };
    if (a == b) return 0.0;
    double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    return rec(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), max_depth);
}

// Observed convergence order from two consecutive errors at h and h/2.
inline double observed_order(double err_coarse, double err_fine) {
    if (err_fine <= 0 || err_coarse <= 0) return std::numeric_limits<double>::quiet_NaN();
    return std::log2(err_coarse / err_fine);
}

}  // namespace stablab::linalg
