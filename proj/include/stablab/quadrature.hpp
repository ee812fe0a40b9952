// Composite quadrature over masked grids. Integrals run column-by-column
// along the last axis: trapezoid between the first and last node of the
// clipped column plus rectangle end strips, which is exact for constants on
// boxes and O(h) near curved cuts.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

#include "stablab/grid.hpp"

namespace stablab::geometry {

struct Region {
    enum class Kind { Whole, Ball, HalfBall, Box };
    Kind kind = Kind::Whole;
    double radius = 0.0;
    Vec center;                        // Ball only
    std::array<double, 3> lo{}, hi{};  // Box only

    static Region whole() { return {}; }
    static Region ball(Vec c, double r) {
        Region g;
        g.kind = Kind::Ball;
        g.center = c;
        g.radius = r;
        return g;
    }
    static Region half_ball(double r) {
        Region g;
        g.kind = Kind::HalfBall;
        g.radius = r;
        return g;
    }
    static Region box(std::array<double, 3> lo, std::array<double, 3> hi) {
        Region g;
        g.kind = Kind::Box;
        g.lo = lo;
        g.hi = hi;
        return g;
    }
};

namespace detail {

struct Interval {
    double a = 1.0, b = -1.0;  // empty by default
    bool empty() const { return b <= a; }
};

inline Interval intersect(Interval x, Interval y) {
    return {std::max(x.a, y.a), std::min(x.b, y.b)};
}

// Column interval of the grid's own domain at transverse point xp (the
// column runs along the last axis).
inline std::optional<Interval> domain_column(const Grid& g, const Vec& xp) {
    const auto& d = g.domain();
    const int nd = g.lattice_dim();
    switch (d.kind) {
        case DomainSpec::Kind::Box:
            for (int k = 0; k < nd - 1; ++k)
                if (xp[k] < d.lo[k] - 1e-12 || xp[k] > d.hi[k] + 1e-12) return std::nullopt;
            return Interval{d.lo[nd - 1], d.hi[nd - 1]};
        case DomainSpec::Kind::Ball:
        case DomainSpec::Kind::HalfBall: {
            double s = d.radius * d.radius;
            for (int k = 0; k < nd - 1; ++k) s -= xp[k] * xp[k];
            if (s <= 0) return std::nullopt;
            double w = std::sqrt(s);
            if (d.kind == DomainSpec::Kind::HalfBall) return Interval{0.0, w};
            return Interval{-w, w};
        }
        default: throw std::invalid_argument("quadrature: unsupported grid kind");
    }
}

inline std::optional<Interval> region_column(const Region& r, const Vec& xp, int nd) {
    switch (r.kind) {
        case Region::Kind::Whole:
            return Interval{-std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity()};
        case Region::Kind::Box:
            for (int k = 0; k < nd - 1; ++k)
                if (xp[k] < r.lo[k] - 1e-12 || xp[k] > r.hi[k] + 1e-12) return std::nullopt;
            return Interval{r.lo[nd - 1], r.hi[nd - 1]};
        case Region::Kind::Ball:
        case Region::Kind::HalfBall: {
            double s = r.radius * r.radius;
            for (int k = 0; k < nd - 1; ++k) {
                double c = (r.kind == Region::Kind::Ball) ? r.center[k] : 0.0;
                s -= (xp[k] - c) * (xp[k] - c);
            }
            if (s <= 0) return std::nullopt;
            double q = std::sqrt(s);
            double cn = (r.kind == Region::Kind::Ball) ? r.center[nd - 1] : 0.0;
            Interval iv{cn - q, cn + q};
            if (r.kind == Region::Kind::HalfBall) iv.a = std::max(iv.a, 0.0);
            return iv;
        }
    }
    return std::nullopt;
}

// Iterate transverse lattice points; cb(base_lattice, xp, transverse_weight).
template <typename F>
void for_each_column(const Grid& g, const F& cb) {
    const int nd = g.lattice_dim();
    const auto& counts = g.lattice_counts();
    const auto& origin = g.lattice_origin();
    const double h = g.h();
    if (nd == 1) {
        Vec xp(0);
        cb(std::array<int, 3>{0, 0, 0}, xp, 1.0);
        return;
    }
    std::array<int, 3> c{0, 0, 0};
    for (;;) {
        Vec xp(nd - 1);
        for (int k = 0; k < nd - 1; ++k) xp[k] = origin[k] + c[k] * h;
        cb(c, xp, 1.0);
        int k = 0;
        while (k < nd - 1 && ++c[k] == counts[k]) c[k++] = 0;
        if (k == nd - 1) break;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// volume_integral: integral of a nodal integrand over region ∩ domain.
// ---------------------------------------------------------------------------

inline double volume_integral_fn(const Grid& g, const Region& region,
                                 const std::function<double(int)>& value_at_node) {
    if (g.is_radial()) {
        // 1-D in r with the r^{n-1} area weight; region restricted to balls
        // about the origin (|x| < radius) or the whole domain.
        double rmax = g.domain().radius;
        if (region.kind == Region::Kind::Ball || region.kind == Region::Kind::HalfBall) {
            for (int k = 0; k < region.center.n; ++k)
                if (region.center[k] != 0.0)
                    throw std::invalid_argument("radial quadrature: region must be origin-centered");
            rmax = std::min(rmax, region.radius);
        } else if (region.kind != Region::Kind::Whole) {
            throw std::invalid_argument("radial quadrature: unsupported region");
        }
        const double area = Grid::sphere_area(g.dim());
        const double h = g.h();
        double sum = 0.0;
        int last = -1;
        for (int node = 0; node < g.n_nodes(); ++node) {
            double r = g.radial_r(node);
            if (r > rmax + 1e-12) break;
            double w = std::pow(r, g.dim() - 1);
            sum += value_at_node(node) * w * h;
            last = node;
        }
        if (last >= 0) {
            // trapezoid end correction at both ends of the sampled range
            sum -= 0.5 * h * value_at_node(0) * std::pow(g.radial_r(0), g.dim() - 1);
            sum -= 0.5 * h * value_at_node(last) * std::pow(g.radial_r(last), g.dim() - 1);
            // end strips: inward to r_min, outward to the region radius
            double r0 = g.radial_r(0);
            double strip = r0 - std::max(g.domain().radial_rmin, 0.0);
            if (strip > 0) sum += strip * value_at_node(0) * std::pow(r0, g.dim() - 1);
            double rl = g.radial_r(last);
            if (rmax > rl) sum += (rmax - rl) * value_at_node(last) * std::pow(rl, g.dim() - 1);
        }
        return area * sum;
    }

    const int nd = g.lattice_dim();
    const int axis = nd - 1;
    const double h = g.h();
    const auto& origin = g.lattice_origin();
    const auto& counts = g.lattice_counts();
    double total = 0.0;
    bool any = false;

    detail::for_each_column(g, [&](std::array<int, 3> base, const Vec& xp, double /*tw*/) {
        auto dom = detail::domain_column(g, xp);
        if (!dom) return;
        auto reg = detail::region_column(region, xp, nd);
        if (!reg) return;
        detail::Interval iv = detail::intersect(*dom, *reg);
        if (iv.empty()) return;

        // transverse cell-clipped weight (exact for box/box configurations)
        double tweight = 1.0;
        for (int k = 0; k < nd - 1; ++k) {
            double x = xp[k];
            double lo = x - 0.5 * h, hi = x + 0.5 * h;
            if (g.domain().kind == DomainSpec::Kind::Box) {
                lo = std::max(lo, g.domain().lo[k]);
                hi = std::min(hi, g.domain().hi[k]);
            }
            if (region.kind == Region::Kind::Box) {
                lo = std::max(lo, region.lo[k]);
                hi = std::min(hi, region.hi[k]);
            }
            if (hi <= lo) return;
            tweight *= (hi - lo) / h;
        }

        int klo = static_cast<int>(std::ceil((iv.a - origin[axis]) / h - 1e-9));
        int khi = static_cast<int>(std::floor((iv.b - origin[axis]) / h + 1e-9));
        klo = std::max(klo, 0);
        khi = std::min(khi, counts[axis] - 1);

        auto node_at = [&](int k) {
            std::array<int, 3> c = base;
            c[axis] = k;
            return g.node_of_lattice(g.lattice_index(c));
        };
        // trim exterior slivers at the column ends
        while (klo <= khi && node_at(klo) < 0) ++klo;
        while (khi >= klo && node_at(khi) < 0) --khi;

        double col = 0.0;
        if (klo > khi) {
            // no node inside: approximate the sliver with the nearest value
            int kc = std::clamp(static_cast<int>(std::round((0.5 * (iv.a + iv.b) - origin[axis]) / h)),
                                0, counts[axis] - 1);
            int node = node_at(kc);
            if (node < 0) return;
            col = (iv.b - iv.a) * value_at_node(node);
        } else {
            double first = origin[axis] + klo * h, last = origin[axis] + khi * h;
            double vfirst = value_at_node(node_at(klo)), vlast = value_at_node(node_at(khi));
            if (klo == khi) {
                col = (iv.b - iv.a) * vfirst;
            } else {
                col = 0.5 * h * (vfirst + vlast);
                for (int k = klo + 1; k < khi; ++k) col += h * value_at_node(node_at(k));
                col += std::max(0.0, first - iv.a) * vfirst;
                col += std::max(0.0, iv.b - last) * vlast;
            }
        }
        total += col * tweight * std::pow(h, nd - 1);
        any = true;
    });
    if (!any) throw std::runtime_error("volume_integral: empty region");
    return total;
}

inline double volume_integral(const ScalarField& f, const Region& region = Region::whole()) {
    return volume_integral_fn(f.grid(), region, [&](int node) { return f[node]; });
}

// ---------------------------------------------------------------------------
// surface_integral_flat: (n-1)-dimensional quadrature over the flat part of
// the half-ball boundary, restricted to |x'| <= rho.
// ---------------------------------------------------------------------------

inline double surface_integral_flat_fn(const Grid& g, double rho,
                                       const std::function<double(int)>& value_at_node) {
    if (!g.is_half_ball()) throw std::invalid_argument("surface_integral_flat requires a half-ball grid");
    const int nd = g.lattice_dim();
    const double h = g.h();
    const auto& origin = g.lattice_origin();
    const auto& counts = g.lattice_counts();
    rho = std::min(rho, g.domain().radius);

    if (nd == 1) {
        int node = g.node_of_lattice(g.lattice_index({0, 0, 0}));
        if (node < 0) throw std::runtime_error("surface_integral_flat: missing flat node");
        return value_at_node(node);  // counting measure on the single point
    }

    // integrate over the plane x_n = 0; columns run along axis 0, transverse
    // axes are 1..nd-2 within the plane.
    double total = 0.0;
    auto plane_node = [&](std::array<int, 3> c) {
        c[nd - 1] = 0;
        return g.node_of_lattice(g.lattice_index(c));
    };

    if (nd == 2) {
        int klo = static_cast<int>(std::ceil((-rho - origin[0]) / h - 1e-9));
        int khi = static_cast<int>(std::floor((rho - origin[0]) / h + 1e-9));
        klo = std::max(klo, 0);
        khi = std::min(khi, counts[0] - 1);
        while (klo <= khi && plane_node({klo, 0, 0}) < 0) ++klo;
        while (khi >= klo && plane_node({khi, 0, 0}) < 0) --khi;
        if (klo > khi) return 0.0;
        double first = origin[0] + klo * h, last = origin[0] + khi * h;
        double vfirst = value_at_node(plane_node({klo, 0, 0}));
        double vlast = value_at_node(plane_node({khi, 0, 0}));
        if (klo == khi) return 2.0 * rho * vfirst;
        total = 0.5 * h * (vfirst + vlast);
        for (int k = klo + 1; k < khi; ++k) total += h * value_at_node(plane_node({k, 0, 0}));
        total += std::max(0.0, first - (-rho)) * vfirst;
        total += std::max(0.0, rho - last) * vlast;
        return total;
    }

    // nd == 3: columns along axis 1 for each x1
    for (int i = 0; i < counts[0]; ++i) {
        double x1 = origin[0] + i * h;
        double s = rho * rho - x1 * x1;
        if (s <= 0) continue;
        double q = std::sqrt(s);
        int klo = static_cast<int>(std::ceil((-q - origin[1]) / h - 1e-9));
        int khi = static_cast<int>(std::floor((q - origin[1]) / h + 1e-9));
        klo = std::max(klo, 0);
        khi = std::min(khi, counts[1] - 1);
        while (klo <= khi && plane_node({i, klo, 0}) < 0) ++klo;
        while (khi >= klo && plane_node({i, khi, 0}) < 0) --khi;
        if (klo > khi) continue;
        double first = origin[1] + klo * h, last = origin[1] + khi * h;
        double vfirst = value_at_node(plane_node({i, klo, 0}));
        double vlast = value_at_node(plane_node({i, khi, 0}));
        double col;
        if (klo == khi) {
            col = 2.0 * q * vfirst;
        } else {
            col = 0.5 * h * (vfirst + vlast);
            for (int k = klo + 1; k < khi; ++k) col += h * value_at_node(plane_node({i, k, 0}));
            col += std::max(0.0, first - (-q)) * vfirst;
            col += std::max(0.0, q - last) * vlast;
        }
        total += col * h;
    }
    return total;
}

inline double surface_integral_flat(const ScalarField& f, double rho) {
    return surface_integral_flat_fn(f.grid(), rho, [&](int node) { return f[node]; });
}

// ---------------------------------------------------------------------------
// Level-set surface integral via the coarea band regularization
//   (1/2eps) * integral over {|u - t| < eps} of w |grad u| dx,
// with eps = 2 h max|grad u|. First-order accurate by construction.
// ---------------------------------------------------------------------------

struct LevelsetOptions {
    double band_factor = 2.0;       // eps = band_factor * h * max|grad u|
    double degenerate_frac = 0.01;  // error when more than this is near-critical
};

inline double levelset_surface_integral(const ScalarField& u, const ScalarField& w,
                                        const VecField& grad_u, double t, const Region& region,
                                        const LevelsetOptions& opt = {}) {
    const Grid& g = u.grid();
    double gmax = 0.0;
    for (int node = 0; node < g.n_nodes(); ++node)
        gmax = std::max(gmax, linalg::norm2(grad_u.get(node)));
    if (gmax == 0.0) return 0.0;
    const double eps = opt.band_factor * g.h() * gmax;
    const double tol_grad = 1e-8 * gmax;

    long band = 0, degenerate = 0;
    double integral = volume_integral_fn(g, region, [&](int node) {
        if (std::abs(u[node] - t) >= eps) return 0.0;
        double gn = linalg::norm2(grad_u.get(node));
        ++band;
        if (gn < tol_grad) ++degenerate;
        return w[node] * gn;
    });
    if (band > 0 && degenerate > opt.degenerate_frac * band)
        throw std::runtime_error("levelset_surface_integral: degenerate level set");
    return integral / (2.0 * eps);
}

}  // namespace stablab::geometry
