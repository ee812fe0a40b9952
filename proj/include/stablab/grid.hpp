// Uniform Cartesian grids with cut-cell masking for the computational
// domains (half-ball, ball, box) plus a 1-D radial mode, and the grid-sampled
// field containers.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stablab/expr.hpp"
#include "stablab/linalg.hpp"

namespace stablab::geometry {

using linalg::Mat;
using linalg::Vec;

enum class NodeClass : uint8_t { Exterior, Interior, FlatBoundary, CurvedBoundary };

struct DomainSpec {
    enum class Kind { HalfBall, Ball, Box, Radial };
    Kind kind = Kind::Box;
    int dim = 2;            // spatial dimension n (radial: the weight dimension)
    double radius = 1.0;    // half_ball / ball / radial
    std::array<double, 3> lo{}, hi{};  // box bounds
    double radial_rmin = 0.0;          // radial mode inner truncation

    static DomainSpec half_ball(int n, double rho = 1.0) {
        DomainSpec d;
        d.kind = Kind::HalfBall;
        d.dim = n;
        d.radius = rho;
        return d;
    }
    static DomainSpec ball(int n, double rho = 1.0) {
        DomainSpec d;
        d.kind = Kind::Ball;
        d.dim = n;
        d.radius = rho;
        return d;
    }
    static DomainSpec box(int n, std::array<double, 3> lo, std::array<double, 3> hi) {
        DomainSpec d;
        d.kind = Kind::Box;
        d.dim = n;
        d.lo = lo;
        d.hi = hi;
        return d;
    }
    static DomainSpec unit_box(int n) {
        return box(n, {0, 0, 0}, {1, 1, 1});
    }
    static DomainSpec interval(double a, double b) { return box(1, {a, 0, 0}, {b, 0, 0}); }
    static DomainSpec radial(int n, double rho = 1.0, double rmin = 0.0) {
        DomainSpec d;
        d.kind = Kind::Radial;
        d.dim = n;
        d.radius = rho;
        d.radial_rmin = rmin;
        return d;
    }
};

class Grid {
  public:
    Grid(const DomainSpec& domain, double h) : domain_(domain), h_(h) {
        if (h <= 0) throw std::invalid_argument("grid spacing must be positive");
        switch (domain.kind) {
            case DomainSpec::Kind::Radial: build_radial(); break;
            default: build_cartesian(); break;
        }
        if (n_interior_ == 0) throw std::runtime_error("grid too coarse: no interior nodes");
    }

    const DomainSpec& domain() const { return domain_; }
    bool is_radial() const { return domain_.kind == DomainSpec::Kind::Radial; }
    bool is_half_ball() const { return domain_.kind == DomainSpec::Kind::HalfBall; }
    // lattice dimension (1 for radial grids), vs. the spatial dimension n
    int lattice_dim() const { return is_radial() ? 1 : domain_.dim; }
    int dim() const { return domain_.dim; }
    double h() const { return h_; }

    int n_nodes() const { return static_cast<int>(nodes_.size()); }
    int n_interior() const { return n_interior_; }

    NodeClass node_class(int node) const { return cls_[nodes_[node]]; }
    bool is_boundary(int node) const {
        NodeClass c = node_class(node);
        return c == NodeClass::FlatBoundary || c == NodeClass::CurvedBoundary;
    }

    Vec point(int node) const { return lattice_point(nodes_[node]); }
    double radial_r(int node) const { return origin_[0] + lattice_coord(nodes_[node], 0) * h_; }

    int interior_count() const { return n_interior_; }
    int interior_to_node(int iidx) const { return interior_nodes_[iidx]; }
    int node_to_interior(int node) const { return interior_of_node_[node]; }

    // Neighbor along axis (dir = +1/-1); -1 when the neighbor is exterior or
    // off-lattice.
    int neighbor(int node, int axis, int dir) const {
        int lat = nodes_[node];
        int c = lattice_coord(lat, axis);
        int nc = c + dir;
        if (nc < 0 || nc >= count_[axis]) return -1;
        return node_of_lattice_[lat + dir * stride_[axis]];
    }

    // Lattice metadata (used by quadrature and IO).
    const std::array<int, 3>& lattice_counts() const { return count_; }
    const std::array<double, 3>& lattice_origin() const { return origin_; }
    int lattice_size() const { return lattice_size_; }
    int node_of_lattice(int lat) const { return node_of_lattice_[lat]; }
    NodeClass lattice_class(int lat) const { return cls_[lat]; }
    int lattice_index(std::array<int, 3> c) const {
        int lat = 0;
        for (int k = 0; k < lattice_dim(); ++k) lat += c[k] * stride_[k];
        return lat;
    }
    std::array<int, 3> lattice_coords(int lat) const {
        std::array<int, 3> c{};
        for (int k = 0; k < lattice_dim(); ++k) c[k] = lattice_coord(lat, k);
        return c;
    }
    Vec lattice_point(int lat) const {
        Vec p(lattice_dim());
        for (int k = 0; k < lattice_dim(); ++k) p[k] = origin_[k] + lattice_coord(lat, k) * h_;
        return p;
    }

    // surface measure factor of the unit sphere, used by radial quadrature
    static double sphere_area(int n) {
        // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)
        return 2.0 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);
    }

  private:
    DomainSpec domain_;
    double h_;
    std::array<int, 3> count_{1, 1, 1};
    std::array<int, 3> stride_{0, 0, 0};
    std::array<double, 3> origin_{};
    int lattice_size_ = 0;
    std::vector<NodeClass> cls_;           // per lattice point
    std::vector<int32_t> node_of_lattice_; // lattice -> node index or -1
    std::vector<int32_t> nodes_;           // node index -> lattice
    std::vector<int32_t> interior_nodes_;  // interior index -> node index
    std::vector<int32_t> interior_of_node_;

    int lattice_coord(int lat, int axis) const { return (lat / stride_[axis]) % count_[axis]; }

    static int checked_count(double len, double h, const char* what) {
        double raw = len / h;
        double rounded = std::round(raw);
        if (std::abs(raw - rounded) > 1e-9 * std::max(1.0, raw))
            throw std::invalid_argument(std::string("h does not divide the ") + what + " evenly");
        return static_cast<int>(rounded);
    }

    void build_cartesian() {
        const int d = domain_.dim;
        if (d < 1 || d > 3) throw std::invalid_argument("Cartesian grids support n in 1..3");
        const double rho = domain_.radius;
        for (int k = 0; k < d; ++k) {
            double lo, hi;
            switch (domain_.kind) {
                case DomainSpec::Kind::Box: lo = domain_.lo[k], hi = domain_.hi[k]; break;
                case DomainSpec::Kind::Ball: lo = -rho, hi = rho; break;
                case DomainSpec::Kind::HalfBall: lo = (k == d - 1 ? 0.0 : -rho), hi = rho; break;
                default: throw std::logic_error("unreachable");
            }
            count_[k] = checked_count(hi - lo, h_, "bounding box") + 1;
            origin_[k] = lo;
        }
        stride_[0] = 1;
        for (int k = 1; k < d; ++k) stride_[k] = stride_[k - 1] * count_[k - 1];
        lattice_size_ = 1;
        for (int k = 0; k < d; ++k) lattice_size_ *= count_[k];

        const double tol = 1e-9 * h_;
        cls_.assign(lattice_size_, NodeClass::Exterior);
        // pass 1: geometric status
        enum class Geo : uint8_t { Outside, Inside, OnFlat, OnCurved };
        std::vector<Geo> geo(lattice_size_);
        for (int lat = 0; lat < lattice_size_; ++lat) {
            Vec p = lattice_point(lat);
            switch (domain_.kind) {
                case DomainSpec::Kind::Box: {
                    bool on = false, out = false;
                    for (int k = 0; k < d; ++k) {
                        if (p[k] < domain_.lo[k] - tol || p[k] > domain_.hi[k] + tol) out = true;
                        else if (std::abs(p[k] - domain_.lo[k]) <= tol || std::abs(p[k] - domain_.hi[k]) <= tol)
                            on = true;
                    }
                    geo[lat] = out ? Geo::Outside : (on ? Geo::OnCurved : Geo::Inside);
                    break;
                }
                case DomainSpec::Kind::Ball: {
                    double r2 = dot(p, p), rho2 = rho * rho;
                    if (r2 > rho2 + tol) geo[lat] = Geo::Outside;
                    else if (r2 > rho2 - tol * std::max(1.0, rho)) geo[lat] = Geo::OnCurved;
                    else geo[lat] = Geo::Inside;
                    break;
                }
                case DomainSpec::Kind::HalfBall: {
                    double r2 = dot(p, p), rho2 = rho * rho;
                    double xn = p[d - 1];
                    if (r2 > rho2 + tol || xn < -tol) geo[lat] = Geo::Outside;
                    else if (r2 > rho2 - tol * std::max(1.0, rho)) geo[lat] = Geo::OnCurved;
                    else if (std::abs(xn) <= tol) geo[lat] = Geo::OnFlat;
                    else geo[lat] = Geo::Inside;
                    break;
                }
                default: throw std::logic_error("unreachable");
            }
        }
        // pass 2: inside nodes adjacent to an outside node are cut-cell
        // Dirichlet nodes (curved boundary); so are flat nodes next to a cut.
        for (int lat = 0; lat < lattice_size_; ++lat) {
            switch (geo[lat]) {
                case Geo::Outside: cls_[lat] = NodeClass::Exterior; break;
                case Geo::OnCurved: cls_[lat] = NodeClass::CurvedBoundary; break;
                case Geo::OnFlat:
                case Geo::Inside: {
                    bool cut = false;
                    std::array<int, 3> c = lattice_coords(lat);
                    for (int k = 0; k < d && !cut; ++k)
                        for (int dir = -1; dir <= 1 && !cut; dir += 2) {
                            int nc = c[k] + dir;
                            if (nc < 0 || nc >= count_[k]) {
                                // off-lattice neighbors only happen at the flat plane
                                if (!(domain_.kind == DomainSpec::Kind::HalfBall && k == d - 1 && dir < 0))
                                    cut = true;
                                continue;
                            }
                            if (geo[lat + dir * stride_[k]] == Geo::Outside) cut = true;
                        }
                    if (geo[lat] == Geo::OnFlat)
                        cls_[lat] = cut ? NodeClass::CurvedBoundary : NodeClass::FlatBoundary;
                    else
                        cls_[lat] = cut ? NodeClass::CurvedBoundary : NodeClass::Interior;
                    break;
                }
            }
        }
        index_nodes();
    }

    void build_radial() {
        const double rho = domain_.radius, rmin = domain_.radial_rmin;
        if (domain_.dim < 2 || domain_.dim > 15)
            throw std::invalid_argument("radial mode supports n in 2..15");
        int m = checked_count(rho - rmin, h_, "radial interval");
        // nodes at r = rmin + k h for k = 1..m; the one at rho is Dirichlet
        count_[0] = m;
        stride_[0] = 1;
        origin_[0] = rmin + h_;
        lattice_size_ = m;
        cls_.assign(lattice_size_, NodeClass::Interior);
        cls_[lattice_size_ - 1] = NodeClass::CurvedBoundary;
        index_nodes();
    }

    void index_nodes() {
        node_of_lattice_.assign(lattice_size_, -1);
        nodes_.clear();
        interior_nodes_.clear();
        for (int lat = 0; lat < lattice_size_; ++lat) {
            if (cls_[lat] == NodeClass::Exterior) continue;
            node_of_lattice_[lat] = static_cast<int>(nodes_.size());
            nodes_.push_back(lat);
        }
        interior_of_node_.assign(nodes_.size(), -1);
        // interior numbering runs with the last axis fastest, which keeps the
        // assembled operator bandwidth at the short-axis count on half-balls
        const int d = lattice_dim();
        std::array<int, 3> c{0, 0, 0};
        for (;;) {
            int lat = lattice_index(c);
            if (cls_[lat] == NodeClass::Interior) {
                int node = node_of_lattice_[lat];
                interior_of_node_[node] = static_cast<int>(interior_nodes_.size());
                interior_nodes_.push_back(node);
            }
            int k = d - 1;
            while (k >= 0 && ++c[k] == count_[k]) c[k--] = 0;
            if (k < 0) break;
        }
        n_interior_ = static_cast<int>(interior_nodes_.size());
    }

    int n_interior_ = 0;
};

// One real per non-exterior node.
class ScalarField {
  public:
    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid_(&g), v_(g.n_nodes(), fill) {}

    static ScalarField sample(const Grid& g, const std::function<double(const Vec&)>& f) {
        ScalarField s(g);
        for (int i = 0; i < g.n_nodes(); ++i) s.v_[i] = f(g.point(i));
        return s;
    }
    static ScalarField sample_expr(const Grid& g, const exprlang::Expr& e) {
        if (static_cast<int>(e.signature().size()) != g.lattice_dim())
            throw std::invalid_argument("expression signature does not match grid dimension");
        ScalarField s(g);
        for (int i = 0; i < g.n_nodes(); ++i) {
            Vec p = g.point(i);
            s.v_[i] = e.eval(std::span<const double>(p.v.data(), g.lattice_dim()));
        }
        return s;
    }

    const Grid& grid() const { return *grid_; }
    int size() const { return static_cast<int>(v_.size()); }
    double& operator[](int node) { return v_[node]; }
    double operator[](int node) const { return v_[node]; }
    std::vector<double>& data() { return v_; }
    const std::vector<double>& data() const { return v_; }

    double max_abs() const {
        double m = 0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }
    double max() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double x : v_) m = std::max(m, x);
        return m;
    }
    double min() const {
        double m = std::numeric_limits<double>::infinity();
        for (double x : v_) m = std::min(m, x);
        return m;
    }
    bool nan_free() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

  private:
    const Grid* grid_ = nullptr;
    std::vector<double> v_;
};

// n reals per node.
class VecField {
  public:
    VecField() = default;
    explicit VecField(const Grid& g, int ncomp) : grid_(&g), ncomp_(ncomp), v_(static_cast<size_t>(g.n_nodes()) * ncomp, 0.0) {}

    const Grid& grid() const { return *grid_; }
    int components() const { return ncomp_; }
    double& at(int node, int k) { return v_[static_cast<size_t>(node) * ncomp_ + k]; }
    double at(int node, int k) const { return v_[static_cast<size_t>(node) * ncomp_ + k]; }
    Vec get(int node) const {
        Vec p(ncomp_);
        for (int k = 0; k < ncomp_; ++k) p[k] = at(node, k);
        return p;
    }
    void set(int node, const Vec& p) {
        for (int k = 0; k < ncomp_; ++k) at(node, k) = p[k];
    }

  private:
    const Grid* grid_ = nullptr;
    int ncomp_ = 0;
    std::vector<double> v_;
};

// Symmetric n x n per node; only the upper triangle is stored.
class MatField {
  public:
    MatField() = default;
    explicit MatField(const Grid& g, int n)
        : grid_(&g), n_(n), stride_(n * (n + 1) / 2), v_(static_cast<size_t>(g.n_nodes()) * stride_, 0.0) {}

    const Grid& grid() const { return *grid_; }
    int order() const { return n_; }
    double& at(int node, int i, int j) { return v_[static_cast<size_t>(node) * stride_ + tri(i, j)]; }
    double at(int node, int i, int j) const { return v_[static_cast<size_t>(node) * stride_ + tri(i, j)]; }
    Mat get(int node) const {
        Mat m(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j) m(i, j) = m(j, i) = at(node, i, j);
        return m;
    }
    void set(int node, const Mat& m) {
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j) at(node, i, j) = 0.5 * (m(i, j) + m(j, i));
    }

  private:
    const Grid* grid_ = nullptr;
    int n_ = 0, stride_ = 0;
    std::vector<double> v_;

    int tri(int i, int j) const {
        if (i > j) std::swap(i, j);
        return i * n_ - i * (i - 1) / 2 + (j - i);
    }
};

}  // namespace stablab::geometry
