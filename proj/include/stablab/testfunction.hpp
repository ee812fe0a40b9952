// Finite test-function families standing in for "for all xi in C_c^infty":
// radial bumps (1 - |x-c|^2/rho^2)_+^2 and tensor cosine bumps, both with
// analytic gradients and Hessians.
#pragma once

#include <string>
#include <vector>

#include "stablab/grid.hpp"

namespace stablab::estimators {

using geometry::Grid;
using geometry::ScalarField;
using linalg::Mat;
using linalg::Vec;

class TestFunction {
  public:
    enum class Family { RadialBump, TensorCosine };

    static TestFunction bump(Vec center, double radius, std::string label = "") {
        return TestFunction(Family::RadialBump, center, radius, std::move(label));
    }
    static TestFunction cosine(Vec center, double radius, std::string label = "") {
        return TestFunction(Family::TensorCosine, center, radius, std::move(label));
    }

    const std::string& label() const { return label_; }
    const Vec& center() const { return center_; }
    double radius() const { return radius_; }

    double value(const Vec& x) const {
        if (family_ == Family::RadialBump) {
            double s = s_of(x);
            if (s >= 1.0) return 0.0;
            return (1.0 - s) * (1.0 - s);
        }
        double v = 1.0;
        for (int k = 0; k < x.n; ++k) {
            double t = (x[k] - center_[k]) / radius_;
            if (std::abs(t) >= 1.0) return 0.0;
            double c = std::cos(0.5 * M_PI * t);
            v *= c * c;
        }
        return v;
    }

    Vec grad(const Vec& x) const {
        Vec g(x.n);
        if (family_ == Family::RadialBump) {
            double s = s_of(x);
            if (s >= 1.0) return g;
            double f = -4.0 * (1.0 - s) / (radius_ * radius_);
            for (int k = 0; k < x.n; ++k) g[k] = f * (x[k] - center_[k]);
            return g;
        }
        for (int k = 0; k < x.n; ++k) {
            double t = (x[k] - center_[k]) / radius_;
            if (std::abs(t) >= 1.0) return Vec(x.n);
        }
        for (int k = 0; k < x.n; ++k) {
            double prod = 1.0;
            for (int j = 0; j < x.n; ++j) {
                double t = (x[j] - center_[j]) / radius_;
                if (j == k)
                    prod *= -0.5 * M_PI * std::sin(M_PI * t) / radius_;
                else {
                    double c = std::cos(0.5 * M_PI * t);
                    prod *= c * c;
                }
            }
            g[k] = prod;
        }
        return g;
    }

    Mat hess(const Vec& x) const {
        Mat h(x.n);
        if (family_ == Family::RadialBump) {
            double s = s_of(x);
            if (s >= 1.0) return h;
            double r2 = radius_ * radius_;
            for (int i = 0; i < x.n; ++i) {
                h(i, i) = -4.0 * (1.0 - s) / r2;
                for (int j = 0; j < x.n; ++j)
                    h(i, j) += 8.0 * (x[i] - center_[i]) * (x[j] - center_[j]) / (r2 * r2);
            }
            return h;
        }
        for (int k = 0; k < x.n; ++k) {
            double t = (x[k] - center_[k]) / radius_;
            if (std::abs(t) >= 1.0) return Mat(x.n);
        }
        auto phi = [&](int j) {
            double t = (x[j] - center_[j]) / radius_;
            double c = std::cos(0.5 * M_PI * t);
            return c * c;
        };
        auto dphi = [&](int j) {
            double t = (x[j] - center_[j]) / radius_;
            return -0.5 * M_PI * std::sin(M_PI * t) / radius_;
        };
        auto d2phi = [&](int j) {
            double t = (x[j] - center_[j]) / radius_;
            return -0.5 * M_PI * M_PI * std::cos(M_PI * t) / (radius_ * radius_);
        };
        for (int i = 0; i < x.n; ++i)
            for (int j = 0; j < x.n; ++j) {
                double prod = 1.0;
                for (int k = 0; k < x.n; ++k) {
                    if (k == i && k == j) prod *= d2phi(k);
                    else if (k == i || k == j) prod *= dphi(k);
                    else prod *= phi(k);
                }
                h(i, j) = prod;
            }
        return h;
    }

    ScalarField sample(const Grid& g) const {
        return ScalarField::sample(g, [this](const Vec& p) { return value(p); });
    }

    // True when the closed support sits inside the open half-ball with the
    // stated margin (the discrete boundary layer is O(h) wide).
    bool supported_in_open_half_ball(double rho, double margin = 1e-9) const {
        if (family_ == Family::RadialBump)
            return center_[center_.n - 1] - radius_ > margin &&
                   linalg::norm2(center_) + radius_ < rho - margin;
        double corner = radius_ * std::sqrt(static_cast<double>(center_.n));
        return center_[center_.n - 1] - radius_ > margin &&
               linalg::norm2(center_) + corner < rho - margin;
    }

    // The documented family: 3 scales x 5 centers, compact in the open unit
    // half-ball of dimension dim.
    static std::vector<TestFunction> half_ball_family(int dim) {
        std::vector<Vec> centers;
        std::vector<double> scales;
        // reach (|center| + radius) stays below 0.9 so supports clear the
        // cut-cell boundary layer on grids down to h = 1/16
        if (dim == 1) {
            centers = {Vec{0.5}, Vec{0.35}, Vec{0.65}, Vec{0.45}, Vec{0.55}};
            scales = {0.1, 0.18, 0.25};
        } else if (dim == 2) {
            centers = {Vec{0.0, 0.5}, Vec{-0.3, 0.45}, Vec{0.3, 0.45}, Vec{-0.15, 0.6},
                       Vec{0.15, 0.6}};
            scales = {0.12, 0.2, 0.28};
        } else {
            centers = {Vec{0.0, 0.0, 0.5}, Vec{-0.3, 0.0, 0.45}, Vec{0.3, 0.0, 0.45},
                       Vec{0.0, -0.25, 0.55}, Vec{0.0, 0.25, 0.55}};
            scales = {0.12, 0.18, 0.25};
        }
        std::vector<TestFunction> fam;
        int idx = 0;
        for (double s : scales)
            for (const Vec& c : centers) {
                TestFunction t = bump(c, s, "bump" + std::to_string(idx++));
                if (!t.supported_in_open_half_ball(1.0))
                    throw std::logic_error("test-function family member escapes the domain");
                fam.push_back(std::move(t));
            }
        return fam;
    }

  private:
    Family family_;
    Vec center_;
    double radius_;
    std::string label_;

    TestFunction(Family f, Vec c, double r, std::string label)
        : family_(f), center_(c), radius_(r), label_(std::move(label)) {
        if (r <= 0) throw std::invalid_argument("TestFunction: radius must be positive");
    }

    double s_of(const Vec& x) const {
        double s = 0;
        for (int k = 0; k < x.n; ++k) s += (x[k] - center_[k]) * (x[k] - center_[k]);
        return s / (radius_ * radius_);
    }
};

}  // namespace stablab::estimators
