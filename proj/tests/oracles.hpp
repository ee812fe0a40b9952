// Independent reference values for the test suites. Everything here is
// derived from closed forms or generic numerics (RK4 shooting, fine
// midpoint quadrature) and never touches the grid/solver code under test.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// -u'' = lambda e^u on (0,1), u(0) = u(1) = 0. Solution family
//   u(x) = m - 2 log cosh(theta (x - 1/2)),
//   m = 2 log cosh(theta/2),  lambda(theta) = 2 theta^2 / cosh(theta/2)^2.
// The fold sits where dlambda/dtheta = 0, i.e. theta tanh(theta/2) = 2.
// ---------------------------------------------------------------------------
struct Gelfand1D {
    static double lambda_of_theta(double th) {
        double c = std::cosh(0.5 * th);
        return 2.0 * th * th / (c * c);
    }
    static double max_of_theta(double th) { return 2.0 * std::log(std::cosh(0.5 * th)); }
    static double value(double th, double x) {
        return max_of_theta(th) - 2.0 * std::log(std::cosh(th * (x - 0.5)));
    }

    static double theta_star() {
        // root of f(theta) = theta tanh(theta/2) - 2 by bisection
        double lo = 1.0, hi = 4.0;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            double f = mid * std::tanh(0.5 * mid) - 2.0;
            (f < 0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    static double lambda_star() { return lambda_of_theta(theta_star()); }

    // lower-branch theta for a given lambda < lambda_star
    static double theta_lower(double lambda) {
        double lo = 0.0, hi = theta_star();
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (lambda_of_theta(mid) < lambda ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    static double max_u(double lambda) { return max_of_theta(theta_lower(lambda)); }
};

// RK4 shooting for the same problem: integrate u'' = -lambda e^u from x = 0
// with u(0) = 0, u'(0) = s and return u(1). Used to cross-check Gelfand1D.
inline double gelfand1d_shoot_end(double lambda, double s, int steps = 4000) {
    double u = 0.0, v = s;
    double h = 1.0 / steps;
    auto f = [lambda](double uu) { return -lambda * std::exp(uu); };
    for (int i = 0; i < steps; ++i) {
        double k1u = v, k1v = f(u);
        double k2u = v + 0.5 * h * k1v, k2v = f(u + 0.5 * h * k1u);
        double k3u = v + 0.5 * h * k2v, k3v = f(u + 0.5 * h * k2u);
        double k4u = v + h * k3v, k4v = f(u + h * k3u);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    return u;
}

// lower-branch max of u via shooting (bisection on the initial slope)
inline double gelfand1d_shoot_max(double lambda) {
    double lo = 0.0;
    double hi = lo;
    double prev = gelfand1d_shoot_end(lambda, lo);
    bool bracketed = false;
    for (double s = 0.05; s < 50.0; s += 0.05) {
        double end = gelfand1d_shoot_end(lambda, s);
        if (prev < 0 && end >= 0) {
            lo = s - 0.05;
            hi = s;
            bracketed = true;
            break;
        }
        prev = end;
    }
    if (!bracketed) throw std::runtime_error("shooting: no lower-branch slope found");
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        (gelfand1d_shoot_end(lambda, mid) < 0 ? lo : hi) = mid;
    }
    double s = 0.5 * (lo + hi);
    // symmetric profile: the max is at the midpoint
    double u = 0.0, v = s, h = 1.0 / 4000;
    double umax = 0.0;
    auto f = [lambda](double uu) { return -lambda * std::exp(uu); };
    for (int i = 0; i < 4000; ++i) {
        double k1u = v, k1v = f(u);
        double k2u = v + 0.5 * h * k1v, k2v = f(u + 0.5 * h * k1u);
        double k3u = v + 0.5 * h * k2v, k3v = f(u + 0.5 * h * k2u);
        double k4u = v + h * k3v, k4v = f(u + h * k3u);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        umax = std::max(umax, u);
    }
    return umax;
}

// ---------------------------------------------------------------------------
// Radial Gelfand on the unit disc (n = 2):
//   u(r) = 2 log((1 + mu) / (1 + mu r^2)),  lambda = 8 mu / (1 + mu)^2,
// fold at mu = 1 with lambda* = 2 and u(0) = 2 log 2.
// ---------------------------------------------------------------------------
struct GelfandDisc {
    static double lambda_of_mu(double mu) { return 8.0 * mu / ((1 + mu) * (1 + mu)); }
    static double center_of_mu(double mu) { return 2.0 * std::log(1 + mu); }
    static double lambda_star() { return 2.0; }
    static double mu_lower(double lambda) {
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (lambda_of_mu(mid) < lambda ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    static double value(double mu, double r) {
        return 2.0 * std::log((1 + mu) / (1 + mu * r * r));
    }
};

// shooting cross-check: integrate u'' + u'/r = -lambda e^u from the center
// with u(0) = m, u'(0) = 0 and report u(1)
inline double gelfand_disc_shoot_end(double lambda, double m, int steps = 8000) {
    double h = 1.0 / steps;
    double r = h;  // series start: u = m - lambda e^m r^2/4 + O(r^4) for n=2
    double u = m - lambda * std::exp(m) * r * r / 4.0;
    double v = -lambda * std::exp(m) * r / 2.0;
    auto acc = [lambda](double rr, double uu, double vv) {
        return -lambda * std::exp(uu) - vv / rr;
    };
    while (r < 1.0 - 0.5 * h) {
        double k1u = v, k1v = acc(r, u, v);
        double k2u = v + 0.5 * h * k1v, k2v = acc(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        double k3u = v + 0.5 * h * k2v, k3v = acc(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        double k4u = v + h * k3v, k4v = acc(r + h, u + h * k3u, v + h * k3v);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        r += h;
    }
    return u;
}

// ---------------------------------------------------------------------------
// Hardy threshold for the singular radial profile: the quadratic form is
// nonnegative iff (n-2)^2/4 >= 2(n-2).
// ---------------------------------------------------------------------------
inline bool hardy_stable(int n) { return 0.25 * (n - 2.0) * (n - 2.0) >= 2.0 * (n - 2.0); }

// ---------------------------------------------------------------------------
// Fine midpoint quadrature over the half-disc {|x| < rho, x2 > 0} and over a
// centered disc, for analytic integrands; independent of the grid code.
// ---------------------------------------------------------------------------
inline double quad_halfdisc(const std::function<double(double, double)>& f, double rho,
                            int cells = 2000) {
    double h = 2.0 * rho / cells;
    double sum = 0.0;
    for (int i = 0; i < cells; ++i)
        for (int j = 0; j < cells / 2; ++j) {
            double x = -rho + (i + 0.5) * h;
            double y = (j + 0.5) * h;
            if (x * x + y * y < rho * rho) sum += f(x, y);
        }
    return sum * h * h;
}

inline double quad_segment(const std::function<double(double)>& f, double a, double b,
                           int cells = 20000) {
    double h = (b - a) / cells;
    double sum = 0.0;
    for (int i = 0; i < cells; ++i) sum += f(a + (i + 0.5) * h);
    return sum * h;
}

// central finite difference of a scalar callable
inline double fd_derivative(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace oracle
