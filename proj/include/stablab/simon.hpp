// Absorption device for ball functionals: a subadditive sigma satisfying
//   rho^beta sigma(B_{rho/2}(y)) <= delta rho^beta sigma(B_rho(y)) + C0
// on all balls inside B_1 obeys sigma(B_{1/2}) <= C C0 once delta is below
// the covering threshold. The chain is fully constructive: covering
// B_{rho/2}(y) by N balls of radius rho/8 centered inside it gives
//   Q <= N 2^beta delta Q + N 4^beta C0  for  Q = sup rho^beta sigma(B_{rho/2}(y)),
// hence C = N 4^beta / (1 - N 2^beta delta).
#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "stablab/linalg.hpp"

namespace stablab::estimators {

using linalg::Vec;

struct BallFunctional {
    int dim = 2;
    std::function<double(const Vec& center, double radius)> sigma;
};

// covering number: balls of radius 1/4 with centers on a lattice inside the
// closed unit ball (scaled: any rho/2 ball is covered by rho/8 balls with
// centers inside it). Spacing 1/(4 sqrt(d)) keeps every point of B_1 within
// 1/4 of a kept center even after discarding lattice points outside B_1.
inline std::vector<Vec> quarter_ball_cover(int dim) {
    double spacing = 0.999 / (4.0 * std::sqrt(static_cast<double>(dim)));
    int m = static_cast<int>(std::ceil(1.0 / spacing));
    std::vector<Vec> centers;
    std::array<int, 3> idx{};
    std::function<void(int)> rec = [&](int axis) {
        if (axis == dim) {
            Vec c(dim);
            for (int k = 0; k < dim; ++k) c[k] = idx[k] * spacing;
            if (linalg::norm2(c) <= 1.0 + 1e-12) centers.push_back(c);
            return;
        }
        for (int k = -m; k <= m; ++k) {
            idx[axis] = k;
            rec(axis + 1);
        }
    };
    rec(0);
    return centers;
}

struct SimonCertificate {
    double C = 0;             // sigma(B_{1/2}) <= C * C0
    double delta_used = 0;    // effective absorption coefficient
    double delta_max = 0;     // threshold from the covering number
    int covering_number = 0;
    int hypothesis_samples = 0;
    double observed_half_ball = 0;  // sigma(B_{1/2}) as evaluated
};

struct SimonViolation {
    Vec center;
    double rho = 0;
    double lhs = 0, rhs = 0;
    bool subadditivity = false;  // true: the subadditivity spot-check failed
};

using SimonResult = std::variant<SimonCertificate, SimonViolation>;

inline SimonResult simon_absorption(const BallFunctional& sf, double beta, double C0,
                                    double delta) {
    if (beta < 0 || C0 <= 0 || delta <= 0 || delta >= 1)
        throw std::invalid_argument("simon_absorption: need beta >= 0, C0 > 0, delta in (0,1)");
    const int dim = sf.dim;
    std::vector<Vec> cover = quarter_ball_cover(dim);
    const int N = static_cast<int>(cover.size());
    const double delta_max = 0.5 / (N * std::pow(2.0, beta));
    const double delta_eff = std::min(delta, delta_max);

    // sample centers on a coarse lattice, radii on a dyadic sweep
    std::vector<Vec> ys;
    {
        double spacing = 0.15;
        int m = static_cast<int>(std::ceil(1.0 / spacing));
        std::array<int, 3> idx{};
        std::function<void(int)> rec = [&](int axis) {
            if (axis == dim) {
                Vec y(dim);
                for (int k = 0; k < dim; ++k) y[k] = idx[k] * spacing;
                if (linalg::norm2(y) < 1.0 - 1e-9) ys.push_back(y);
                return;
            }
            for (int k = -m; k <= m; ++k) {
                idx[axis] = k;
                rec(axis + 1);
            }
        };
        rec(0);
    }

    int samples = 0;
    for (const Vec& y : ys) {
        double rmax = 1.0 - linalg::norm2(y);
        for (double frac : {1.0, 0.5, 0.25, 0.125}) {
            double rho = frac * rmax;
            if (rho <= 1e-6) continue;
            ++samples;
            // subadditivity spot-check: the rho/8 lattice balls centered in
            // B_{rho/2}(y) cover it
            double whole = sf.sigma(y, rho);
            double pieces = 0;
            for (const Vec& c : cover) {
                Vec z = y;
                for (int k = 0; k < dim; ++k) z[k] += 0.5 * rho * c[k];
                pieces += sf.sigma(z, 0.125 * rho);
            }
            double half = sf.sigma(y, 0.5 * rho);
            if (half > pieces * (1.0 + 1e-9) + 1e-12)
                return SimonViolation{y, rho, half, pieces, true};
            // the absorption hypothesis at the effective delta
            double lhs = std::pow(rho, beta) * half;
            double rhs = delta_eff * std::pow(rho, beta) * whole + C0;
            if (lhs > rhs * (1.0 + 1e-9) + 1e-12)
                return SimonViolation{y, rho, lhs, rhs, false};
        }
    }

    SimonCertificate cert;
    cert.covering_number = N;
    cert.delta_max = delta_max;
    cert.delta_used = delta_eff;
    cert.hypothesis_samples = samples;
    cert.C = N * std::pow(4.0, beta) / (1.0 - N * std::pow(2.0, beta) * delta_eff);
    cert.observed_half_ball = sf.sigma(Vec(dim), 0.5);
    if (cert.observed_half_ball > cert.C * C0 * (1.0 + 1e-9))
        return SimonViolation{Vec(dim), 1.0, cert.observed_half_ball, cert.C * C0, false};
    return cert;
}

}  // namespace stablab::estimators
