#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "stablab/solver.hpp"

using namespace stablab::solver;
using namespace stablab::geometry;
using stablab::exprlang::Nonlinearity;
using stablab::linalg::Vec;

namespace {
Problem gelfand_1d(const Grid& g, double lambda) {
    return Problem(g, stablab::operators::CoefficientSpec::laplacian(1),
                   Nonlinearity::named("exp"), lambda);
}
}  // namespace

TEST_CASE("oracle self-check: closed form agrees with RK4 shooting") {
    // the fold of the 1-D problem sits at lambda* ~ 3.5138
    double ls = oracle::Gelfand1D::lambda_star();
    CHECK(ls == doctest::Approx(3.5138).epsilon(2e-4));
    // shooting reproduces the closed-form lower-branch maximum at lambda = 1
    double m_closed = oracle::Gelfand1D::max_u(1.0);
    double m_shoot = oracle::gelfand1d_shoot_max(1.0);
    CHECK(m_closed == doctest::Approx(m_shoot).epsilon(1e-5));
    // disc solution: center value 2 log 2 at the fold lambda = 2 hits u(1) = 0
    double end = oracle::gelfand_disc_shoot_end(2.0, 2.0 * std::log(2.0));
    CHECK(std::abs(end) < 1e-4);
    CHECK(oracle::GelfandDisc::lambda_star() == 2.0);
}

TEST_CASE("solve_newton: lambda = 0 returns the zero solution") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 64);
    Problem p = gelfand_1d(g, 0.0);
    ScalarField u = solve_newton(p, ScalarField(g));
    CHECK(u.max_abs() == doctest::Approx(0.0));
}

TEST_CASE("solve_newton: 1-D problem at small lambda matches the shooting oracle") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 256);
    Problem p = gelfand_1d(g, 0.1);
    ScalarField u = solve_newton(p, ScalarField(g));
    // oracle value 0.012665 (leading order lambda/8 = 0.0125)
    double expect = oracle::Gelfand1D::max_u(0.1);
    CHECK(expect == doctest::Approx(0.0125).epsilon(0.05));
    CHECK(u.max() == doctest::Approx(expect).epsilon(5e-4 / expect));

    NewtonResult res = solve_newton_detailed(p, ScalarField(g));
    CHECK(res.residual <= 1e-10 * 1.0e1);
    CHECK(res.iterations < 20);
}

TEST_CASE("solve_newton: divergence above the fold") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 128);
    Problem p = gelfand_1d(g, 4.0);  // above lambda* ~ 3.51
    CHECK_THROWS_AS(solve_newton(p, ScalarField(g)), SolveFailure);
}

TEST_CASE("solve_newton: manufactured solution converges at order >= 1.7") {
    auto u_exact = [](const Vec& p) { return std::sin(M_PI * p[0]) * std::sin(M_PI * p[1]); };
    auto spec = stablab::operators::CoefficientSpec::from_strings(
        2, {{"1+0.1*x1", "0"}, {"0", "1"}}, {"0", "0"});
    auto source = [&](const Vec& p) {
        double s = u_exact(p);
        return M_PI * M_PI * (2.0 + 0.1 * p[0]) * s - std::exp(s);
    };
    std::vector<double> errs;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        Grid g(DomainSpec::unit_box(2), h);
        Problem p(g, spec, Nonlinearity::named("exp"), 1.0, source);
        ScalarField u = solve_newton(p, ScalarField(g));
        double worst = 0;
        for (int node = 0; node < g.n_nodes(); ++node)
            worst = std::max(worst, std::abs(u[node] - u_exact(g.point(node))));
        errs.push_back(worst);
    }
    CHECK(stablab::linalg::observed_order(errs[0], errs[1]) >= 1.7);
    CHECK(stablab::linalg::observed_order(errs[1], errs[2]) >= 1.7);
}

TEST_CASE("monotone_iteration: zero nonlinearity fixes the zero solution") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 64);
    Problem p(g, stablab::operators::CoefficientSpec::laplacian(1),
              Nonlinearity::named("linear"), 1.0);
    ScalarField lower(g, 0.0), upper(g, 1.0);
    for (int node = 0; node < g.n_nodes(); ++node)
        if (g.is_boundary(node)) upper[node] = 0.0;
    // f(0) = 0, so 0 is already the fixed point
    ScalarField u = monotone_iteration(p, lower, upper);
    CHECK(u.max_abs() == doctest::Approx(0.0));
}

TEST_CASE("monotone_iteration agrees with Newton on the 1-D problem") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 128);
    Problem p = gelfand_1d(g, 1.0);
    ScalarField newton = solve_newton(p, ScalarField(g));
    ScalarField upper = newton;
    for (int node = 0; node < g.n_nodes(); ++node)
        if (!g.is_boundary(node)) upper[node] += 0.5;
    ScalarField mono = monotone_iteration(p, ScalarField(g), upper);
    double worst = 0;
    for (int node = 0; node < g.n_nodes(); ++node)
        worst = std::max(worst, std::abs(mono[node] - newton[node]));
    CHECK(worst < 1e-6);
}

TEST_CASE("monotone_iteration above the fold violates the bracket") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 128);
    // a solution bracket computed just below the fold ...
    Problem pstar = gelfand_1d(g, 3.45);
    ScalarField ustar = solve_newton(pstar, ScalarField(g));
    ScalarField upper = ustar;
    for (int node = 0; node < g.n_nodes(); ++node)
        if (!g.is_boundary(node)) upper[node] += 0.2;
    // ... cannot confine the iteration once lambda exceeds lambda*
    Problem p = gelfand_1d(g, 3.6);
    CHECK_THROWS_AS(monotone_iteration(p, ScalarField(g), upper), HypothesisViolation);
}

TEST_CASE("principal_eigenvalue: separation-of-variables oracles") {
    {
        Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 256);
        auto L = stablab::operators::assemble_L(stablab::operators::CoefficientSpec::laplacian(1), g);
        Eigenpair e = principal_eigenvalue(L);
        CHECK(std::abs(e.mu - M_PI * M_PI) < 0.005 * M_PI * M_PI);
        CHECK(e.positive);
        CHECK(e.residual <= 1e-8 * e.op_norm);
        double phimax = 0;
        for (int node = 0; node < g.n_nodes(); ++node) phimax = std::max(phimax, e.phi[node]);
        CHECK(phimax == doctest::Approx(1.0));

        // diagonal shift moves mu1 by exactly -c
        ScalarField zero(g, 0.0);
        auto J = stablab::operators::assemble_Ju(L, Nonlinearity::named("linear"), zero, 2.0);
        Eigenpair e2 = principal_eigenvalue(J);
        CHECK(e2.mu == doctest::Approx(e.mu - 2.0).epsilon(1e-8));
    }
    {
        Grid g(DomainSpec::unit_box(2), 1.0 / 64);
        auto L = stablab::operators::assemble_L(stablab::operators::CoefficientSpec::laplacian(2), g);
        Eigenpair e = principal_eigenvalue(L);
        CHECK(std::abs(e.mu - 2.0 * M_PI * M_PI) < 0.01 * 2.0 * M_PI * M_PI);
        CHECK(e.positive);
    }
}

TEST_CASE("trace_branch: 1-D fold within 2% at h = 1/256") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 256);
    Problem p = gelfand_1d(g, 0.0);
    StepPolicy pol;
    pol.lambda0 = 0.25;
    pol.step0 = 0.25;
    Branch br = trace_branch(p, pol);
    double ls = oracle::Gelfand1D::lambda_star();
    CHECK(std::abs(br.lambda_star - ls) < 0.02 * ls);

    // lambda strictly increasing, u monotone in lambda, mu1 decreasing to 0
    for (size_t k = 1; k < br.points.size(); ++k) {
        CHECK(br.points[k].lambda > br.points[k - 1].lambda);
        CHECK(br.points[k].mu1 <= br.points[k - 1].mu1 + 1e-8 * std::abs(br.points[k - 1].mu1));
        for (int node = 0; node < g.n_nodes(); ++node)
            CHECK(br.points[k].u[node] >= br.points[k - 1].u[node] - 1e-10);
    }
    CHECK(br.points.back().mu1 >= -1e-6 * std::abs(br.points.front().mu1));
    CHECK(br.points.back().mu1 < 0.2 * br.points.front().mu1);  // approaching the fold

    // solution values match the closed-form branch at an interior lambda
    const BranchPoint* at1 = nullptr;
    double best = 1e9;
    for (const auto& pt : br.points)
        if (std::abs(pt.lambda - 1.0) < best) best = std::abs(pt.lambda - 1.0), at1 = &pt;
    if (at1 && std::abs(at1->lambda - 1.0) < 0.3) {
        double expect = oracle::Gelfand1D::max_u(at1->lambda);
        CHECK(at1->u.max() == doctest::Approx(expect).epsilon(1e-3));
    }
}

TEST_CASE("trace_branch: radial disc fold at lambda* = 2 within 2%") {
    Grid g(DomainSpec::radial(2, 1.0), 1.0 / 512);
    Problem p(g, stablab::operators::CoefficientSpec::laplacian(2), Nonlinearity::named("exp"), 0.0);
    StepPolicy pol;
    pol.lambda0 = 0.2;
    pol.step0 = 0.2;
    Branch br = trace_branch(p, pol);
    CHECK(std::abs(br.lambda_star - 2.0) < 0.04);
    // center value at the fold approaches 2 log 2
    CHECK(br.points.back().u.max() == doctest::Approx(2.0 * std::log(2.0)).epsilon(0.05));
}

TEST_CASE("trace_branch: linear nonlinearity terminates at the eigenvalue crossing") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 128);
    Problem p(g, stablab::operators::CoefficientSpec::laplacian(1), Nonlinearity::named("linear"),
              0.0);
    StepPolicy pol;
    pol.lambda0 = 1.0;
    pol.step0 = 1.0;
    Branch br = trace_branch(p, pol);
    CHECK(br.lambda_star == doctest::Approx(M_PI * M_PI).epsilon(0.02));
    for (const auto& pt : br.points) CHECK(pt.u.max_abs() == doctest::Approx(0.0));
}

TEST_CASE("trace_branch: pseudo-arclength continues past the fold") {
    Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 128);
    Problem p = gelfand_1d(g, 0.0);
    StepPolicy pol;
    pol.lambda0 = 0.25;
    pol.step0 = 0.25;
    pol.step_min_rel = 1e-4;
    pol.arclength = true;
    pol.arclength_points = 25;
    pol.arclength_ds = 0.15;
    Branch br = trace_branch(p, pol);
    // find the turning point: lambda must decrease afterwards while max u grows
    double lmax = 0;
    size_t kmax = 0;
    for (size_t k = 0; k < br.points.size(); ++k)
        if (br.points[k].lambda > lmax) lmax = br.points[k].lambda, kmax = k;
    REQUIRE(kmax + 2 < br.points.size());
    CHECK(br.points.back().lambda < lmax);
    CHECK(br.points.back().u.max() > br.points[kmax].u.max());
    CHECK_FALSE(br.points.back().stable);  // upper segment is unstable
}

TEST_CASE("radial_singular_stability matches the Hardy oracle") {
    CHECK(radial_singular_stability(10) == StabilitySign::Stable);
    CHECK(radial_singular_stability(9) == StabilitySign::Unstable);
    CHECK(radial_singular_stability(3) == StabilitySign::Unstable);
    for (int n = 3; n <= 15; ++n) {
        auto s = radial_singular_stability(n, 1e-8, 1e-4, 40000);
        CHECK((s == StabilitySign::Stable) == oracle::hardy_stable(n));
    }
    CHECK_THROWS(radial_singular_stability(2));
    CHECK_THROWS(radial_singular_stability(16));
}

TEST_CASE("solve_newton: half-ball manufactured solution converges at order >= 0.9") {
    // u = x2 (1 - |x|^2) vanishes on the whole boundary; the cut-cell
    // Dirichlet nodes sit O(h) inside the true sphere, so first order is
    // what the masking supports near the curved rim
    auto u_exact = [](const Vec& p) { return p[1] * (1.0 - dot(p, p)); };
    auto source = [](const Vec& p) { return 8.0 * p[1]; };  // -Lap u_exact
    std::vector<double> errs;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        Grid g(DomainSpec::half_ball(2, 1.0), h);
        Problem p(g, stablab::operators::CoefficientSpec::laplacian(2),
                  Nonlinearity::named("zero"), 0.0, source);
        ScalarField u = solve_newton(p, ScalarField(g));
        double worst = 0;
        for (int i = 0; i < g.n_interior(); ++i) {
            int node = g.interior_to_node(i);
            worst = std::max(worst, std::abs(u[node] - u_exact(g.point(node))));
        }
        errs.push_back(worst);
    }
    // the rim error approaches first order from below (0.81, 0.90, 0.92 on
    // successive pairs); the finest pair carries the observed order
    CHECK(stablab::linalg::observed_order(errs[0], errs[1]) >= 0.85);
    CHECK(stablab::linalg::observed_order(errs[1], errs[2]) >= 0.9);
}

TEST_CASE("3-D smoke: box eigenvalue and half-ball stability gap machinery") {
    {
        Grid g(DomainSpec::unit_box(3), 1.0 / 12);
        auto L = stablab::operators::assemble_L(stablab::operators::CoefficientSpec::laplacian(3), g);
        Eigenpair e = principal_eigenvalue(L);
        CHECK(std::abs(e.mu - 3.0 * M_PI * M_PI) < 0.02 * 3.0 * M_PI * M_PI);
        CHECK(e.positive);
    }
    {
        Grid g(DomainSpec::half_ball(3, 1.0), 1.0 / 8);
        Problem p(g, stablab::operators::CoefficientSpec::laplacian(3),
                  Nonlinearity::named("exp"), 0.5);
        ScalarField u = solve_newton(p, ScalarField(g));
        CHECK(u.max() > 0.0);
        CHECK(u.nan_free());
        auto J = stablab::operators::assemble_Ju(
            stablab::operators::assemble_L(p.coeffs, g), p.f, u, p.lambda);
        Eigenpair e = principal_eigenvalue(J);
        CHECK(e.mu > 0.0);  // well below the fold
        CHECK(e.positive);
    }
}

TEST_CASE("monotone iteration agrees with Newton on the 2-D half-ball") {
    Grid g(DomainSpec::half_ball(2, 1.0), 1.0 / 24);
    Problem p(g, stablab::operators::CoefficientSpec::laplacian(2), Nonlinearity::named("exp"),
              1.0);
    ScalarField newton = solve_newton(p, ScalarField(g));
    ScalarField upper = newton;
    for (int node = 0; node < g.n_nodes(); ++node)
        if (!g.is_boundary(node)) upper[node] += 0.5;
    ScalarField mono = monotone_iteration(p, ScalarField(g), upper);
    double worst = 0;
    for (int node = 0; node < g.n_nodes(); ++node)
        worst = std::max(worst, std::abs(mono[node] - newton[node]));
    CHECK(worst < 1e-6);
}

TEST_CASE("solving on flattened coefficients matches the graph-domain pullback") {
    // -Lap u = g on the domain above gamma(x1) = 0.15 x1 (1 - x1), with
    // u = sin(pi x1) sin(pi (x2 - gamma)) vanishing on the graph; after the
    // shear the problem lives on the unit box and Newton on the transformed
    // operator must reproduce v(y) = sin(pi y1) sin(pi y2).
    using stablab::exprlang::Expr;
    Expr gamma = Expr::parse("0.15*x1*(1-x1)", {"x1"});
    auto tilted = stablab::operators::flatten(gamma, stablab::operators::CoefficientSpec::laplacian(2));
    auto v_exact = [](const Vec& q) { return std::sin(M_PI * q[0]) * std::sin(M_PI * q[1]); };
    std::vector<double> errs;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        Grid g(DomainSpec::unit_box(2), h);
        auto src = [&](const Vec& q) {
            double gp = 0.15 * (1.0 - 2.0 * q[0]), gpp = -0.3;
            double s1 = std::sin(M_PI * q[0]), c1 = std::cos(M_PI * q[0]);
            double s2 = std::sin(M_PI * q[1]), c2 = std::cos(M_PI * q[1]);
            // -(Lap u) o Phi^{-1}, differentiated by hand on the graph side
            return M_PI * M_PI * (2.0 + gp * gp) * s1 * s2 +
                   2.0 * M_PI * M_PI * gp * c1 * c2 + M_PI * gpp * s1 * c2;
        };
        Problem p(g, tilted, Nonlinearity::named("zero"), 0.0, src);
        ScalarField v = solve_newton(p, ScalarField(g));
        double worst = 0;
        for (int node = 0; node < g.n_nodes(); ++node)
            worst = std::max(worst, std::abs(v[node] - v_exact(g.point(node))));
        errs.push_back(worst);
    }
    CHECK(stablab::linalg::observed_order(errs[0], errs[1]) >= 1.7);
    CHECK(stablab::linalg::observed_order(errs[1], errs[2]) >= 1.7);
}
