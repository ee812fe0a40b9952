// Acceptance suite: one line per criterion, nonzero exit when any fails.
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "stablab/estimators.hpp"
#include "stablab/harness.hpp"
#include "stablab/interpolation.hpp"
#include "stablab/reflection.hpp"
#include "stablab/simon.hpp"

using namespace stablab;
using namespace stablab::geometry;
using namespace stablab::estimators;
using exprlang::Nonlinearity;
using linalg::Mat;
using linalg::Vec;
using operators::CoefficientSpec;
using solver::Problem;

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("CRITERION %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// --------------------------------------------------------------------------

void criterion1_manufactured() {
    Timer timer;
    auto u_exact = [](const Vec& p) { return std::sin(M_PI * p[0]) * std::sin(M_PI * p[1]); };
    auto spec_strings = std::vector<std::vector<std::string>>{{"1+0.1*x1", "0"}, {"0", "1"}};
    auto src = [&](const Vec& p) {
        double s = u_exact(p);
        return M_PI * M_PI * (2.0 + 0.1 * p[0]) * s - std::exp(s);
    };
    std::vector<double> errs;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        Grid g(DomainSpec::unit_box(2), h);
        Problem p(g, CoefficientSpec::from_strings(2, spec_strings, {"0", "0"}),
                  Nonlinearity::named("exp"), 1.0, src);
        ScalarField u = solver::solve_newton(p, ScalarField(g));
        double worst = 0;
        for (int node = 0; node < g.n_nodes(); ++node)
            worst = std::max(worst, std::abs(u[node] - u_exact(g.point(node))));
        errs.push_back(worst);
    }
    double o1 = linalg::observed_order(errs[0], errs[1]);
    double o2 = linalg::observed_order(errs[1], errs[2]);
    double secs = timer.seconds();
    bool pass = o1 >= 1.7 && o2 >= 1.7 && secs < 30.0;
    report(1, pass,
           "manufactured box orders " + fmt(o1) + ", " + fmt(o2) + " (need >= 1.7); " +
               fmt(secs) + " s (< 30)");
}

void criterion2_folds() {
    bool pass = true;
    std::string detail;
    {
        Timer timer;
        Grid g(DomainSpec::interval(0.0, 1.0), 1.0 / 512);
        Problem p(g, CoefficientSpec::laplacian(1), Nonlinearity::named("exp"), 0.0);
        solver::StepPolicy pol;
        pol.lambda0 = 0.25;
        pol.step0 = 0.25;
        solver::Branch br = solver::trace_branch(p, pol);
        double oracle_star = oracle::Gelfand1D::lambda_star();
        double rel = std::abs(br.lambda_star - oracle_star) / oracle_star;
        double secs = timer.seconds();
        pass = pass && rel <= 0.01 && secs < 60.0;
        detail += "1-D fold " + fmt(br.lambda_star) + " vs oracle " + fmt(oracle_star) +
                  " (rel " + fmt(rel) + ", need <= 1%); " + fmt(secs) + " s";
    }
    {
        Timer timer;
        Grid g(DomainSpec::radial(2, 1.0), 1.0 / 512);
        Problem p(g, CoefficientSpec::laplacian(2), Nonlinearity::named("exp"), 0.0);
        solver::StepPolicy pol;
        pol.lambda0 = 0.2;
        pol.step0 = 0.2;
        solver::Branch br = solver::trace_branch(p, pol);
        double rel = std::abs(br.lambda_star - 2.0) / 2.0;
        double secs = timer.seconds();
        pass = pass && rel <= 0.02 && secs < 60.0;
        detail += "; disc fold " + fmt(br.lambda_star) + " vs 2 (rel " + fmt(rel) +
                  ", need <= 2%); " + fmt(secs) + " s";
    }
    report(2, pass, detail);
}

void criterion3_dimension_threshold() {
    Timer timer;
    bool pass = true;
    for (int n : {9, 10, 3}) {
        auto s = solver::radial_singular_stability(n);
        bool expect_stable = oracle::hardy_stable(n);
        if ((s == solver::StabilitySign::Stable) != expect_stable) pass = false;
    }
    double secs = timer.seconds();
    pass = pass && secs < 10.0;
    report(3, pass,
           "singular profile unstable for n = 9, stable for n = 10 (Hardy oracle: 12.25 < 14, "
           "16 >= 16); " + fmt(secs) + " s (< 10)");
}

void criterion4_stability_gap() {
    Timer timer;
    Grid g(DomainSpec::half_ball(2, 1.0), 1.0 / 64);
    Problem p(g, CoefficientSpec::laplacian(2), Nonlinearity::named("exp"), 0.0);
    solver::StepPolicy pol;
    pol.lambda0 = 0.3;
    pol.step0 = 0.3;
    pol.step_min_rel = 1e-4;
    solver::Branch br = solver::trace_branch(p, pol);
    auto family = TestFunction::half_ball_family(2);
    int violations = 0, tested = 0, stable_points = 0;
    double worst = 0;
    for (const auto& pt : br.points) {
        if (pt.mu1 < 0) continue;
        ++stable_points;
        Problem q = p;
        q.lambda = pt.lambda;
        Context ctx = make_context(q, pt.u);
        for (const auto& xi : family) {
            GapResult r = stability_gap(ctx, xi);
            double tol = kStabilityGapTolFactor * g.h() * std::max(r.rhs, 1e-12);
            if (r.lhs > r.rhs + tol) ++violations;
            worst = std::max(worst, r.lhs / (r.rhs + tol));
            ++tested;
        }
    }
    double secs = timer.seconds();
    bool pass = violations == 0 && stable_points >= 5 && tested == 15 * stable_points;
    report(4, pass,
           std::to_string(violations) + " violations over " + std::to_string(stable_points) +
               " branch points x 15 test functions, worst slack ratio " + fmt(worst) + "; " +
               fmt(secs) + " s");
}

void criterion5_curvature_equivalence() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss;
    auto random_spd = [&](int n) {
        Mat b(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = gauss(rng);
        Mat m = matmul(b, transpose(b));
        for (int i = 0; i < n; ++i) m(i, i) += 0.3;
        return m;
    };
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + (trial % 2);
        Mat Ax = random_spd(n), A0 = random_spd(n);
        Mat H(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) H(i, j) = H(j, i) = gauss(rng);
        Vec g(n);
        for (int k = 0; k < n; ++k) g[k] = gauss(rng);
        if (linalg::norm2(g) < 1e-3) g[0] = 1.0;
        double a2 = curvature_sq_trace_form(Ax, A0, H, g);
        double b2 = curvature_sq_root_form(linalg::sqrt_spd(Ax), linalg::sqrt_spd(A0), H, g, A0);
        double scale = std::max({std::abs(a2), std::abs(b2),
                                 1e-6 * linalg::frobenius(H) * linalg::frobenius(H)});
        worst = std::max(worst, std::abs(a2 - b2) / scale);
    }
    report(5, worst <= 1e-8,
           "two curvature forms agree to " + fmt(worst) + " relative on 100 fixtures (need <= 1e-8)");
}

struct FamilyOutcome {
    std::map<std::string, std::vector<double>> ratios;
    int failures = 0;
    int members = 0;
    double seconds = 0;
};

FamilyOutcome run_family() {
    Timer timer;
    harness::RunConfig base;
    base.run_id = "acceptance_family";
    base.domain = DomainSpec::half_ball(2, 1.0);
    base.h = 1.0 / 48;
    base.branch.lambda0 = 0.3;
    base.branch.step0 = 0.3;
    base.branch.step_min_rel = 1e-4;
    base.checks = {"hessian_suite", "energy_ratio", "grad_l2_vs_l1", "curvature_energy",
                   "curvature_routes", "eps_smallness", "stability_gap"};
    std::vector<harness::FamilyVariant> variants;
    for (const std::string nl : {"exp", "power3"})
        for (double pert : {0.0, 0.05, 0.1})
            for (double frac : {0.2, 0.5, 0.8})
                variants.push_back({nl + "/" + fmt(pert) + "/" + fmt(frac), nl, pert, frac});

    std::vector<harness::FamilyMemberResult> results(variants.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= variants.size()) break;
            results[i] = harness::run_family_member(base, variants[i]);
        }
    };
    unsigned hw = std::max(2u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < std::min<unsigned>(hw, variants.size()); ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    FamilyOutcome out;
    out.members = static_cast<int>(results.size());
    for (const auto& r : results) {
        if (!r.error.empty()) {
            ++out.failures;
            continue;
        }
        for (const auto& row : r.report.rows)
            if (row.rhs > 0) out.ratios[row.name].push_back(row.ratio);
    }
    out.seconds = timer.seconds();
    return out;
}

const FamilyOutcome& family_outcome() {
    static FamilyOutcome out = run_family();
    return out;
}

bool spread_ok(const FamilyOutcome& f, const std::string& check, std::string& detail) {
    auto it = f.ratios.find(check);
    if (it == f.ratios.end() || it->second.size() < 18) {
        detail += check + ": missing members; ";
        return false;
    }
    std::vector<double> sorted = it->second;
    for (double v : sorted)
        if (!std::isfinite(v)) {
            detail += check + ": non-finite ratio; ";
            return false;
        }
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    double maxr = sorted.back();
    detail += check + " max/median " + fmt(maxr / median) + "; ";
    return maxr <= 10.0 * median;
}

void criterion6_suite_universality() {
    const FamilyOutcome& f = family_outcome();
    std::string detail;
    bool pass = f.failures == 0;
    for (const char* check : {"boundary_gradient_l2", "hessian_gradient_l1", "curvature_l2",
                              "hessian_l1"})
        pass = spread_ok(f, check, detail) && pass;
    pass = pass && f.seconds < 900.0;
    detail += fmt(f.seconds) + " s (< 900), " + std::to_string(f.members) + " members";
    report(6, pass, detail);
}

void criterion7_energy_universality() {
    const FamilyOutcome& f = family_outcome();
    std::string detail;
    bool pass = spread_ok(f, "energy_ratio", detail);

    // scaling invariance of the ratio under u -> 2u
    Grid g(DomainSpec::half_ball(2, 1.0), 1.0 / 32);
    Problem p(g, CoefficientSpec::laplacian(2), Nonlinearity::named("exp"), 1.0);
    ScalarField u = solver::solve_newton(p, ScalarField(g));
    Context ctx = make_context(p, u);
    double gamma = 0.5 * admissible_gamma_bound(2);
    EnergyRatio r1 = energy_ratio(ctx, gamma);
    ScalarField u2 = u;
    for (int node = 0; node < g.n_nodes(); ++node) u2[node] *= 2.0;
    Context ctx2 = make_context(p, u2);
    EnergyRatio r2 = energy_ratio(ctx2, gamma);
    double drift = std::abs(r2.lhs / r2.rhs - r1.lhs / r1.rhs) / (r1.lhs / r1.rhs);
    pass = pass && drift <= 1e-10;
    detail += "scaling drift " + fmt(drift) + " (need <= 1e-10)";
    report(7, pass, detail);
}

void criterion8_pohozaev_order() {
    std::vector<double> residuals;
    TestFunction eta = TestFunction::bump(Vec{0.0, 0.0}, 0.77);
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        Grid g(DomainSpec::half_ball(2, 1.0), h);
        Problem p(g, CoefficientSpec::laplacian(2), Nonlinearity::named("zero"), 0.0);
        ScalarField u =
            ScalarField::sample(g, [](const Vec& q) { return q[1] * (1.0 - dot(q, q)); });
        Context ctx = make_context(p, u);
        residuals.push_back(boundary_gradient_identity(ctx, eta).residual());
    }
    double o1 = linalg::observed_order(residuals[0], residuals[1]);
    double o2 = linalg::observed_order(residuals[1], residuals[2]);
    report(8, o1 >= 0.9 && o2 >= 0.9,
           "identity residual orders " + fmt(o1) + ", " + fmt(o2) + " (need >= 0.9)");
}

void criterion9_interpolation_and_reflection() {
    const double C_test = 100.0;
    Grid cube(DomainSpec::unit_box(2), 1.0 / 64);
    std::vector<std::function<double(const Vec&)>> fields = {
        [](const Vec& p) { return std::sin(M_PI * p[0]) * std::sin(M_PI * p[1]); },
        [](const Vec& p) { return p[0] * (1 - p[0]) * p[1] * (1 - p[1]); },
        [](const Vec& p) { return std::exp(p[0] + 0.5 * p[1]); },
        [](const Vec& p) { return std::cos(2 * M_PI * p[0]) + std::cos(2 * M_PI * p[1]); },
        [](const Vec&) { return 1.0; }};
    bool interp_ok = true;
    double worst_ratio = 0;
    for (const auto& f : fields) {
        ScalarField uf = ScalarField::sample(cube, f);
        for (int d = 1; d <= 9; ++d) {
            EstimateReport rep = interpolation_props(uf, 0.1 * d, 0.1 * d);
            for (const auto& row : rep.rows) {
                if (row.rhs > 0) worst_ratio = std::max(worst_ratio, row.ratio);
                if (row.lhs > C_test * row.rhs + 1e-12) interp_ok = false;
            }
        }
    }
    double hr = 1.0 / 16;
    Grid hb(DomainSpec::half_ball(2, 1.0), hr);
    Grid ball(DomainSpec::ball(2, 1.0), hr);
    ScalarField cub = ScalarField::sample(hb, [](const Vec& q) { return q[1] * q[1] * q[1]; });
    auto rr = reflect_third_order(cub, ball);
    double worst_refl = 0;
    for (int node = 0; node < ball.n_nodes(); ++node) {
        Vec q = ball.point(node);
        if (linalg::norm2(q) > 0.6) continue;
        worst_refl = std::max(worst_refl, std::abs(rr.field[node] - q[1] * q[1] * q[1]));
    }
    report(9, interp_ok && worst_refl <= 1e-10,
           "interpolation worst lhs/rhs " + fmt(worst_ratio) + " (need <= 100); cubic reflection error " +
               fmt(worst_refl) + " (need <= 1e-10)");
}

void criterion10_absorption() {
    BallFunctional measure{2, [](const Vec& c, double r) {
        int cells = 24;
        double hh = 2.0 * r / cells, sum = 0;
        for (int i = 0; i < cells; ++i)
            for (int j = 0; j < cells; ++j) {
                double x = c[0] - r + (i + 0.5) * hh, y = c[1] - r + (j + 0.5) * hh;
                if ((x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]) < r * r && x * x + y * y < 1.0)
                    sum += hh * hh;
            }
        return sum;
    }};
    auto r1 = simon_absorption(measure, 0.0, M_PI, 0.9);
    bool cert1 = std::holds_alternative<SimonCertificate>(r1);

    BallFunctional invr{2, [](const Vec&, double r) { return 1.0 / r; }};
    auto r2 = simon_absorption(invr, 1.0, 2.0, 0.5);
    bool cert2 = std::holds_alternative<SimonCertificate>(r2);

    BallFunctional planted{2, [](const Vec&, double r) { return r < 0.3 ? 1.0 : 0.0; }};
    auto r3 = simon_absorption(planted, 0.0, 0.01, 0.5);
    bool detected = std::holds_alternative<SimonViolation>(r3);

    std::string detail = "measure fixture ";
    detail += cert1 ? ("C = " + fmt(std::get<SimonCertificate>(r1).C)) : "no certificate";
    detail += ", 1/radius fixture ";
    detail += cert2 ? ("C = " + fmt(std::get<SimonCertificate>(r2).C)) : "no certificate";
    detail += detected ? ", planted violation detected" : ", planted violation MISSED";
    report(10, cert1 && cert2 && detected, detail);
}

void criterion11_determinism() {
    fs::path tmp = fs::temp_directory_path() / "stablab_acceptance";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    std::ofstream cfg(tmp / "det.json");
    cfg << R"({
        "run_id": "acc_det", "seed": 3,
        "problem": {"domain": {"type": "half_ball", "n": 2},
                     "nonlinearity": {"family": "exp"}, "lambda": 1.0},
        "grid": {"h": 0.03125},
        "output": {"dir": ".", "csv": "det.csv"}
    })";
    cfg.close();
    auto run = [&](const std::string& out) {
        std::string cmd = std::string(STABLAB_CLI) + " verify --config " + (tmp / "det.json").string() +
                          " --no-timestamp --out " + (tmp / out).string() + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    int e1 = run("a"), e2 = run("b");
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string a = slurp(tmp / "a" / "det.csv"), b = slurp(tmp / "b" / "det.csv");
    bool pass = e1 == 0 && e2 == 0 && !a.empty() && a == b;
    report(11, pass,
           "two verify runs, exits " + std::to_string(e1) + "/" + std::to_string(e2) +
               ", byte-identical CSV: " + (a == b ? "yes" : "NO"));
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion1_manufactured();
    criterion2_folds();
    criterion3_dimension_threshold();
    criterion4_stability_gap();
    criterion5_curvature_equivalence();
    criterion6_suite_universality();
    criterion7_energy_universality();
    criterion8_pohozaev_order();
    criterion9_interpolation_and_reflection();
    criterion10_absorption();
    criterion11_determinism();
    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria PASS\n");
    return 0;
}
