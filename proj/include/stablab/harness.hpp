// Orchestration: solve / branch / verify / convergence runs driven by JSON
// configs, CSV reports, binary field dumps, and the versioned regression
// bounds for the universality checks.
#pragma once

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "stablab/config.hpp"
#include "stablab/covering.hpp"
#include "stablab/estimators.hpp"
#include "stablab/interpolation.hpp"
#include "stablab/reflection.hpp"
#include "stablab/simon.hpp"

namespace stablab::harness {

namespace fs = std::filesystem;
using estimators::CheckRecord;
using estimators::EstimateReport;
using geometry::DomainSpec;
using geometry::Grid;
using geometry::ScalarField;
using solver::Problem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverError = 3, kVerifyError = 4 };

struct CliOptions {
    int threads = 1;
    bool no_timestamp = false;
    bool bless = false;
    std::optional<std::string> out_dir;
};

inline int resolve_threads(const CliOptions& opt) {
    if (opt.threads > 0) return opt.threads;
    if (const char* env = std::getenv("STABLAB_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// Binary solution dump: "STBL1", u32 lattice dim, u32 per-axis counts,
// f64 h, then f64 lattice values in row-major order (exterior nodes NaN),
// all little-endian.
// ---------------------------------------------------------------------------

inline void write_solution(const fs::path& path, const Grid& g, const ScalarField& u) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write("STBL1", 5);
    uint32_t dim = static_cast<uint32_t>(g.lattice_dim());
    out.write(reinterpret_cast<const char*>(&dim), 4);
    for (int k = 0; k < g.lattice_dim(); ++k) {
        uint32_t c = static_cast<uint32_t>(g.lattice_counts()[k]);
        out.write(reinterpret_cast<const char*>(&c), 4);
    }
    double h = g.h();
    out.write(reinterpret_cast<const char*>(&h), 8);
    for (int lat = 0; lat < g.lattice_size(); ++lat) {
        int node = g.node_of_lattice(lat);
        double v = node >= 0 ? u[node] : std::numeric_limits<double>::quiet_NaN();
        out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

struct SolutionDump {
    uint32_t dim = 0;
    std::vector<uint32_t> counts;
    double h = 0;
    std::vector<double> values;
};

inline SolutionDump read_solution(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[5];
    in.read(magic, 5);
    if (std::memcmp(magic, "STBL1", 5) != 0) throw std::runtime_error("bad magic in " + path.string());
    SolutionDump d;
    in.read(reinterpret_cast<char*>(&d.dim), 4);
    d.counts.resize(d.dim);
    size_t total = 1;
    for (uint32_t k = 0; k < d.dim; ++k) {
        in.read(reinterpret_cast<char*>(&d.counts[k]), 4);
        total *= d.counts[k];
    }
    in.read(reinterpret_cast<char*>(&d.h), 8);
    d.values.resize(total);
    in.read(reinterpret_cast<char*>(d.values.data()), 8 * total);
    if (!in) throw std::runtime_error("truncated dump " + path.string());
    return d;
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180): quote fields containing separators or quotes, CRLF-free.
// ---------------------------------------------------------------------------

inline std::string csv_quote(const std::string& s) {
    bool needs = s.find_first_of(",\"\n") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string params_json(const std::map<std::string, double>& params) {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, v] : params) {
        if (!first) s += ",";
        first = false;
        s += "\"" + k + "\":" + fmt_double(v);
    }
    s += "}";
    return s;
}

class CsvWriter {
  public:
    CsvWriter(const fs::path& path, bool timestamp) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
        if (timestamp) {
            auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            char buf[64];
            std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&now));
            out_ << "# timestamp=" << buf << "\n";
        }
    }
    void row(const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ",";
            out_ << csv_quote(fields[i]);
        }
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Regression bounds: blessed reference ratios per (run_id, check); a check
// passes when ratio <= 10 x blessed. Updating the file requires --bless.
// ---------------------------------------------------------------------------

struct RegressionStore {
    json data = json::object();
    fs::path path;
    bool loaded = false;

    static RegressionStore load(const fs::path& p) {
        RegressionStore s;
        s.path = p;
        std::ifstream in(p);
        if (in) {
            try {
                s.data = json::parse(in);
                s.loaded = true;
            } catch (const json::parse_error& e) {
                throw ConfigError("regression file parse error: " + std::string(e.what()));
            }
        }
        return s;
    }
    std::optional<double> blessed(const std::string& run, const std::string& check) const {
        if (!data.contains(run)) return std::nullopt;
        if (!data.at(run).contains(check)) return std::nullopt;
        return data.at(run).at(check).get<double>();
    }
    void bless(const std::string& run, const std::string& check, double ratio) {
        data[run][check] = ratio;
    }
    void save() const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write regression file " + path.string());
        out << data.dump(2) << "\n";
    }
};

inline const std::set<std::string>& regression_checks() {
    static const std::set<std::string> s{
        "curvature_energy",      "boundary_gradient_l2",
        "hessian_gradient_l1",   "curvature_l2",
        "hessian_l1",            "superharmonic_hessian_l1",
        "superharmonic_hessian_gradient_l1", "energy_ratio",
        "grad_l2_vs_l1",         "levelset_max",
        "boundary_identity_residual"};
    return s;
}

// ---------------------------------------------------------------------------
// Problem construction from a config.
// ---------------------------------------------------------------------------

struct BuiltProblem {
    std::unique_ptr<Grid> grid;
    Problem problem;
};

inline std::function<double(const linalg::Vec&)> make_source(const RunConfig& c) {
    if (!c.source_expr) return nullptr;
    auto sig = operators::CoefficientSpec::coords(c.domain.dim);
    exprlang::Expr e = exprlang::Expr::parse(*c.source_expr, sig);
    return [e, d = c.domain.dim](const linalg::Vec& p) {
        return e.eval(std::span<const double>(p.v.data(), d));
    };
}

inline BuiltProblem build_problem(const RunConfig& c, double h_override = 0) {
    BuiltProblem b{std::make_unique<Grid>(c.domain, h_override > 0 ? h_override : c.h), Problem{}};
    auto spec = build_spec(c);
    b.problem = Problem(*b.grid, std::move(spec), c.nonlinearity.f, c.lambda, make_source(c));
    b.problem.opts = c.solver_opts;
    return b;
}

// ---------------------------------------------------------------------------
// The verification battery over one solved configuration.
// ---------------------------------------------------------------------------

struct BatteryInput {
    const RunConfig* cfg;
    const Problem* problem;
    const ScalarField* u;
    double mu1 = 0;
    bool phi_positive = true;
};

inline EstimateReport run_battery(const BatteryInput& in) {
    const RunConfig& cfg = *in.cfg;
    const Problem& p = *in.problem;
    const Grid& g = *p.grid;
    const double h = g.h();
    EstimateReport rep;
    if (g.is_radial() || !g.is_half_ball())
        throw ConfigError("verify: estimator battery requires a half-ball domain");

    estimators::Context ctx = estimators::make_context(p, *in.u);
    const bool trivial = ctx.grad_max <= 1e-14;

    // hypothesis probe: audited smallness against the configured threshold
    {
        CheckRecord r = estimators::make_record("eps_smallness", "thm:sz", p.coeffs.eps, cfg.eps0,
                                                1.0);
        // the audited eps carries finite-difference noise of order 1e-9
        r.pass = p.coeffs.eps <= cfg.eps0 * (1 + 1e-6);
        r.threshold = cfg.eps0;
        r.params["c0"] = p.coeffs.c0;
        r.params["C0"] = p.coeffs.C0;
        rep.add(std::move(r));
    }
    // stability of the solved state
    {
        CheckRecord r;
        r.name = "principal_eigenvalue";
        r.anchor = "stable:point";
        r.lhs = -in.mu1;
        r.rhs = 1e-6 * std::max(1.0, std::abs(in.mu1));
        r.ratio = r.rhs > 0 ? r.lhs / r.rhs : 0.0;
        r.pass = in.mu1 >= -r.rhs && in.phi_positive;
        r.params["mu1"] = in.mu1;
        r.params["phi_positive"] = in.phi_positive ? 1.0 : 0.0;
        rep.add(std::move(r));
    }
    // the two algebraic routes to the curvature quantity
    if (cfg.check_enabled("curvature_routes")) {
        CheckRecord r = estimators::make_record("curvature_routes", "def:anew", ctx.curv.route_gap,
                                                1e-8, 1.0);
        r.pass = ctx.curv.route_gap <= 1e-8;
        rep.add(std::move(r));
    }
    if (cfg.check_enabled("curvature_comparability")) {
        auto st = estimators::curvature_comparability(ctx);
        CheckRecord r = estimators::make_record("curvature_comparability", "tim1", st.observed_C,
                                                100.0, 1.0);
        r.pass = st.observed_C <= 100.0;
        r.params["samples"] = st.samples;
        rep.add(std::move(r));
    }
    // phi_delta identities on the solved gradient field
    if (cfg.check_enabled("phi_delta") && !trivial) {
        double worst_identity = 0, worst_uniform = 0, worst_convex = 0;
        std::mt19937_64 rng(cfg.seed);
        std::uniform_int_distribution<int> pick(0, g.n_nodes() - 1);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (double frac : cfg.delta_fractions) {
            double delta = frac * ctx.grad_max;
            if (delta <= 0) continue;
            for (int node = 0; node < g.n_nodes(); ++node) {
                linalg::Vec z = ctx.gh.grad.get(node);
                auto pd = estimators::phi_delta(z, delta, ctx.A_anchor);
                worst_identity =
                    std::max(worst_identity, (std::abs(pd.value - dot(pd.grad, z)) - delta));
                worst_uniform =
                    std::max(worst_uniform, std::abs(pd.value - linalg::weighted_norm(z, ctx.A_anchor)) -
                                                delta / 2);
            }
            for (int s = 0; s < 500; ++s) {
                linalg::Vec za = ctx.gh.grad.get(pick(rng));
                linalg::Vec zb = ctx.gh.grad.get(pick(rng));
                double t = unif(rng);
                linalg::Vec zt = t * za + (1.0 - t) * zb;
                double lhs = estimators::phi_delta(zt, delta, ctx.A_anchor).value;
                double rhs = t * estimators::phi_delta(za, delta, ctx.A_anchor).value +
                             (1 - t) * estimators::phi_delta(zb, delta, ctx.A_anchor).value;
                worst_convex = std::max(worst_convex, lhs - rhs);
            }
        }
        CheckRecord r = estimators::make_record("phi_delta", "def:convex:mod",
                                                std::max({worst_identity, worst_uniform, worst_convex}),
                                                1e-12 * std::max(1.0, ctx.grad_max), 1.0);
        r.pass = r.lhs <= r.rhs;
        r.ratio = r.rhs > 0 ? r.lhs / r.rhs : 0.0;
        rep.add(std::move(r));
    }
    // flat-boundary gradient identity
    if (cfg.check_enabled("flat_gradient_identity")) {
        double worst = 0;
        for (int node = 0; node < g.n_nodes(); ++node) {
            if (g.node_class(node) != geometry::NodeClass::FlatBoundary) continue;
            linalg::Vec gu = ctx.gh.grad.get(node);
            worst = std::max(std::abs(linalg::weighted_norm(gu, ctx.A_anchor) - dot(ctx.big_n, gu)),
                             worst);
        }
        CheckRecord r = estimators::make_record("flat_gradient_identity", "bdy:dir", worst,
                                                1e-10 * std::max(1.0, ctx.grad_max), 1.0);
        r.pass = r.lhs <= r.rhs;
        rep.add(std::move(r));
    }
    // integral stability inequality over the test-function family
    if (cfg.check_enabled("stability_gap")) {
        auto family = estimators::TestFunction::half_ball_family(g.dim());
        double worst = 0;
        int violations = 0, unresolved = 0;
        for (const auto& xi : family) {
            if (xi.radius() < 1.5 * h) {
                ++unresolved;  // bump narrower than the grid can resolve
                continue;
            }
            auto gr = estimators::stability_gap(ctx, xi);
            double tol = estimators::kStabilityGapTolFactor * h * std::max(gr.rhs, 1e-12);
            double ratio = gr.lhs / (gr.rhs + tol);
            worst = std::max(worst, ratio);
            if (gr.lhs > gr.rhs + tol) ++violations;
        }
        CheckRecord r = estimators::make_record("stability_gap", "ineq:stable", worst, 1.0, 1.0);
        r.pass = violations == 0;
        r.params["violations"] = violations;
        r.params["family_size"] = static_cast<double>(family.size());
        if (unresolved) r.params["unresolved"] = unresolved;
        rep.add(std::move(r));
    }
    // boundary form of the stability inequality with c_delta
    if (cfg.check_enabled("stability_gap_boundary")) {
        auto eta = estimators::TestFunction::bump(linalg::Vec(g.dim()), 0.9);
        CheckRecord r;
        r.name = "stability_gap_boundary";
        r.anchor = "stab:half:jac";
        if (trivial) {
            r.lhs = r.rhs = 0;
            r.pass = true;
        } else {
            auto L = operators::assemble_L(p.coeffs, g);
            auto Ju = operators::assemble_Ju(L, p.f, *in.u, p.lambda);
            double hopf = estimators::observed_hopf_constant(ctx, eta);
            double worst = 0;
            int violations = 0;
            for (double frac : cfg.delta_fractions) {
                double delta = std::min(frac * ctx.grad_max, 0.9 * hopf);
                if (delta <= 0) continue;
                ScalarField cd = estimators::c_delta_field(ctx, delta);
                auto gr = estimators::stability_gap_boundary(ctx, Ju, cd, eta);
                double tol =
                    2.0 * h * std::max({std::abs(gr.rhs), ctx.grad_max * ctx.grad_max, 1.0});
                worst = std::max(worst, gr.lhs / (gr.rhs + tol));
                if (gr.lhs > gr.rhs + tol) ++violations;
                r.lhs = gr.lhs;
                r.rhs = gr.rhs;
            }
            r.ratio = worst;
            r.pass = violations == 0;
            r.params["hopf"] = hopf;
            r.params["violations"] = violations;
        }
        rep.add(std::move(r));
    }
    // curvature energy bound
    if (cfg.check_enabled("curvature_energy")) {
        auto eta = estimators::TestFunction::bump(linalg::Vec(g.dim()), 0.9);
        auto t = estimators::curvature_energy_bound(ctx, eta);
        CheckRecord r = estimators::make_record("curvature_energy", "eq:szz", t.lhs, t.rhs(),
                                                std::max(1.0, ctx.grad_max * ctx.grad_max));
        r.params["vol_grad"] = t.vol_grad;
        r.params["vol_hess"] = t.vol_hess;
        r.params["surface"] = t.surface;
        rep.add(std::move(r));
    }
    // the four concentric-region estimates
    if (cfg.check_enabled("hessian_suite")) {
        EstimateReport suite = estimators::hessian_suite(ctx);
        for (auto& r : suite.rows) rep.add(std::move(r));
    }
    // superharmonic test-function bounds
    if (cfg.check_enabled("superharmonic") && !trivial) {
        auto L = operators::assemble_L(p.coeffs, g);
        auto zeta = estimators::TestFunction::bump(linalg::Vec(g.dim()), 0.8);
        EstimateReport sup = estimators::superharmonic_checks(ctx, L, zeta);
        for (auto& r : sup.rows) rep.add(std::move(r));
    }
    // boundary-gradient identity residual
    if (cfg.check_enabled("boundary_identity")) {
        auto eta = estimators::TestFunction::bump(linalg::Vec(g.dim()), 0.77);
        auto ir = estimators::boundary_gradient_identity(ctx, eta);
        CheckRecord r = estimators::make_record("boundary_identity_residual", "pohozaev:1",
                                                ir.residual(), std::max(std::abs(ir.lhs), 1.0),
                                                std::max(1.0, ctx.grad_max * ctx.grad_max));
        r.params["lhs_surface"] = ir.lhs;
        r.params["rhs_volume"] = ir.rhs;
        rep.add(std::move(r));
    }
    // energy ratios
    if (cfg.check_enabled("energy_ratio")) {
        double gamma = cfg.gamma ? *cfg.gamma : 0.5 * estimators::admissible_gamma_bound(g.dim());
        auto er = estimators::energy_ratio(ctx, gamma);
        CheckRecord r = estimators::make_record("energy_ratio", "thm:holder", er.lhs, er.rhs,
                                                std::max(1.0, ctx.grad_max));
        r.params["gamma"] = gamma;
        r.params["gamma_admissible"] = er.gamma_admissible ? 1.0 : 0.0;
        rep.add(std::move(r));
    }
    if (cfg.check_enabled("grad_l2_vs_l1")) {
        auto er = estimators::grad_l2_vs_l1(ctx);
        rep.add(estimators::make_record("grad_l2_vs_l1", "lemma:l2l1", er.lhs, er.rhs,
                                        std::max(1.0, ctx.grad_max)));
    }
    // level-set sweep
    if (cfg.check_enabled("levelset") && !trivial) {
        auto sweep = estimators::levelset_sweep(ctx, cfg.levelset_count);
        CheckRecord r = estimators::make_record("levelset_max", "thm:holder:step1", sweep.max_ratio,
                                                1.0, 1.0);
        r.params["evaluated"] = sweep.evaluated;
        r.params["skipped"] = sweep.skipped;
        r.params["t_at_max"] = sweep.max_t;
        rep.add(std::move(r));
    }
    // interpolation propositions on the documented cube set
    if (cfg.check_enabled("interpolation")) {
        Grid cube(DomainSpec::unit_box(g.dim()), 1.0 / 32);
        std::vector<std::function<double(const linalg::Vec&)>> fields;
        if (g.dim() == 2) {
            fields = {[](const linalg::Vec& q) { return std::sin(M_PI * q[0]) * std::sin(M_PI * q[1]); },
                      [](const linalg::Vec& q) { return q[0] * (1 - q[0]) * q[1] * (1 - q[1]); },
                      [](const linalg::Vec& q) { return std::exp(q[0] + 0.5 * q[1]); },
                      [](const linalg::Vec&) { return 1.0; }};
        } else {
            fields = {[](const linalg::Vec& q) { return std::sin(M_PI * q[0]); },
                      [](const linalg::Vec& q) { return q[0] * (1 - q[0]); },
                      [](const linalg::Vec&) { return 1.0; }};
        }
        double worst1 = 0, worst2 = 0;
        for (const auto& f : fields) {
            ScalarField uf = ScalarField::sample(cube, f);
            for (int d = 1; d <= 9; ++d) {
                auto r = estimators::interpolation_props(uf, 0.1 * d, 0.1 * d);
                if (r.rows[0].rhs > 0) worst1 = std::max(worst1, r.rows[0].ratio);
                if (r.rows[1].rhs > 0) worst2 = std::max(worst2, r.rows[1].ratio);
            }
        }
        CheckRecord r1 = estimators::make_record("interpolation_gradient", "interpol", worst1, 100.0, 1.0);
        r1.pass = worst1 <= 100.0;
        rep.add(std::move(r1));
        CheckRecord r2 = estimators::make_record("interpolation_nash", "nash", worst2, 100.0, 1.0);
        r2.pass = worst2 <= 100.0;
        rep.add(std::move(r2));
    }
    // third-order reflection reproduces cubics
    if (cfg.check_enabled("reflection")) {
        double hr = 1.0 / 16;
        Grid hb(DomainSpec::half_ball(g.dim(), 1.0), hr);
        Grid ball(DomainSpec::ball(g.dim(), 1.0), hr);
        int axis = g.dim() - 1;
        ScalarField cub = ScalarField::sample(
            hb, [&](const linalg::Vec& q) { return q[axis] * q[axis] * q[axis]; });
        auto rr = geometry::reflect_third_order(cub, ball);
        double worst = 0;
        for (int node = 0; node < ball.n_nodes(); ++node) {
            linalg::Vec q = ball.point(node);
            if (linalg::norm2(q) > 0.6) continue;
            worst = std::max(worst, std::abs(rr.field[node] - q[axis] * q[axis] * q[axis]));
        }
        CheckRecord r = estimators::make_record("reflection_cubic", "remark:regul", worst, 1e-10, 1.0);
        r.pass = worst <= 1e-10;
        rep.add(std::move(r));
    }
    // coverings
    if (cfg.check_enabled("covering")) {
        auto cov = geometry::make_covering(g.dim(), geometry::CoveringMode::Cubes,
                                           geometry::feasible_cube_side(g.dim()));
        int gaps = geometry::covering_gap_count(cov, g.dim());
        CheckRecord r1 = estimators::make_record("covering_cubes", "lemma:l2l1", gaps, 1.0, 1.0);
        r1.pass = gaps == 0;
        r1.params["pieces"] = cov.n_interior;
        r1.params["side"] = geometry::feasible_cube_side(g.dim());
        rep.add(std::move(r1));
        auto bcov = geometry::make_covering(g.dim(), geometry::CoveringMode::BoundaryAndInteriorBalls, 0.3);
        int bgaps = geometry::covering_gap_count(bcov, g.dim());
        CheckRecord r2 = estimators::make_record("covering_balls", "thm:holder", bgaps, 1.0, 1.0);
        r2.pass = bgaps == 0;
        r2.params["boundary"] = bcov.n_boundary;
        r2.params["interior"] = bcov.n_interior;
        rep.add(std::move(r2));
    }
    // absorption fixtures
    if (cfg.check_enabled("absorption")) {
        estimators::BallFunctional measure{2, [](const linalg::Vec& cb, double r) {
            int cells = 24;
            double hh = 2.0 * r / cells, sum = 0;
            for (int i = 0; i < cells; ++i)
                for (int j = 0; j < cells; ++j) {
                    double x = cb[0] - r + (i + 0.5) * hh, y = cb[1] - r + (j + 0.5) * hh;
                    if ((x - cb[0]) * (x - cb[0]) + (y - cb[1]) * (y - cb[1]) < r * r &&
                        x * x + y * y < 1.0)
                        sum += hh * hh;
                }
            return sum;
        }};
        auto res1 = estimators::simon_absorption(measure, 0.0, M_PI, 0.9);
        bool ok1 = std::holds_alternative<estimators::SimonCertificate>(res1);
        CheckRecord r1 = estimators::make_record("absorption_measure", "simon", ok1 ? 0.0 : 1.0, 1.0, 1.0);
        r1.pass = ok1;
        if (ok1) r1.params["C"] = std::get<estimators::SimonCertificate>(res1).C;
        rep.add(std::move(r1));

        estimators::BallFunctional invr{2, [](const linalg::Vec&, double r) { return 1.0 / r; }};
        auto res2 = estimators::simon_absorption(invr, 1.0, 2.0, 0.5);
        bool ok2 = std::holds_alternative<estimators::SimonCertificate>(res2);
        CheckRecord r2 = estimators::make_record("absorption_inverse_radius", "simon",
                                                 ok2 ? 0.0 : 1.0, 1.0, 1.0);
        r2.pass = ok2;
        rep.add(std::move(r2));

        estimators::BallFunctional planted{2, [](const linalg::Vec&, double r) {
            return r < 0.3 ? 1.0 : 0.0;
        }};
        auto res3 = estimators::simon_absorption(planted, 0.0, 0.01, 0.5);
        bool detected = std::holds_alternative<estimators::SimonViolation>(res3);
        CheckRecord r3 = estimators::make_record("absorption_planted", "simon", detected ? 0.0 : 1.0,
                                                 1.0, 1.0);
        r3.pass = detected;
        rep.add(std::move(r3));
    }
    return rep;
}

// apply regression bounds: ratio <= 10 x blessed for the regression-backed
// checks; without a baseline, finiteness is the pass criterion.
inline void apply_regression(EstimateReport& rep, const RegressionStore& store,
                             const std::string& run_id) {
    for (auto& r : rep.rows) {
        if (!regression_checks().count(r.name)) continue;
        if (!std::isfinite(r.ratio)) {
            r.pass = false;
            continue;
        }
        auto blessed = store.blessed(run_id, r.name);
        if (blessed) {
            r.threshold = 10.0 * *blessed;
            r.pass = r.ratio <= r.threshold;
            r.params["blessed"] = *blessed;
            r.params.erase("no_baseline");
        } else {
            r.params["no_baseline"] = 1.0;
        }
    }
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

inline fs::path out_path(const RunConfig& cfg, const CliOptions& opt, const std::string& name) {
    fs::path dir = opt.out_dir ? fs::path(*opt.out_dir) : fs::path(cfg.out_dir);
    fs::create_directories(dir);
    return dir / name;
}

inline int cmd_solve(const fs::path& config_path, const CliOptions& opt) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    try {
        BuiltProblem bp = build_problem(cfg);
        solver::NewtonResult res = solver::solve_newton_detailed(bp.problem, ScalarField(*bp.grid));
        write_solution(out_path(cfg, opt, cfg.solution_file), *bp.grid, res.u);
        CsvWriter csv(out_path(cfg, opt, cfg.csv_file), !opt.no_timestamp);
        csv.row({"run", "lambda", "h", "max_u", "newton_iters", "residual"});
        csv.row({cfg.run_id, fmt_double(cfg.lambda), fmt_double(bp.grid->h()),
                 fmt_double(res.u.max()), std::to_string(res.iterations), fmt_double(res.residual)});
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolverError;
    }
}

inline int cmd_branch(const fs::path& config_path, const CliOptions& opt) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    try {
        BuiltProblem bp = build_problem(cfg);
        solver::Branch br = solver::trace_branch(bp.problem, cfg.branch);
        CsvWriter csv(out_path(cfg, opt, cfg.csv_file), !opt.no_timestamp);
        csv.row({"lambda", "max_u", "mu1"});
        for (const auto& pt : br.points)
            csv.row({fmt_double(pt.lambda), fmt_double(pt.u.max()), fmt_double(pt.mu1)});
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolverError;
    }
}

// one family variant of the base configuration
struct FamilyVariant {
    std::string tag;
    std::string nonlinearity;
    double perturbation;
    double lambda_fraction;
};

inline RunConfig variant_config(const RunConfig& base, const FamilyVariant& v) {
    RunConfig c = base;
    c.run_id = base.run_id + "/" + v.tag;
    json nl;
    if (v.nonlinearity == "power3") nl = {{"family", "power"}, {"p", 3.0}};
    else if (v.nonlinearity == "power2") nl = {{"family", "power"}, {"p", 2.0}};
    else nl = {{"family", v.nonlinearity}};
    c.nonlinearity.f = parse_nonlinearity(nl, c.nonlinearity.family_name);
    int n = base.domain.dim;
    c.a_entries.assign(n, std::vector<std::string>(n, "0"));
    for (int i = 0; i < n; ++i) c.a_entries[i][i] = "1";
    if (v.perturbation != 0.0)
        c.a_entries[0][0] = "1+" + fmt_double(v.perturbation) + "*x1";
    c.b_entries.assign(n, "0");
    c.family.reset();
    return c;
}

struct FamilyMemberResult {
    std::string tag;
    EstimateReport report;
    double lambda = 0, lambda_star = 0;
    std::string error;
};

inline FamilyMemberResult run_family_member(const RunConfig& base, const FamilyVariant& v) {
    FamilyMemberResult out;
    out.tag = v.tag;
    try {
        RunConfig cfg = variant_config(base, v);
        // coarse fold estimate, then solve at the requested fraction
        BuiltProblem bp = build_problem(cfg);
        solver::StepPolicy pol = cfg.branch;
        solver::Branch br = solver::trace_branch(bp.problem, pol);
        out.lambda_star = br.lambda_star;
        cfg.lambda = v.lambda_fraction * br.lambda_star;
        out.lambda = cfg.lambda;
        BuiltProblem run = build_problem(cfg);
        solver::NewtonResult res = solver::solve_newton_detailed(run.problem, ScalarField(*run.grid));
        auto L = operators::assemble_L(run.problem.coeffs, *run.grid);
        auto Ju = operators::assemble_Ju(L, run.problem.f, res.u, run.problem.lambda);
        solver::Eigenpair e = solver::principal_eigenvalue(Ju, run.problem.opts);
        BatteryInput bin{&cfg, &run.problem, &res.u, e.mu, e.positive};
        out.report = run_battery(bin);
    } catch (const std::exception& ex) {
        out.error = ex.what();
    }
    return out;
}

inline int cmd_verify(const fs::path& config_path, const CliOptions& opt) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    try {
        RegressionStore store = RegressionStore::load(cfg.config_dir / cfg.regression_file);

        BuiltProblem bp = build_problem(cfg);
        solver::NewtonResult res;
        try {
            res = solver::solve_newton_detailed(bp.problem, ScalarField(*bp.grid));
        } catch (const std::exception& e) {
            std::cerr << "solver error: " << e.what() << "\n";
            return kSolverError;
        }
        auto L = operators::assemble_L(bp.problem.coeffs, *bp.grid);
        auto Ju = operators::assemble_Ju(L, bp.problem.f, res.u, bp.problem.lambda);
        solver::Eigenpair eig = solver::principal_eigenvalue(Ju, bp.problem.opts);
        BatteryInput bin{&cfg, &bp.problem, &res.u, eig.mu, eig.positive};
        EstimateReport rep = run_battery(bin);
        apply_regression(rep, store, cfg.run_id);

        // family sweep: spread bound max <= 10 x median per check
        std::vector<std::pair<std::string, EstimateReport>> member_reports;
        if (cfg.family) {
            auto short_num = [](double v) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%g", v);
                return std::string(buf);
            };
            std::vector<FamilyVariant> variants;
            for (const auto& nl : cfg.family->nonlinearities)
                for (double pert : cfg.family->perturbations)
                    for (double frac : cfg.family->lambda_fractions) {
                        FamilyVariant v{nl + "_e" + short_num(pert) + "_l" + short_num(frac), nl,
                                        pert, frac};
                        variants.push_back(std::move(v));
                    }
            std::vector<FamilyMemberResult> results(variants.size());
            int nthreads = std::min<int>(resolve_threads(opt), static_cast<int>(variants.size()));
            std::atomic<size_t> next{0};
            auto worker = [&]() {
                for (;;) {
                    size_t i = next.fetch_add(1);
                    if (i >= variants.size()) break;
                    results[i] = run_family_member(cfg, variants[i]);
                }
            };
            std::vector<std::thread> pool;
            for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
            worker();
            for (auto& t : pool) t.join();

            std::map<std::string, std::vector<double>> ratios;
            for (auto& r : results) {
                if (!r.error.empty()) {
                    CheckRecord err;
                    err.name = "family_member";
                    err.anchor = "thm:sz";
                    err.pass = false;
                    err.params["failed"] = 1.0;
                    EstimateReport er;
                    er.add(std::move(err));
                    member_reports.emplace_back(cfg.run_id + "/" + r.tag, std::move(er));
                    continue;
                }
                for (const auto& row : r.report.rows)
                    if (regression_checks().count(row.name) && row.rhs > 0)
                        ratios[row.name].push_back(row.ratio);
                member_reports.emplace_back(cfg.run_id + "/" + r.tag, std::move(r.report));
            }
            for (auto& [check, rs] : ratios) {
                std::vector<double> sorted = rs;
                std::sort(sorted.begin(), sorted.end());
                double median = sorted[sorted.size() / 2];
                double maxr = sorted.back();
                CheckRecord r =
                    estimators::make_record("family_spread_" + check, "universal", maxr,
                                            10.0 * std::max(median, 1e-300), 1.0);
                r.pass = maxr <= 10.0 * median && std::isfinite(maxr);
                r.threshold = 10.0 * median;
                r.params["members"] = static_cast<double>(rs.size());
                r.params["median"] = median;
                rep.add(std::move(r));
            }
        }

        if (opt.bless) {
            for (const auto& r : rep.rows)
                if (regression_checks().count(r.name) && std::isfinite(r.ratio))
                    store.bless(cfg.run_id, r.name, r.ratio);
            store.path = cfg.config_dir / cfg.regression_file;
            store.save();
            apply_regression(rep, store, cfg.run_id);
        }

        // deterministic CSV: rows sorted by (run, check)
        std::vector<std::tuple<std::string, std::string, const CheckRecord*>> rows;
        for (const auto& r : rep.rows) rows.emplace_back(cfg.run_id, r.name, &r);
        for (const auto& [run, mrep] : member_reports)
            for (const auto& r : mrep.rows) rows.emplace_back(run, r.name, &r);
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
            return std::get<1>(a) < std::get<1>(b);
        });
        CsvWriter csv(out_path(cfg, opt, cfg.csv_file), !opt.no_timestamp);
        csv.row({"run", "check", "anchor", "lhs", "rhs", "ratio", "params", "pass"});
        bool all_pass = true;
        for (const auto& [run, name, r] : rows) {
            csv.row({run, r->name, r->anchor, fmt_double(r->lhs), fmt_double(r->rhs),
                     fmt_double(r->ratio), params_json(r->params), r->pass ? "true" : "false"});
            all_pass = all_pass && r->pass;
        }
        return all_pass ? kOk : kVerifyError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolverError;
    }
}

// ---------------------------------------------------------------------------
// Convergence studies with Richardson order columns.
// ---------------------------------------------------------------------------

inline int cmd_convergence(const fs::path& config_path, const CliOptions& opt) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        if (cfg.refinements < 3)
            throw ConfigError("convergence: need at least 3 refinement levels");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    try {
        std::vector<double> hs, errors;
        std::string quantity = cfg.study;
        for (int level = 0; level < cfg.refinements; ++level) hs.push_back(cfg.h / (1 << level));

        if (cfg.study == "manufactured_box") {
            auto u_exact = [](const linalg::Vec& p) {
                return std::sin(M_PI * p[0]) * std::sin(M_PI * p[1]);
            };
            for (double h : hs) {
                RunConfig c = cfg;
                c.domain = DomainSpec::unit_box(2);
                c.a_entries = {{"1+0.1*x1", "0"}, {"0", "1"}};
                c.b_entries = {"0", "0"};
                Grid g(c.domain, h);
                auto spec = build_spec(c);
                auto src = [&](const linalg::Vec& p) {
                    double s = u_exact(p);
                    return M_PI * M_PI * (2.0 + 0.1 * p[0]) * s - std::exp(s);
                };
                Problem prob(g, std::move(spec), exprlang::Nonlinearity::named("exp"), 1.0, src);
                prob.opts = cfg.solver_opts;
                ScalarField u = solver::solve_newton(prob, ScalarField(g));
                double worst = 0;
                for (int node = 0; node < g.n_nodes(); ++node)
                    worst = std::max(worst, std::abs(u[node] - u_exact(g.point(node))));
                errors.push_back(worst);
            }
        } else if (cfg.study == "pohozaev") {
            for (double h : hs) {
                Grid g(DomainSpec::half_ball(2, 1.0), h);
                Problem prob(g, operators::CoefficientSpec::laplacian(2),
                             exprlang::Nonlinearity::named("zero"), 0.0);
                ScalarField u = ScalarField::sample(g, [](const linalg::Vec& p) {
                    return p[1] * (1.0 - dot(p, p));
                });
                estimators::Context ctx = estimators::make_context(prob, u);
                auto eta = estimators::TestFunction::bump(linalg::Vec(2), 0.77);
                errors.push_back(estimators::boundary_gradient_identity(ctx, eta).residual());
            }
        } else if (cfg.study == "stencil_quadratic") {
            for (double h : hs) {
                Grid g(DomainSpec::unit_box(2), h);
                auto L = operators::assemble_L(operators::CoefficientSpec::laplacian(2), g);
                ScalarField u = ScalarField::sample(
                    g, [](const linalg::Vec& p) { return p[0] * p[0] + p[1] * p[1]; });
                double worst = 0;
                for (double v : L.apply(u)) worst = std::max(worst, std::abs(v - 4.0));
                errors.push_back(worst);
            }
        } else {
            std::cerr << "config error: unknown study '" << cfg.study << "'\n";
            return kConfigError;
        }

        CsvWriter csv(out_path(cfg, opt, cfg.csv_file), !opt.no_timestamp);
        csv.row({"quantity", "h", "error", "order"});
        bool monotone = true;
        for (size_t k = 0; k < hs.size(); ++k) {
            std::string order = "";
            if (errors[k] < 1e-12 * std::max(1.0, errors[0])) order = "exact";
            else if (k > 0) {
                if (errors[k] > errors[k - 1]) monotone = false;
                double o = linalg::observed_order(errors[k - 1], errors[k]);
                order = std::isfinite(o) ? fmt_double(o) : "exact";
            }
            csv.row({quantity, fmt_double(hs[k]), fmt_double(errors[k]), order});
        }
        if (!monotone) std::cerr << "warning: errors are not monotone under refinement\n";
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolverError;
    }
}

}  // namespace stablab::harness
