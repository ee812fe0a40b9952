// JSON run configuration: schema-validated (unknown keys rejected), with
// documented defaults for every optional block.
#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "stablab/grid.hpp"
#include "stablab/nonlinearity.hpp"
#include "stablab/solver.hpp"

namespace stablab::harness {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

}  // namespace detail

struct DomainConfig {
    geometry::DomainSpec spec;
};

struct NonlinearityConfig {
    exprlang::Nonlinearity f;
    std::string family_name;  // empty for expression-defined ones
};

struct BranchConfig {
    solver::StepPolicy policy;
};

struct FamilyConfig {
    std::vector<std::string> nonlinearities{"exp", "power3"};
    std::vector<double> lambda_fractions{0.2, 0.5, 0.8};
    std::vector<double> perturbations{0.0, 0.05, 0.1};
};

struct RunConfig {
    std::string run_id = "run";
    uint64_t seed = 1;

    geometry::DomainSpec domain = geometry::DomainSpec::half_ball(2, 1.0);
    std::vector<std::vector<std::string>> a_entries;  // empty: identity
    std::vector<std::string> b_entries;               // empty: zero
    std::optional<double> declared_c0, declared_C0, declared_eps;

    NonlinearityConfig nonlinearity{exprlang::Nonlinearity::named("exp"), "exp"};
    double lambda = 1.0;
    std::optional<std::string> source_expr;

    double h = 1.0 / 32;
    int refinements = 3;

    solver::SolverOptions solver_opts;
    solver::StepPolicy branch;

    // estimator block
    std::vector<std::string> checks{"all"};
    std::optional<double> gamma;  // default: half the admissible bound
    double eps0 = 0.1;
    std::vector<double> delta_fractions{0.1, 0.01, 0.001};
    int levelset_count = 32;
    std::string regression_file = "regression.json";

    std::optional<FamilyConfig> family;

    // convergence block
    std::string study = "manufactured_box";  // or "pohozaev"

    // output block
    std::string out_dir = ".";
    std::string solution_file = "solution.bin";
    std::string csv_file = "report.csv";

    std::filesystem::path config_dir;  // directory the config was loaded from

    bool check_enabled(const std::string& name) const {
        for (const auto& c : checks)
            if (c == "all" || c == name) return true;
        return false;
    }
};

inline exprlang::Nonlinearity parse_nonlinearity(const json& j, std::string& family_name) {
    detail::reject_unknown(j, {"family", "p", "f", "fprime", "F", "flags"}, "problem.nonlinearity");
    if (j.contains("family")) {
        std::string fam = j.at("family").get<std::string>();
        family_name = fam;
        if (fam == "power3") return exprlang::Nonlinearity::named("power", 3.0);
        if (fam == "power2") return exprlang::Nonlinearity::named("power", 2.0);
        if (fam == "power") return exprlang::Nonlinearity::named("power", j.at("p").get<double>());
        return exprlang::Nonlinearity::named(fam);
    }
    if (!j.contains("f")) throw ConfigError("problem.nonlinearity: need 'family' or 'f'");
    std::vector<std::string> sig{"u"};
    exprlang::Expr f = exprlang::Expr::parse(j.at("f").get<std::string>(), sig);
    std::optional<exprlang::Expr> fp, F;
    if (j.contains("fprime")) fp = exprlang::Expr::parse(j.at("fprime").get<std::string>(), sig);
    if (j.contains("F")) F = exprlang::Expr::parse(j.at("F").get<std::string>(), sig);
    exprlang::NonlinearityFlags flags;
    if (j.contains("flags")) {
        detail::reject_unknown(j.at("flags"), {"nonnegative", "nondecreasing", "convex"},
                               "problem.nonlinearity.flags");
        auto parse_flag = [&](const char* key) {
            if (!j.at("flags").contains(key)) return exprlang::FlagStatus::Unknown;
            return j.at("flags").at(key).get<bool>() ? exprlang::FlagStatus::Asserted
                                                     : exprlang::FlagStatus::Unknown;
        };
        flags.nonnegative = parse_flag("nonnegative");
        flags.nondecreasing = parse_flag("nondecreasing");
        flags.convex = parse_flag("convex");
    }
    family_name.clear();
    return exprlang::Nonlinearity::from_exprs(std::move(f), std::move(fp), std::move(F), flags);
}

inline geometry::DomainSpec parse_domain(const json& j) {
    detail::reject_unknown(j, {"type", "n", "radius", "lo", "hi", "r_min"}, "problem.domain");
    std::string type = j.at("type").get<std::string>();
    int n = detail::get_or(j, "n", 2);
    double radius = detail::get_or(j, "radius", 1.0);
    if (type == "half_ball") return geometry::DomainSpec::half_ball(n, radius);
    if (type == "ball") return geometry::DomainSpec::ball(n, radius);
    if (type == "radial")
        return geometry::DomainSpec::radial(n, radius, detail::get_or(j, "r_min", 0.0));
    if (type == "box" || type == "interval") {
        std::array<double, 3> lo{}, hi{1, 1, 1};
        if (j.contains("lo")) {
            auto v = j.at("lo").get<std::vector<double>>();
            for (size_t k = 0; k < v.size() && k < 3; ++k) lo[k] = v[k];
        }
        if (j.contains("hi")) {
            auto v = j.at("hi").get<std::vector<double>>();
            for (size_t k = 0; k < v.size() && k < 3; ++k) hi[k] = v[k];
        }
        return geometry::DomainSpec::box(type == "interval" ? 1 : n, lo, hi);
    }
    throw ConfigError("problem.domain.type: unknown type '" + type + "'");
}

inline RunConfig parse_config(const json& j, const std::filesystem::path& config_dir) {
    detail::reject_unknown(j,
                           {"run_id", "seed", "problem", "grid", "solver", "branch", "estimator",
                            "family", "convergence", "output"},
                           "config");
    RunConfig c;
    c.config_dir = config_dir;
    c.run_id = detail::get_or<std::string>(j, "run_id", "run");
    c.seed = detail::get_or<uint64_t>(j, "seed", 1);

    if (j.contains("problem")) {
        const json& p = j.at("problem");
        detail::reject_unknown(p, {"domain", "coefficients", "nonlinearity", "lambda", "source"},
                               "problem");
        if (p.contains("domain")) c.domain = parse_domain(p.at("domain"));
        if (p.contains("coefficients")) {
            const json& co = p.at("coefficients");
            detail::reject_unknown(co, {"a", "b", "c0", "C0", "eps"}, "problem.coefficients");
            if (co.contains("a")) c.a_entries = co.at("a").get<std::vector<std::vector<std::string>>>();
            if (co.contains("b")) c.b_entries = co.at("b").get<std::vector<std::string>>();
            if (co.contains("c0")) c.declared_c0 = co.at("c0").get<double>();
            if (co.contains("C0")) c.declared_C0 = co.at("C0").get<double>();
            if (co.contains("eps")) c.declared_eps = co.at("eps").get<double>();
        }
        if (p.contains("nonlinearity"))
            c.nonlinearity.f = parse_nonlinearity(p.at("nonlinearity"), c.nonlinearity.family_name);
        c.lambda = detail::get_or(p, "lambda", 1.0);
        if (c.lambda < 0) throw ConfigError("problem.lambda: must be nonnegative");
        if (p.contains("source")) c.source_expr = p.at("source").get<std::string>();
    }
    if (j.contains("grid")) {
        detail::reject_unknown(j.at("grid"), {"h", "refinements"}, "grid");
        c.h = detail::get_or(j.at("grid"), "h", c.h);
        c.refinements = detail::get_or(j.at("grid"), "refinements", c.refinements);
        if (c.h <= 0) throw ConfigError("grid.h: must be positive");
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        detail::reject_unknown(s, {"newton_rtol", "newton_max_iter", "eig_tol", "monotone_rtol"},
                               "solver");
        c.solver_opts.newton_rtol = detail::get_or(s, "newton_rtol", c.solver_opts.newton_rtol);
        c.solver_opts.newton_max_iter =
            detail::get_or(s, "newton_max_iter", c.solver_opts.newton_max_iter);
        c.solver_opts.eig_tol = detail::get_or(s, "eig_tol", c.solver_opts.eig_tol);
        c.solver_opts.monotone_rtol = detail::get_or(s, "monotone_rtol", c.solver_opts.monotone_rtol);
    }
    if (j.contains("branch")) {
        const json& b = j.at("branch");
        detail::reject_unknown(b,
                               {"lambda0", "step0", "grow", "step_min_rel", "max_points",
                                "eig_tol_rel", "arclength", "arclength_points", "arclength_ds"},
                               "branch");
        c.branch.lambda0 = detail::get_or(b, "lambda0", c.branch.lambda0);
        c.branch.step0 = detail::get_or(b, "step0", c.branch.step0);
        c.branch.grow = detail::get_or(b, "grow", c.branch.grow);
        c.branch.step_min_rel = detail::get_or(b, "step_min_rel", c.branch.step_min_rel);
        c.branch.max_points = detail::get_or(b, "max_points", c.branch.max_points);
        c.branch.eig_tol_rel = detail::get_or(b, "eig_tol_rel", c.branch.eig_tol_rel);
        c.branch.arclength = detail::get_or(b, "arclength", c.branch.arclength);
        c.branch.arclength_points = detail::get_or(b, "arclength_points", c.branch.arclength_points);
        c.branch.arclength_ds = detail::get_or(b, "arclength_ds", c.branch.arclength_ds);
    }
    if (j.contains("estimator")) {
        const json& e = j.at("estimator");
        detail::reject_unknown(e,
                               {"checks", "gamma", "eps0", "delta_fractions", "levelset_count",
                                "regression_file"},
                               "estimator");
        if (e.contains("checks")) c.checks = e.at("checks").get<std::vector<std::string>>();
        if (e.contains("gamma") && !e.at("gamma").is_null()) c.gamma = e.at("gamma").get<double>();
        c.eps0 = detail::get_or(e, "eps0", c.eps0);
        if (e.contains("delta_fractions"))
            c.delta_fractions = e.at("delta_fractions").get<std::vector<double>>();
        c.levelset_count = detail::get_or(e, "levelset_count", c.levelset_count);
        c.regression_file = detail::get_or<std::string>(e, "regression_file", c.regression_file);
    }
    if (j.contains("family") && !j.at("family").is_null()) {
        const json& f = j.at("family");
        detail::reject_unknown(f, {"nonlinearities", "lambda_fractions", "perturbations"}, "family");
        FamilyConfig fc;
        if (f.contains("nonlinearities"))
            fc.nonlinearities = f.at("nonlinearities").get<std::vector<std::string>>();
        if (f.contains("lambda_fractions"))
            fc.lambda_fractions = f.at("lambda_fractions").get<std::vector<double>>();
        if (f.contains("perturbations"))
            fc.perturbations = f.at("perturbations").get<std::vector<double>>();
        c.family = fc;
    }
    if (j.contains("convergence")) {
        detail::reject_unknown(j.at("convergence"), {"study"}, "convergence");
        c.study = detail::get_or<std::string>(j.at("convergence"), "study", c.study);
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        detail::reject_unknown(o, {"dir", "solution", "csv"}, "output");
        c.out_dir = detail::get_or<std::string>(o, "dir", c.out_dir);
        c.solution_file = detail::get_or<std::string>(o, "solution", c.solution_file);
        c.csv_file = detail::get_or<std::string>(o, "csv", c.csv_file);
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
    return parse_config(j, path.parent_path());
}

// Builds the coefficient spec of the requested dimension (identity defaults).
inline operators::CoefficientSpec build_spec(const RunConfig& c) {
    int n = c.domain.dim;
    if (c.a_entries.empty() && c.b_entries.empty())
        return operators::CoefficientSpec::laplacian(n);
    std::vector<std::vector<std::string>> a = c.a_entries;
    std::vector<std::string> b = c.b_entries;
    if (a.empty()) {
        a.assign(n, std::vector<std::string>(n, "0"));
        for (int i = 0; i < n; ++i) a[i][i] = "1";
    }
    if (b.empty()) b.assign(n, "0");
    if (static_cast<int>(a.size()) != n || static_cast<int>(b.size()) != n)
        throw ConfigError("problem.coefficients: dimension mismatch with the domain");
    auto spec = operators::CoefficientSpec::from_strings(n, a, b);
    if (c.declared_c0) spec.c0 = *c.declared_c0;
    if (c.declared_C0) spec.C0 = *c.declared_C0;
    if (c.declared_eps) spec.eps = *c.declared_eps;
    return spec;
}

}  // namespace stablab::harness
