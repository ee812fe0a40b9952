// Nonlinearities f(u): symbolic value/derivative plus the primitive F with
// F(0) = 0, either symbolic or by adaptive quadrature.
#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "stablab/expr.hpp"
#include "stablab/linalg.hpp"

namespace stablab::exprlang {

enum class FlagStatus : uint8_t { Unknown, Asserted, CheckedOnSample };

struct NonlinearityFlags {
    FlagStatus nonnegative = FlagStatus::Unknown;
    FlagStatus nondecreasing = FlagStatus::Unknown;
    FlagStatus convex = FlagStatus::Unknown;
};

class Nonlinearity {
  public:
    Nonlinearity() = default;

    // fprime defaults to the symbolic derivative of f; F (primitive with
    // F(0)=0) falls back to adaptive quadrature when not given.
    static Nonlinearity from_exprs(Expr f, std::optional<Expr> fprime = {},
                                   std::optional<Expr> primitive = {},
                                   NonlinearityFlags flags = {}) {
        Nonlinearity n;
        n.f_ = std::move(f);
        n.fprime_ = fprime ? std::move(*fprime) : n.f_.derivative("u");
        n.primitive_ = std::move(primitive);
        n.flags_ = flags;
        return n;
    }

    static Nonlinearity named(const std::string& family, double p = 0.0) {
        std::vector<std::string> sig{"u"};
        NonlinearityFlags all_ok{FlagStatus::Asserted, FlagStatus::Asserted, FlagStatus::Asserted};
        if (family == "exp")
            return from_exprs(Expr::parse("exp(u)", sig), Expr::parse("exp(u)", sig),
                              Expr::parse("exp(u)-1", sig), all_ok);
        if (family == "power") {
            std::string ps = std::to_string(p);
            return from_exprs(Expr::parse("(1+u)^" + ps, sig),
                              Expr::parse(ps + "*(1+u)^" + std::to_string(p - 1.0), sig),
                              Expr::parse("((1+u)^" + std::to_string(p + 1.0) + "-1)/" +
                                              std::to_string(p + 1.0),
                                          sig),
                              all_ok);
        }
        if (family == "linear")
            return from_exprs(Expr::parse("u", sig), Expr::parse("1", sig),
                              Expr::parse("u^2/2", sig),
                              {FlagStatus::Unknown, FlagStatus::Asserted, FlagStatus::Asserted});
        if (family == "zero")
            return from_exprs(Expr::parse("0", sig), Expr::parse("0", sig), Expr::parse("0", sig),
                              all_ok);
        throw std::invalid_argument("unknown nonlinearity family '" + family + "'");
    }

    double value(double u) const { return eval1(f_, u); }
    double deriv(double u) const { return eval1(fprime_, u); }

    double primitive(double u) const {
        if (primitive_) return eval1(*primitive_, u);
        return linalg::adaptive_simpson([this](double t) { return value(t); }, 0.0, u, 1e-10);
    }

    const Expr& f_expr() const { return f_; }
    const Expr& fprime_expr() const { return fprime_; }
    bool has_symbolic_primitive() const { return primitive_.has_value(); }
    const NonlinearityFlags& flags() const { return flags_; }
    NonlinearityFlags& flags() { return flags_; }

    bool flagged_nondecreasing() const { return flags_.nondecreasing != FlagStatus::Unknown; }
    bool flagged_nonnegative() const { return flags_.nonnegative != FlagStatus::Unknown; }
    bool flagged_convex() const { return flags_.convex != FlagStatus::Unknown; }

    // Verify the flags on a uniform sample of [lo, hi]; flags that hold get
    // promoted to CheckedOnSample, violated ones are reset to Unknown.
    void check_flags_on_range(double lo, double hi, int samples = 1000) {
        bool nonneg = true, nondec = true, convex = true;
        double fd_h = std::max(1e-6, (hi - lo) * 1e-6);
        for (int i = 0; i < samples; ++i) {
            double u = lo + (hi - lo) * i / (samples - 1.0);
            double fu = value(u);
            double fp = deriv(u);
            if (fu < -1e-12) nonneg = false;
            if (fp < -1e-12) nondec = false;
            double fpp = (deriv(u + fd_h) - deriv(u - fd_h)) / (2 * fd_h);
            if (fpp < -1e-6 * (1 + std::abs(fp))) convex = false;
        }
        flags_.nonnegative = nonneg ? FlagStatus::CheckedOnSample : FlagStatus::Unknown;
        flags_.nondecreasing = nondec ? FlagStatus::CheckedOnSample : FlagStatus::Unknown;
        flags_.convex = convex ? FlagStatus::CheckedOnSample : FlagStatus::Unknown;
    }

    // Cross-checks the stored derivative and primitive at sampled points.
    // Returns the worst relative mismatch of fprime vs central differences.
    double audit_derivative(double lo, double hi, int samples = 100, uint64_t seed = 7) const {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(lo, hi);
        double worst = 0.0;
        for (int i = 0; i < samples; ++i) {
            double u = dist(rng);
            double h = std::max(1e-6, std::abs(u) * 1e-6);
            double fd = (value(u + h) - value(u - h)) / (2 * h);
            double sym = deriv(u);
            double scale = std::max({1.0, std::abs(fd), std::abs(sym)});
            worst = std::max(worst, std::abs(fd - sym) / scale);
        }
        return worst;
    }

  private:
    Expr f_, fprime_;
    std::optional<Expr> primitive_;
    NonlinearityFlags flags_;

    double eval1(const Expr& e, double u) const {
        const auto& sig = e.signature();
        if (sig.size() == 1) {
            double vals[1] = {u};
            return e.eval(vals);
        }
        throw std::invalid_argument("nonlinearity expression must have signature {u}");
    }
};

}  // namespace stablab::exprlang
