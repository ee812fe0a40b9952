// Tiny scalar expression language: parser, printer, evaluator, and symbolic
// derivative. Hosts user-supplied coefficient entries and nonlinearities.
//
// Grammar (see docs/expressions.md):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?            // right associative, binds tighter
//   atom   := number | ident | func '(' expr {',' expr} ')' | '(' expr ')'
// Functions: exp, log, sqrt, abs, sign (1 argument); min, max (2 arguments).
// Every other identifier must be declared in the expression signature.
#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stablab::exprlang {

struct ParseError : std::runtime_error {
    size_t offset;
    ParseError(const std::string& msg, size_t off)
        : std::runtime_error(msg + " at byte " + std::to_string(off)), offset(off) {}
};

struct DomainError : std::runtime_error {
    size_t point_index;
    explicit DomainError(const std::string& msg, size_t index = 0)
        : std::runtime_error(msg), point_index(index) {}
};

enum class Op : uint8_t {
    Const,
    Var,
    Neg,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
};

inline bool is_unary(Op o) { return o >= Op::Neg && o <= Op::Sign; }
inline bool is_binary(Op o) { return o >= Op::Add; }

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    double value = 0.0;  // Const
    int slot = -1;       // Var: index into the signature
    NodePtr a, b;
};

namespace detail {

inline NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
}
inline NodePtr make_var(int slot) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->slot = slot;
    return n;
}
inline NodePtr make_unary(Op op, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    return n;
}
inline NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline double apply_unary(Op op, double x, size_t pt) {
    switch (op) {
        case Op::Neg: return -x;
        case Op::Exp: {
            double r = std::exp(x);
            if (!std::isfinite(r)) throw DomainError("exp overflow", pt);
            return r;
        }
        case Op::Log:
            if (x <= 0.0) throw DomainError("log of nonpositive value", pt);
            return std::log(x);
        case Op::Sqrt:
            if (x < 0.0) throw DomainError("sqrt of negative value", pt);
            return std::sqrt(x);
        case Op::Abs: return std::abs(x);
        case Op::Sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        default: throw std::logic_error("not unary");
    }
}

inline double apply_binary(Op op, double x, double y, size_t pt) {
    switch (op) {
        case Op::Add: return x + y;
        case Op::Sub: return x - y;
        case Op::Mul: return x * y;
        case Op::Div:
            if (y == 0.0) throw DomainError("division by zero", pt);
            return x / y;
        case Op::Pow: {
            if (x == 0.0 && y < 0.0) throw DomainError("zero to negative power", pt);
            if (x < 0.0 && y != std::floor(y)) throw DomainError("negative base, fractional exponent", pt);
            double r = std::pow(x, y);
            if (!std::isfinite(r)) throw DomainError("pow overflow", pt);
            return r;
        }
        case Op::Min: return std::min(x, y);
        case Op::Max: return std::max(x, y);
        default: throw std::logic_error("not binary");
    }
}

}  // namespace detail

// Immutable after construction; safe to share across threads.
class Expr {
  public:
    Expr() = default;

    static Expr parse(std::string_view src, std::vector<std::string> signature);

    static Expr constant(double v, std::vector<std::string> signature = {}) {
        return Expr(detail::make_const(v), std::move(signature));
    }
    static Expr variable(const std::string& name, std::vector<std::string> signature) {
        for (size_t i = 0; i < signature.size(); ++i)
            if (signature[i] == name) return Expr(detail::make_var(static_cast<int>(i)), std::move(signature));
        throw std::invalid_argument("variable '" + name + "' not in signature");
    }

    bool valid() const { return root_ != nullptr; }
    const std::vector<std::string>& signature() const { return sig_; }

    double eval(std::span<const double> values, size_t point_index = 0) const {
        if (values.size() != sig_.size())
            throw std::invalid_argument("eval: expected " + std::to_string(sig_.size()) + " values");
        double r = eval_node(root_.get(), values, point_index);
        if (!std::isfinite(r)) throw DomainError("non-finite result", point_index);
        return r;
    }

    std::vector<double> eval_batch(const std::vector<std::vector<double>>& points) const {
        std::vector<double> out;
        out.reserve(points.size());
        for (size_t i = 0; i < points.size(); ++i)
            out.push_back(eval(std::span<const double>(points[i]), i));
        return out;
    }

    std::string print() const {
        std::string out;
        print_node(root_.get(), 0, out);
        return out;
    }

    Expr derivative(const std::string& var) const {
        int slot = find_slot(var);
        if (slot < 0) return Expr(detail::make_const(0.0), sig_);
        return Expr(diff_node(root_.get(), slot), sig_);
    }

    // Replace every occurrence of `var` by `replacement` (same signature as
    // the result; replacement must use the target signature).
    Expr substituted(const std::string& var, const Expr& replacement,
                     const std::vector<std::string>& new_signature) const {
        int slot = find_slot(var);
        std::vector<int> remap(sig_.size(), -1);
        for (size_t i = 0; i < sig_.size(); ++i) {
            if (static_cast<int>(i) == slot) continue;
            for (size_t j = 0; j < new_signature.size(); ++j)
                if (new_signature[j] == sig_[i]) remap[i] = static_cast<int>(j);
            if (remap[i] < 0)
                throw std::invalid_argument("substitute: variable '" + sig_[i] + "' missing from new signature");
        }
        return Expr(subst_node(root_.get(), slot, replacement.root_, remap), new_signature);
    }

    bool depends_on(const std::string& var) const {
        int slot = find_slot(var);
        return slot >= 0 && depends_node(root_.get(), slot);
    }

    // True if the tree contains abs/sign/min/max (derivatives are a
    // subgradient choice at kinks).
    bool nonsmooth() const { return nonsmooth_node(root_.get()); }

    bool is_constant_zero() const { return root_ && root_->op == Op::Const && root_->value == 0.0; }

    // Algebra helpers used when building derived coefficient expressions.
    friend Expr operator+(const Expr& a, const Expr& b) { return combine(Op::Add, a, b); }
    friend Expr operator-(const Expr& a, const Expr& b) { return combine(Op::Sub, a, b); }
    friend Expr operator*(const Expr& a, const Expr& b) { return combine(Op::Mul, a, b); }
    Expr negated() const { return Expr(fold_unary(Op::Neg, root_), sig_); }

  private:
    NodePtr root_;
    std::vector<std::string> sig_;

    Expr(NodePtr root, std::vector<std::string> sig) : root_(std::move(root)), sig_(std::move(sig)) {}

    int find_slot(const std::string& var) const {
        for (size_t i = 0; i < sig_.size(); ++i)
            if (sig_[i] == var) return static_cast<int>(i);
        return -1;
    }

    static Expr combine(Op op, const Expr& a, const Expr& b) {
        if (a.sig_ != b.sig_) throw std::invalid_argument("expression signatures differ");
        return Expr(fold_binary(op, a.root_, b.root_), a.sig_);
    }

    static double eval_node(const Node* n, std::span<const double> vals, size_t pt) {
        switch (n->op) {
            case Op::Const: return n->value;
            case Op::Var: return vals[n->slot];
            default:
                if (is_unary(n->op)) return detail::apply_unary(n->op, eval_node(n->a.get(), vals, pt), pt);
                return detail::apply_binary(n->op, eval_node(n->a.get(), vals, pt),
                                            eval_node(n->b.get(), vals, pt), pt);
        }
    }

    static bool depends_node(const Node* n, int slot) {
        if (n->op == Op::Var) return n->slot == slot;
        if (n->op == Op::Const) return false;
        if (depends_node(n->a.get(), slot)) return true;
        return n->b && depends_node(n->b.get(), slot);
    }

    static bool nonsmooth_node(const Node* n) {
        if (n->op == Op::Abs || n->op == Op::Sign || n->op == Op::Min || n->op == Op::Max) return true;
        if (n->a && nonsmooth_node(n->a.get())) return true;
        return n->b && nonsmooth_node(n->b.get());
    }

    // -- light peephole folding, used only on derived trees ------------------
    static NodePtr fold_unary(Op op, const NodePtr& a) {
        if (a->op == Op::Const) {
            try {
                return detail::make_const(detail::apply_unary(op, a->value, 0));
            } catch (const DomainError&) { /* keep symbolic */
            }
        }
        if (op == Op::Neg && a->op == Op::Neg) return a->a;
        return detail::make_unary(op, a);
    }

    static bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

    static NodePtr fold_binary(Op op, const NodePtr& a, const NodePtr& b) {
        if (a->op == Op::Const && b->op == Op::Const) {
            try {
                return detail::make_const(detail::apply_binary(op, a->value, b->value, 0));
            } catch (const DomainError&) { /* keep symbolic */
            }
        }
        switch (op) {
            case Op::Add:
                if (is_const(a, 0)) return b;
                if (is_const(b, 0)) return a;
                break;
            case Op::Sub:
                if (is_const(b, 0)) return a;
                if (is_const(a, 0)) return fold_unary(Op::Neg, b);
                break;
            case Op::Mul:
                if (is_const(a, 1)) return b;
                if (is_const(b, 1)) return a;
                if (is_const(a, 0) || is_const(b, 0)) return detail::make_const(0.0);
                break;
            case Op::Div:
                if (is_const(b, 1)) return a;
                break;
            case Op::Pow:
                if (is_const(b, 1)) return a;
                if (is_const(b, 0)) return detail::make_const(1.0);
                break;
            default: break;
        }
        return detail::make_binary(op, a, b);
    }

    static NodePtr diff_node(const Node* n, int slot) {
        using namespace detail;
        switch (n->op) {
            case Op::Const: return make_const(0.0);
            case Op::Var: return make_const(n->slot == slot ? 1.0 : 0.0);
            case Op::Neg: return fold_unary(Op::Neg, diff_node(n->a.get(), slot));
            case Op::Exp:
                return fold_binary(Op::Mul, make_unary(Op::Exp, n->a), diff_node(n->a.get(), slot));
            case Op::Log: return fold_binary(Op::Div, diff_node(n->a.get(), slot), n->a);
            case Op::Sqrt:
                return fold_binary(Op::Div, diff_node(n->a.get(), slot),
                                   fold_binary(Op::Mul, make_const(2.0), make_unary(Op::Sqrt, n->a)));
            case Op::Abs:  // subgradient choice: sign(x), value 0 at 0
                return fold_binary(Op::Mul, make_unary(Op::Sign, n->a), diff_node(n->a.get(), slot));
            case Op::Sign: return make_const(0.0);
            case Op::Add:
                return fold_binary(Op::Add, diff_node(n->a.get(), slot), diff_node(n->b.get(), slot));
            case Op::Sub:
                return fold_binary(Op::Sub, diff_node(n->a.get(), slot), diff_node(n->b.get(), slot));
            case Op::Mul:
                return fold_binary(Op::Add, fold_binary(Op::Mul, diff_node(n->a.get(), slot), n->b),
                                   fold_binary(Op::Mul, n->a, diff_node(n->b.get(), slot)));
            case Op::Div:
                return fold_binary(
                    Op::Div,
                    fold_binary(Op::Sub, fold_binary(Op::Mul, diff_node(n->a.get(), slot), n->b),
                                fold_binary(Op::Mul, n->a, diff_node(n->b.get(), slot))),
                    fold_binary(Op::Mul, n->b, n->b));
            case Op::Pow: {
                if (n->b->op == Op::Const) {
                    double p = n->b->value;
                    return fold_binary(
                        Op::Mul, make_const(p),
                        fold_binary(Op::Mul, fold_binary(Op::Pow, n->a, make_const(p - 1.0)),
                                    diff_node(n->a.get(), slot)));
                }
                // general rule: a^b * (b' log a + b a'/a)
                NodePtr t1 = fold_binary(Op::Mul, diff_node(n->b.get(), slot), make_unary(Op::Log, n->a));
                NodePtr t2 = fold_binary(Op::Mul, n->b, fold_binary(Op::Div, diff_node(n->a.get(), slot), n->a));
                return fold_binary(Op::Mul, make_binary(Op::Pow, n->a, n->b), fold_binary(Op::Add, t1, t2));
            }
            case Op::Min:
            case Op::Max: {
                // subgradient: pick the active branch, split ties evenly
                NodePtr diffsign = make_unary(Op::Sign, fold_binary(Op::Sub, n->b, n->a));
                if (n->op == Op::Max) diffsign = fold_unary(Op::Neg, diffsign);
                NodePtr wa = fold_binary(Op::Div, fold_binary(Op::Add, make_const(1.0), diffsign), make_const(2.0));
                NodePtr wb = fold_binary(Op::Sub, make_const(1.0), wa);
                return fold_binary(Op::Add, fold_binary(Op::Mul, wa, diff_node(n->a.get(), slot)),
                                   fold_binary(Op::Mul, wb, diff_node(n->b.get(), slot)));
            }
        }
        throw std::logic_error("diff: unhandled op");
    }

    NodePtr subst_node(const Node* n, int slot, const NodePtr& repl, const std::vector<int>& remap) const {
        using namespace detail;
        switch (n->op) {
            case Op::Const: return make_const(n->value);
            case Op::Var:
                if (n->slot == slot) return repl;
                return make_var(remap[n->slot]);
            default:
                if (is_unary(n->op)) return make_unary(n->op, subst_node(n->a.get(), slot, repl, remap));
                return make_binary(n->op, subst_node(n->a.get(), slot, repl, remap),
                                   subst_node(n->b.get(), slot, repl, remap));
        }
    }

    // precedence levels: add 1, mul 2, unary minus 3, pow 4, atom 5
    void print_node(const Node* n, int parent_prec, std::string& out) const {
        auto parens = [&](int prec, auto&& body) {
            bool need = prec < parent_prec;
            if (need) out += '(';
            body();
            if (need) out += ')';
        };
        switch (n->op) {
            case Op::Const: {
                char buf[40];
                if (n->value < 0) {
                    std::snprintf(buf, sizeof buf, "%.17g", -n->value);
                    parens(3, [&] {
                        out += '-';
                        out += buf;
                    });
                } else {
                    std::snprintf(buf, sizeof buf, "%.17g", n->value);
                    out += buf;
                }
                return;
            }
            case Op::Var: out += sig_[n->slot]; return;
            case Op::Neg:
                parens(3, [&] {
                    out += '-';
                    print_node(n->a.get(), 3, out);
                });
                return;
            case Op::Exp:
            case Op::Log:
            case Op::Sqrt:
            case Op::Abs:
            case Op::Sign: {
                static const char* names[] = {"exp", "log", "sqrt", "abs", "sign"};
                out += names[static_cast<int>(n->op) - static_cast<int>(Op::Exp)];
                out += '(';
                print_node(n->a.get(), 0, out);
                out += ')';
                return;
            }
            case Op::Add:
            case Op::Sub:
                parens(1, [&] {
                    print_node(n->a.get(), 1, out);
                    out += (n->op == Op::Add ? '+' : '-');
                    print_node(n->b.get(), 2, out);  // a-(b+c) keeps parens
                });
                return;
            case Op::Mul:
            case Op::Div:
                parens(2, [&] {
                    print_node(n->a.get(), 2, out);
                    out += (n->op == Op::Mul ? '*' : '/');
                    print_node(n->b.get(), 3, out);
                });
                return;
            case Op::Pow:
                parens(4, [&] {
                    print_node(n->a.get(), 5, out);
                    out += '^';
                    print_node(n->b.get(), 3, out);  // exponent parses at unary level
                });
                return;
            case Op::Min:
            case Op::Max:
                out += (n->op == Op::Min ? "min(" : "max(");
                print_node(n->a.get(), 0, out);
                out += ',';
                print_node(n->b.get(), 0, out);
                out += ')';
                return;
        }
    }

    friend class Parser;
};

class Parser {
  public:
    Parser(std::string_view src, const std::vector<std::string>& sig) : src_(src), sig_(sig) {}

    NodePtr run() {
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

  private:
    std::string_view src_;
    const std::vector<std::string>& sig_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                      src_[pos_] == '\r'))
            ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (eat('+')) lhs = detail::make_binary(Op::Add, lhs, parse_term());
            else if (eat('-')) lhs = detail::make_binary(Op::Sub, lhs, parse_term());
            else return lhs;
        }
    }
    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (eat('*')) lhs = detail::make_binary(Op::Mul, lhs, parse_unary());
            else if (eat('/')) lhs = detail::make_binary(Op::Div, lhs, parse_unary());
            else return lhs;
        }
    }
    NodePtr parse_unary() {
        if (eat('-')) return detail::make_unary(Op::Neg, parse_unary());
        return parse_power();
    }
    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (eat('^')) return detail::make_binary(Op::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!eat(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        size_t start = pos_;
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw ParseError("malformed number", start);
        pos_ += static_cast<size_t>(end - begin);
        return detail::make_const(v);
    }

    NodePtr parse_ident() {
        size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        skip_ws();
        bool call = pos_ < src_.size() && src_[pos_] == '(';
        static const struct {
            const char* name;
            Op op;
            int arity;
        } kFuncs[] = {{"exp", Op::Exp, 1},  {"log", Op::Log, 1},  {"sqrt", Op::Sqrt, 1},
                      {"abs", Op::Abs, 1},  {"sign", Op::Sign, 1}, {"min", Op::Min, 2},
                      {"max", Op::Max, 2}};
        if (call) {
            for (const auto& f : kFuncs) {
                if (name == f.name) {
                    ++pos_;  // '('
                    NodePtr a = parse_expr();
                    if (f.arity == 1) {
                        if (!eat(')')) throw ParseError("expected ')'", pos_);
                        return detail::make_unary(f.op, a);
                    }
                    if (!eat(',')) throw ParseError("expected ',' (" + name + " takes 2 arguments)", pos_);
                    NodePtr b = parse_expr();
                    if (!eat(')')) throw ParseError("expected ')'", pos_);
                    return detail::make_binary(f.op, a, b);
                }
            }
            throw ParseError("unknown function '" + name + "'", start);
        }
        for (const auto& f : kFuncs)
            if (name == f.name) throw ParseError("function '" + name + "' requires arguments", start);
        for (size_t i = 0; i < sig_.size(); ++i)
            if (sig_[i] == name) return detail::make_var(static_cast<int>(i));
        throw ParseError("unknown identifier '" + name + "'", start);
    }
};

inline Expr Expr::parse(std::string_view src, std::vector<std::string> signature) {
    Parser p(src, signature);
    NodePtr root = p.run();
    return Expr(std::move(root), std::move(signature));
}

}  // namespace stablab::exprlang
