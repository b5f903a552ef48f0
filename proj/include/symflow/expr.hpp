#pragma once

// Small closed-form expression language used for initial metric profiles and
// boundary-condition maps.  Supports exact symbolic differentiation, so
// compatibility checks and source terms never rely on finite differences.

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symflow/errors.hpp"

namespace symflow {

// Exponents are kept as exact rationals so d/dx (f^q) = q f^(q-1) f' stays
// inside the language.
struct Rational {
    long long num = 0;
    long long den = 1;  // > 0, gcd(|num|, den) = 1

    Rational() = default;
    Rational(long long n, long long d);
    static Rational integer(long long n) { return Rational(n, 1); }

    bool is_integer() const { return den == 1; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    Rational operator-(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

enum class ExprOp {
    Const, Var,
    Add, Sub, Mul, Div, Neg,
    Pow,                       // rational exponent
    Sin, Cos, Exp, Log, Sqrt,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    ExprOp op;
    double value = 0.0;     // Const
    std::string name;       // Var
    Rational exponent;      // Pow
    ExprPtr a, b;           // operands
};

// Variable bindings for evaluation.  Linear lookup: environments hold a
// handful of names (r, t, u1..un).
class Bindings {
public:
    Bindings& set(std::string name, double v);
    const double* find(std::string_view name) const;

private:
    std::vector<std::pair<std::string, double>> vars_;
};

// Immutable expression handle.
class Expr {
public:
    Expr() = default;
    explicit Expr(ExprPtr node) : node_(std::move(node)) {}

    static Expr constant(double v);
    static Expr variable(std::string name);

    bool valid() const { return node_ != nullptr; }
    const ExprNode& node() const { return *node_; }
    const ExprPtr& ptr() const { return node_; }

    // Throws UnboundVariable for missing names, DomainError for division by
    // zero, log of a non-positive value, sqrt of a negative value, or a
    // fractional power of a negative base.
    double eval(const Bindings& env) const;

    // Exact derivative with respect to `var` (lightly simplified).
    Expr diff(std::string_view var) const;

    // Canonical text form; parse(str()) reproduces the same tree.
    std::string str() const;

    // Structural building blocks (each applies trivial simplifications:
    // constant folding, x+0, x*1, x*0, x^0, x^1).
    friend Expr operator+(Expr, Expr);
    friend Expr operator-(Expr, Expr);
    friend Expr operator*(Expr, Expr);
    friend Expr operator/(Expr, Expr);
    friend Expr operator-(Expr);
    static Expr pow(Expr base, Rational q);
    static Expr sin(Expr);
    static Expr cos(Expr);
    static Expr exp(Expr);
    static Expr log(Expr);
    static Expr sqrt(Expr);

private:
    ExprPtr node_;
};

// Grammar (binding tightness: ^ > unary minus > * / > + -):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' exponent)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//   exponent := ['-'] number | '(' ['-'] number ['/' number] ')'
// Functions: sin cos exp log sqrt.  Any other identifier must appear in
// `variables`, otherwise UnknownIdentifier is thrown with its byte offset.
Expr parse_expr(std::string_view src, const std::vector<std::string>& variables);

}  // namespace symflow
