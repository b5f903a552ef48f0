#include "symflow/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

namespace symflow {

// ============================================================ rationals ====

Rational::Rational(long long n, long long d) {
    if (d == 0) throw DomainError("rational exponent with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    long long g = std::gcd(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    num = n;
    den = d;
}

Rational Rational::operator-(const Rational& o) const {
    return Rational(num * o.den - o.num * den, den * o.den);
}

// ============================================================= bindings ====

Bindings& Bindings::set(std::string name, double v) {
    for (auto& [k, val] : vars_) {
        if (k == name) { val = v; return *this; }
    }
    vars_.emplace_back(std::move(name), v);
    return *this;
}

const double* Bindings::find(std::string_view name) const {
    for (const auto& [k, val] : vars_) {
        if (k == name) return &val;
    }
    return nullptr;
}

// ========================================================= construction ====

namespace {

ExprPtr make_node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

bool is_const(const Expr& e, double v) {
    return e.valid() && e.node().op == ExprOp::Const && e.node().value == v;
}

bool is_const(const Expr& e) { return e.valid() && e.node().op == ExprOp::Const; }

}  // namespace

Expr Expr::constant(double v) {
    ExprNode n;
    n.op = ExprOp::Const;
    n.value = v;
    return Expr(make_node(std::move(n)));
}

Expr Expr::variable(std::string name) {
    ExprNode n;
    n.op = ExprOp::Var;
    n.name = std::move(name);
    return Expr(make_node(std::move(n)));
}

namespace {

Expr binary(ExprOp op, const Expr& a, const Expr& b) {
    ExprNode n;
    n.op = op;
    n.a = a.ptr();
    n.b = b.ptr();
    return Expr(make_node(std::move(n)));
}

}  // namespace

Expr operator+(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return Expr::constant(a.node().value + b.node().value);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return binary(ExprOp::Add, a, b);
}

Expr operator-(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return Expr::constant(a.node().value - b.node().value);
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return -b;
    return binary(ExprOp::Sub, a, b);
}

Expr operator*(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return Expr::constant(a.node().value * b.node().value);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return binary(ExprOp::Mul, a, b);
}

Expr operator/(Expr a, Expr b) {
    if (is_const(b, 1.0)) return a;
    if (is_const(a, 0.0) && !is_const(b, 0.0)) return Expr::constant(0.0);
    return binary(ExprOp::Div, a, b);
}

Expr operator-(Expr a) {
    if (is_const(a)) return Expr::constant(-a.node().value);
    ExprNode n;
    n.op = ExprOp::Neg;
    n.a = a.ptr();
    return Expr(make_node(std::move(n)));
}

Expr Expr::pow(Expr base, Rational q) {
    if (q.num == 0) return constant(1.0);
    if (q.num == 1 && q.den == 1) return base;
    ExprNode n;
    n.op = ExprOp::Pow;
    n.exponent = q;
    n.a = base.ptr();
    return Expr(make_node(std::move(n)));
}

namespace {

Expr unary_call(ExprOp op, const Expr& a) {
    ExprNode n;
    n.op = op;
    n.a = a.ptr();
    return Expr(make_node(std::move(n)));
}

}  // namespace

Expr Expr::sin(Expr a) { return unary_call(ExprOp::Sin, a); }
Expr Expr::cos(Expr a) { return unary_call(ExprOp::Cos, a); }
Expr Expr::exp(Expr a) { return unary_call(ExprOp::Exp, a); }
Expr Expr::log(Expr a) { return unary_call(ExprOp::Log, a); }
Expr Expr::sqrt(Expr a) { return unary_call(ExprOp::Sqrt, a); }

// ============================================================ evaluation ====

namespace {

// Integer power by repeated squaring; exact for the small exponents that occur.
double ipow(double x, long long k) {
    if (k < 0) {
        if (x == 0.0) throw DomainError("zero raised to a negative power");
        return 1.0 / ipow(x, -k);
    }
    double acc = 1.0, base = x;
    while (k > 0) {
        if (k & 1) acc *= base;
        base *= base;
        k >>= 1;
    }
    return acc;
}

double eval_node(const ExprNode& n, const Bindings& env) {
    switch (n.op) {
        case ExprOp::Const: return n.value;
        case ExprOp::Var: {
            const double* v = env.find(n.name);
            if (!v) throw UnboundVariable(n.name);
            return *v;
        }
        case ExprOp::Add: return eval_node(*n.a, env) + eval_node(*n.b, env);
        case ExprOp::Sub: return eval_node(*n.a, env) - eval_node(*n.b, env);
        case ExprOp::Mul: return eval_node(*n.a, env) * eval_node(*n.b, env);
        case ExprOp::Div: {
            double num = eval_node(*n.a, env);
            double den = eval_node(*n.b, env);
            if (den == 0.0) throw DomainError("division by zero");
            return num / den;
        }
        case ExprOp::Neg: return -eval_node(*n.a, env);
        case ExprOp::Pow: {
            double x = eval_node(*n.a, env);
            if (n.exponent.is_integer()) return ipow(x, n.exponent.num);
            if (x < 0.0) throw DomainError("fractional power of a negative base");
            if (x == 0.0 && n.exponent.num < 0) throw DomainError("zero raised to a negative power");
            return std::pow(x, n.exponent.value());
        }
        case ExprOp::Sin: return std::sin(eval_node(*n.a, env));
        case ExprOp::Cos: return std::cos(eval_node(*n.a, env));
        case ExprOp::Exp: return std::exp(eval_node(*n.a, env));
        case ExprOp::Log: {
            double x = eval_node(*n.a, env);
            if (x <= 0.0) throw DomainError("log of a non-positive value");
            return std::log(x);
        }
        case ExprOp::Sqrt: {
            double x = eval_node(*n.a, env);
            if (x < 0.0) throw DomainError("sqrt of a negative value");
            return std::sqrt(x);
        }
    }
    throw Error("corrupt expression node");
}

}  // namespace

double Expr::eval(const Bindings& env) const {
    if (!node_) throw Error("evaluating an empty expression");
    return eval_node(*node_, env);
}

// ======================================================= differentiation ====

Expr Expr::diff(std::string_view var) const {
    if (!node_) throw Error("differentiating an empty expression");
    const ExprNode& n = *node_;
    auto sub = [&](const ExprPtr& p) { return Expr(p).diff(var); };
    switch (n.op) {
        case ExprOp::Const: return constant(0.0);
        case ExprOp::Var: return constant(n.name == var ? 1.0 : 0.0);
        case ExprOp::Add: return sub(n.a) + sub(n.b);
        case ExprOp::Sub: return sub(n.a) - sub(n.b);
        case ExprOp::Mul: return sub(n.a) * Expr(n.b) + Expr(n.a) * sub(n.b);
        case ExprOp::Div:
            return (sub(n.a) * Expr(n.b) - Expr(n.a) * sub(n.b)) /
                   pow(Expr(n.b), Rational::integer(2));
        case ExprOp::Neg: return -sub(n.a);
        case ExprOp::Pow: {
            Rational qm1 = n.exponent - Rational::integer(1);
            return constant(n.exponent.value()) * pow(Expr(n.a), qm1) * sub(n.a);
        }
        case ExprOp::Sin: return cos(Expr(n.a)) * sub(n.a);
        case ExprOp::Cos: return -(sin(Expr(n.a)) * sub(n.a));
        case ExprOp::Exp: return exp(Expr(n.a)) * sub(n.a);
        case ExprOp::Log: return sub(n.a) / Expr(n.a);
        case ExprOp::Sqrt: return sub(n.a) / (constant(2.0) * sqrt(Expr(n.a)));
    }
    throw Error("corrupt expression node");
}

// ============================================================== printing ====

namespace {

// Shortest decimal that round-trips to the same double.
std::string print_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Rational exponent in source form: integer, exact decimal, or (n/d).
std::string print_exponent(const Rational& q) {
    if (q.is_integer()) return std::to_string(q.num);
    // denominators 2^a 5^b have an exact decimal expansion
    long long d = q.den;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    if (d == 1) return print_double(q.value());
    return "(" + std::to_string(q.num) + "/" + std::to_string(q.den) + ")";
}

// Operator binding levels: + - are 1, * / are 2, unary minus 3, ^ 4, atoms 5.
int precedence(const ExprNode& n) {
    switch (n.op) {
        case ExprOp::Add: case ExprOp::Sub: return 1;
        case ExprOp::Mul: case ExprOp::Div: return 2;
        case ExprOp::Neg: return 3;
        case ExprOp::Pow: return 4;
        default: return 5;
    }
}

void print_node(const ExprNode& n, int min_prec, std::string& out) {
    int prec = precedence(n);
    bool parens = prec < min_prec;
    if (parens) out += '(';
    switch (n.op) {
        case ExprOp::Const: out += print_double(n.value); break;
        case ExprOp::Var: out += n.name; break;
        case ExprOp::Add:
            print_node(*n.a, 1, out); out += '+'; print_node(*n.b, 2, out);
            break;
        case ExprOp::Sub:
            print_node(*n.a, 1, out); out += '-'; print_node(*n.b, 2, out);
            break;
        case ExprOp::Mul:
            print_node(*n.a, 2, out); out += '*'; print_node(*n.b, 3, out);
            break;
        case ExprOp::Div:
            print_node(*n.a, 2, out); out += '/'; print_node(*n.b, 3, out);
            break;
        case ExprOp::Neg:
            out += '-'; print_node(*n.a, 4, out);
            break;
        case ExprOp::Pow:
            print_node(*n.a, 5, out); out += '^'; out += print_exponent(n.exponent);
            break;
        case ExprOp::Sin: out += "sin("; print_node(*n.a, 0, out); out += ')'; break;
        case ExprOp::Cos: out += "cos("; print_node(*n.a, 0, out); out += ')'; break;
        case ExprOp::Exp: out += "exp("; print_node(*n.a, 0, out); out += ')'; break;
        case ExprOp::Log: out += "log("; print_node(*n.a, 0, out); out += ')'; break;
        case ExprOp::Sqrt: out += "sqrt("; print_node(*n.a, 0, out); out += ')'; break;
    }
    if (parens) out += ')';
}

}  // namespace

std::string Expr::str() const {
    if (!node_) return "";
    std::string out;
    print_node(*node_, 0, out);
    return out;
}

// ================================================================ parser ====

namespace {

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& variables)
        : src_(src), vars_(variables) {}

    Expr run() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != src_.size())
            throw SyntaxError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < src_.size() && src_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) { ++pos_; return true; }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) throw SyntaxError(std::string("expected ") + what, pos_);
    }

    Expr parse_sum() {
        Expr e = parse_term();
        for (;;) {
            if (accept('+')) e = e + parse_term();
            else if (accept('-')) e = e - parse_term();
            else return e;
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        for (;;) {
            if (accept('*')) e = e * parse_unary();
            else if (accept('/')) e = e / parse_unary();
            else return e;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (accept('^')) return Expr::pow(base, parse_exponent());
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return Expr::constant(parse_number().value);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            std::string id = parse_ident();
            if (peek('(')) {
                Expr arg = [&] {
                    expect('(', "'('");
                    Expr e = parse_sum();
                    expect(')', "')'");
                    return e;
                }();
                if (id == "sin") return Expr::sin(arg);
                if (id == "cos") return Expr::cos(arg);
                if (id == "exp") return Expr::exp(arg);
                if (id == "log") return Expr::log(arg);
                if (id == "sqrt") return Expr::sqrt(arg);
                throw UnknownIdentifier(id, start);
            }
            if (std::find(vars_.begin(), vars_.end(), id) == vars_.end())
                throw UnknownIdentifier(id, start);
            return Expr::variable(id);
        }
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            expect(')', "')'");
            return e;
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string parse_ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ++pos_;
            else break;
        }
        return std::string(src_.substr(start, pos_ - start));
    }

    struct Number {
        double value;
        bool is_integer;      // no '.' or exponent in the literal
        long long int_value;  // valid when is_integer
        // decimal literals map to exact rationals: digits / 10^k
        long long mant;
        int frac_digits;
        bool exact;  // mantissa fits in long long and no exponent part
    };

    Number parse_number() {
        skip_ws();
        std::size_t start = pos_;
        Number num{};
        num.is_integer = true;
        num.exact = true;
        long long mant = 0;
        int frac = 0;
        bool any = false, overflow = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            any = true;
            if (mant > (std::numeric_limits<long long>::max() - 9) / 10) overflow = true;
            else mant = mant * 10 + (src_[pos_] - '0');
            ++pos_;
        }
        if (pos_ < src_.size() && src_[pos_] == '.') {
            num.is_integer = false;
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                any = true;
                if (mant > (std::numeric_limits<long long>::max() - 9) / 10) overflow = true;
                else { mant = mant * 10 + (src_[pos_] - '0'); ++frac; }
                ++pos_;
            }
        }
        if (!any) throw SyntaxError("malformed number", start);
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            num.is_integer = false;
            num.exact = false;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                throw SyntaxError("malformed exponent", pos_);
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (overflow) num.exact = false;
        num.mant = mant;
        num.frac_digits = frac;
        num.int_value = mant;
        double v = 0.0;
        auto text = src_.substr(start, pos_ - start);
        auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc{}) throw SyntaxError("malformed number", start);
        num.value = v;
        return num;
    }

    Rational parse_exponent() {
        skip_ws();
        bool parenthesized = accept('(');
        bool negative = accept('-');
        if (!negative && accept('+')) {}
        Number n = parse_number();
        if (!n.exact)
            throw SyntaxError("exponent must be an integer, exact decimal, or fraction", pos_);
        long long num = n.mant;
        long long den = 1;
        for (int i = 0; i < n.frac_digits; ++i) den *= 10;
        if (parenthesized && accept('/')) {
            Number d = parse_number();
            if (!d.is_integer || !d.exact || d.int_value == 0)
                throw SyntaxError("fraction denominator must be a nonzero integer", pos_);
            den *= d.int_value;
        }
        if (parenthesized) expect(')', "')'");
        return Rational(negative ? -num : num, den);
    }
};

}  // namespace

Expr parse_expr(std::string_view src, const std::vector<std::string>& variables) {
    return Parser(src, variables).run();
}

}  // namespace symflow
