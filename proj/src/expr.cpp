#include "quadinv/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <vector>

#include "quadinv/errors.hpp"

namespace quadinv {

namespace {

struct Node {
    virtual ~Node() = default;
    // Returns (value, derivative) at t.
    virtual std::pair<double, double> eval(double t) const = 0;
};
using NodePtr = std::shared_ptr<const Node>;

struct Poly final : Node {
    std::vector<double> c;
    explicit Poly(std::vector<double> coeffs) : c(std::move(coeffs)) {}
    std::pair<double, double> eval(double t) const override {
        double v = 0.0, dv = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) {
            dv = dv * t + v;
            v = v * t + c[k];
        }
        return {v, dv};
    }
};

enum class Fn { exp, cos, sin };

struct Elementary final : Node {
    Fn fn;
    double k;
    Elementary(Fn f, double rate) : fn(f), k(rate) {}
    std::pair<double, double> eval(double t) const override {
        switch (fn) {
        case Fn::exp: {
            const double e = std::exp(k * t);
            return {e, k * e};
        }
        case Fn::cos:
            return {std::cos(k * t), -k * std::sin(k * t)};
        case Fn::sin:
            return {std::sin(k * t), k * std::cos(k * t)};
        }
        return {0.0, 0.0};
    }
};

struct Binary final : Node {
    char op;
    NodePtr l, r;
    Binary(char o, NodePtr a, NodePtr b) : op(o), l(std::move(a)), r(std::move(b)) {}
    std::pair<double, double> eval(double t) const override {
        const auto [u, du] = l->eval(t);
        const auto [v, dv] = r->eval(t);
        switch (op) {
        case '+': return {u + v, du + dv};
        case '-': return {u - v, du - dv};
        default: return {u * v, du * v + u * dv};
        }
    }
};

struct Negate final : Node {
    NodePtr e;
    explicit Negate(NodePtr x) : e(std::move(x)) {}
    std::pair<double, double> eval(double t) const override {
        const auto [v, dv] = e->eval(t);
        return {-v, -dv};
    }
};

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw UsageError("coefficient expression: " + msg + " at column " +
                         std::to_string(pos_ + 1) + " in '" + std::string(s_) + "'");
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    bool peek_number() {
        skip();
        return pos_ < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.');
    }
    double number() {
        skip();
        const std::string rest(s_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail("expected a number");
        pos_ += static_cast<std::size_t>(end - rest.c_str());
        if (!std::isfinite(v)) fail("number out of range");
        return v;
    }
    double signed_number() {
        const bool neg = accept('-');
        const double v = number();
        return neg ? -v : v;
    }
    std::string identifier() {
        skip();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        return std::string(s_.substr(start, pos_ - start));
    }

    NodePtr expr() {
        NodePtr e = term();
        for (;;) {
            if (accept('+')) e = std::make_shared<Binary>('+', e, term());
            else if (accept('-')) e = std::make_shared<Binary>('-', e, term());
            else return e;
        }
    }
    NodePtr term() {
        NodePtr e = unary();
        while (accept('*')) e = std::make_shared<Binary>('*', e, unary());
        return e;
    }
    NodePtr unary() {
        if (accept('-')) return std::make_shared<Negate>(unary());
        return primary();
    }
    // rate := ['-'] [number ['*']] 't'
    double rate() {
        const bool neg = accept('-');
        double k = 1.0;
        if (peek_number()) {
            k = number();
            accept('*');
        }
        skip();
        if (identifier() != "t") fail("expected 't' in rate");
        return neg ? -k : k;
    }
    NodePtr primary() {
        if (accept('(')) {
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (peek_number()) return std::make_shared<Poly>(std::vector<double>{number()});
        const std::size_t at = pos_;
        const std::string id = identifier();
        if (id == "t") return std::make_shared<Poly>(std::vector<double>{0.0, 1.0});
        if (id == "const") {
            expect('(');
            const double v = signed_number();
            expect(')');
            return std::make_shared<Poly>(std::vector<double>{v});
        }
        if (id == "poly") {
            expect('(');
            std::vector<double> c{signed_number()};
            while (accept(',')) c.push_back(signed_number());
            expect(')');
            return std::make_shared<Poly>(std::move(c));
        }
        if (id == "exp" || id == "cos" || id == "sin") {
            const Fn fn = id == "exp" ? Fn::exp : (id == "cos" ? Fn::cos : Fn::sin);
            expect('(');
            const double k = rate();
            expect(')');
            return std::make_shared<Elementary>(fn, k);
        }
        pos_ = at;
        if (id.empty()) fail("expected a term");
        fail("unknown function '" + id + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace

TimeFunction parse_time_function(std::string_view text) {
    NodePtr root = Parser(text).parse();
    return {[root](double t) { return root->eval(t).first; },
            [root](double t) { return root->eval(t).second; }};
}

CoefficientSet make_inline_coefficients(const std::string& a, const std::string& b,
                                        const std::string& c, const std::string& d,
                                        double t_max) {
    return CoefficientSet("inline", parse_time_function(a), parse_time_function(b),
                          parse_time_function(c), parse_time_function(d), t_max);
}

} // namespace quadinv
