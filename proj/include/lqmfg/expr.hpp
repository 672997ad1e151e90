#pragma once

#include "lqmfg/types.hpp"

#include <cctype>
#include <cmath>
#include <vector>

namespace lqmfg {

/// Arithmetic expression over named variables.
///
/// Grammar: numbers, variables, + - * /, unary minus, parentheses, and the
/// functions exp, sin, cos. Parsed once into a small tree, evaluated many
/// times against a value slot per variable.
class Expr {
public:
    Expr() = default;

    static Expr parse(const std::string& text, const std::vector<std::string>& variables);

    double eval(const std::vector<double>& values) const {
        if (root_ < 0) throw ParseError("Expr: evaluating an empty expression");
        return eval_node(root_, values);
    }

    bool empty() const { return root_ < 0; }

private:
    enum class Op { number, variable, add, sub, mul, div, neg, fn_exp, fn_sin, fn_cos };

    struct Node {
        Op op;
        double value = 0.0; // number literal or variable index
        int a = -1, b = -1;
    };

    std::vector<Node> nodes_;
    int root_ = -1;

    double eval_node(int idx, const std::vector<double>& v) const {
        const Node& n = nodes_[static_cast<size_t>(idx)];
        switch (n.op) {
        case Op::number: return n.value;
        case Op::variable: return v.at(static_cast<size_t>(n.value));
        case Op::add: return eval_node(n.a, v) + eval_node(n.b, v);
        case Op::sub: return eval_node(n.a, v) - eval_node(n.b, v);
        case Op::mul: return eval_node(n.a, v) * eval_node(n.b, v);
        case Op::div: return eval_node(n.a, v) / eval_node(n.b, v);
        case Op::neg: return -eval_node(n.a, v);
        case Op::fn_exp: return std::exp(eval_node(n.a, v));
        case Op::fn_sin: return std::sin(eval_node(n.a, v));
        case Op::fn_cos: return std::cos(eval_node(n.a, v));
        }
        return 0.0;
    }

    friend struct ExprParser;
};

struct ExprParser {
    const std::string& s;
    size_t pos = 0;
    const std::vector<std::string>& vars;
    Expr& out;

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool consume(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) { ++pos; return true; }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("Expr: " + what + " at position " + std::to_string(pos) + " in \"" + s + "\"");
    }

    int add_node(Expr::Node n) {
        out.nodes_.push_back(n);
        return static_cast<int>(out.nodes_.size()) - 1;
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            skip();
            if (consume('+')) lhs = add_node({Expr::Op::add, 0, lhs, parse_term()});
            else if (consume('-')) lhs = add_node({Expr::Op::sub, 0, lhs, parse_term()});
            else return lhs;
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        for (;;) {
            skip();
            if (consume('*')) lhs = add_node({Expr::Op::mul, 0, lhs, parse_factor()});
            else if (consume('/')) lhs = add_node({Expr::Op::div, 0, lhs, parse_factor()});
            else return lhs;
        }
    }

    int parse_factor() {
        skip();
        if (consume('-')) return add_node({Expr::Op::neg, 0, parse_factor(), -1});
        return parse_primary();
    }

    int parse_primary() {
        skip();
        if (pos >= s.size()) fail("unexpected end of input");
        char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t used = 0;
            double val = std::stod(s.substr(pos), &used);
            pos += used;
            return add_node({Expr::Op::number, val, -1, -1});
        }
        if (c == '(') {
            ++pos;
            int inner = parse_expr();
            if (!consume(')')) fail("expected ')'");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            std::string name = s.substr(start, pos - start);
            skip();
            if (pos < s.size() && s[pos] == '(') {
                ++pos;
                int arg = parse_expr();
                if (!consume(')')) fail("expected ')' after argument of " + name);
                if (name == "exp") return add_node({Expr::Op::fn_exp, 0, arg, -1});
                if (name == "sin") return add_node({Expr::Op::fn_sin, 0, arg, -1});
                if (name == "cos") return add_node({Expr::Op::fn_cos, 0, arg, -1});
                fail("unknown function '" + name + "'");
            }
            for (size_t i = 0; i < vars.size(); ++i) {
                if (vars[i] == name)
                    return add_node({Expr::Op::variable, static_cast<double>(i), -1, -1});
            }
            fail("unknown variable '" + name + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

inline Expr Expr::parse(const std::string& text, const std::vector<std::string>& variables) {
    Expr e;
    ExprParser p{text, 0, variables, e};
    e.root_ = p.parse_expr();
    p.skip();
    if (p.pos != text.size()) p.fail("trailing input");
    return e;
}

} // namespace lqmfg
