#include "scl/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>

namespace scl {

namespace {

bool is_unary(ExprOp op) {
    switch (op) {
    case ExprOp::Neg:
    case ExprOp::Exp:
    case ExprOp::Log:
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Tanh:
    case ExprOp::Sech:
    case ExprOp::Sqrt:
    case ExprOp::Abs:
        return true;
    default:
        return false;
    }
}

bool is_binary(ExprOp op) {
    switch (op) {
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div:
    case ExprOp::Pow:
    case ExprOp::Min:
    case ExprOp::Max:
        return true;
    default:
        return false;
    }
}

// Pure arithmetic for one node, shared by eval and constant folding.
// Returns false when the operation is outside its domain or the result is
// not finite.
bool apply_op(ExprOp op, const double* args, double& out) {
    switch (op) {
    case ExprOp::Neg: out = -args[0]; break;
    case ExprOp::Add: out = args[0] + args[1]; break;
    case ExprOp::Sub: out = args[0] - args[1]; break;
    case ExprOp::Mul: out = args[0] * args[1]; break;
    case ExprOp::Div:
        if (args[1] == 0.0) return false;
        out = args[0] / args[1];
        break;
    case ExprOp::Pow: out = std::pow(args[0], args[1]); break;
    case ExprOp::Exp: out = std::exp(args[0]); break;
    case ExprOp::Log:
        if (args[0] <= 0.0) return false;
        out = std::log(args[0]);
        break;
    case ExprOp::Sin: out = std::sin(args[0]); break;
    case ExprOp::Cos: out = std::cos(args[0]); break;
    case ExprOp::Tanh: out = std::tanh(args[0]); break;
    case ExprOp::Sech: out = 1.0 / std::cosh(args[0]); break;
    case ExprOp::Sqrt:
        if (args[0] < 0.0) return false;
        out = std::sqrt(args[0]);
        break;
    case ExprOp::Abs: out = std::fabs(args[0]); break;
    case ExprOp::Min: out = args[0] <= args[1] ? args[0] : args[1]; break;
    case ExprOp::Max: out = args[0] >= args[1] ? args[0] : args[1]; break;
    case ExprOp::Select: out = args[0] <= args[1] ? args[2] : args[3]; break;
    default: return false; // Literal / vars handled by the caller
    }
    return std::isfinite(out);
}

const char* op_name(ExprOp op) {
    switch (op) {
    case ExprOp::Div: return "division";
    case ExprOp::Pow: return "power";
    case ExprOp::Log: return "log";
    case ExprOp::Sqrt: return "sqrt";
    case ExprOp::Exp: return "exp";
    default: return "expression";
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Builder with constant folding
// ---------------------------------------------------------------------------

class ExprBuilder {
public:
    explicit ExprBuilder(std::vector<ExprNode>& out) : out_(out) {}

    int32_t literal(double v, uint32_t pos) {
        ExprNode n;
        n.op = ExprOp::Literal;
        n.pos = pos;
        n.value = v;
        out_.push_back(n);
        return static_cast<int32_t>(out_.size() - 1);
    }

    int32_t leaf(ExprOp op, uint32_t pos) {
        ExprNode n;
        n.op = op;
        n.pos = pos;
        out_.push_back(n);
        return static_cast<int32_t>(out_.size() - 1);
    }

    int32_t make(ExprOp op, uint32_t pos, int32_t a, int32_t b = -1, int32_t c = -1,
                 int32_t d = -1) {
        if (int32_t folded = try_fold(op, pos, a, b, c, d); folded >= 0) return folded;
        ExprNode n;
        n.op = op;
        n.pos = pos;
        n.child[0] = a;
        n.child[1] = b;
        n.child[2] = c;
        n.child[3] = d;
        out_.push_back(n);
        return static_cast<int32_t>(out_.size() - 1);
    }

    // Deep-copies a subtree from another arena into this one.
    int32_t import(const std::vector<ExprNode>& src, int32_t idx) {
        const ExprNode& n = src[static_cast<size_t>(idx)];
        ExprNode copy = n;
        for (int k = 0; k < 4; ++k) {
            if (n.child[k] >= 0) copy.child[k] = import(src, n.child[k]);
        }
        out_.push_back(copy);
        return static_cast<int32_t>(out_.size() - 1);
    }

private:
    bool is_lit(int32_t i, double& v) const {
        if (i < 0) return false;
        const ExprNode& n = out_[static_cast<size_t>(i)];
        if (n.op != ExprOp::Literal) return false;
        v = n.value;
        return true;
    }

    // Constant folding plus the 0/1 identities that keep derivative trees
    // from ballooning. Returns -1 when no fold applies.
    int32_t try_fold(ExprOp op, uint32_t pos, int32_t a, int32_t b, int32_t c, int32_t d) {
        double va = 0, vb = 0, vc = 0, vd = 0;
        const bool la = is_lit(a, va);
        const bool lb = is_lit(b, vb);

        // Full fold when every child is a finite literal and the op is in
        // domain; otherwise the node is kept so eval reports the error.
        bool all_lit = la;
        if (is_binary(op)) all_lit = la && lb;
        if (op == ExprOp::Select) all_lit = la && lb && is_lit(c, vc) && is_lit(d, vd);
        if (all_lit) {
            double args[4] = {va, vb, vc, vd};
            double r;
            if (apply_op(op, args, r)) return literal(r, pos);
            return -1;
        }

        switch (op) {
        case ExprOp::Neg:
            if (out_[static_cast<size_t>(a)].op == ExprOp::Neg)
                return out_[static_cast<size_t>(a)].child[0];
            break;
        case ExprOp::Add:
            if (la && va == 0.0) return b;
            if (lb && vb == 0.0) return a;
            break;
        case ExprOp::Sub:
            if (lb && vb == 0.0) return a;
            if (la && va == 0.0) return make(ExprOp::Neg, pos, b);
            break;
        case ExprOp::Mul:
            if (la && va == 0.0) return literal(0.0, pos);
            if (lb && vb == 0.0) return literal(0.0, pos);
            if (la && va == 1.0) return b;
            if (lb && vb == 1.0) return a;
            if (la && va == -1.0) return make(ExprOp::Neg, pos, b);
            if (lb && vb == -1.0) return make(ExprOp::Neg, pos, a);
            break;
        case ExprOp::Div:
            if (la && va == 0.0) return literal(0.0, pos);
            if (lb && vb == 1.0) return a;
            break;
        case ExprOp::Pow:
            if (lb && vb == 1.0) return a;
            if (lb && vb == 0.0) return literal(1.0, pos);
            break;
        default:
            break;
        }
        return -1;
    }

    std::vector<ExprNode>& out_;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct FuncInfo {
    const char* name;
    ExprOp op;
    int arity;
};

constexpr FuncInfo kFunctions[] = {
    {"exp", ExprOp::Exp, 1},   {"log", ExprOp::Log, 1},   {"sin", ExprOp::Sin, 1},
    {"cos", ExprOp::Cos, 1},   {"tanh", ExprOp::Tanh, 1}, {"sech", ExprOp::Sech, 1},
    {"sqrt", ExprOp::Sqrt, 1}, {"abs", ExprOp::Abs, 1},   {"min", ExprOp::Min, 2},
    {"max", ExprOp::Max, 2},   {"sel", ExprOp::Select, 4},
};

} // namespace

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : text_(text) {}

    Expr run() {
        Expr e;
        ExprBuilder b(e.nodes_);
        skip_ws();
        e.root_ = parse_sum(b);
        skip_ws();
        if (pos_ < text_.size()) fail("unexpected trailing input", "end of input or an operator");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what, const std::string& expected) const {
        size_t line = 1, col = 1;
        for (size_t i = 0; i < pos_ && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ExprParseError("syntax error at offset " + std::to_string(pos_) + " (line " +
                                 std::to_string(line) + ", column " + std::to_string(col) +
                                 "): " + what + "; expected " + expected,
                             pos_, line, col);
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                text_[pos_] == '\r'))
            ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, const char* ctx) {
        if (!accept(c)) fail(std::string("missing '") + c + "' " + ctx, std::string("'") + c + "'");
    }

    int32_t parse_sum(ExprBuilder& b) {
        int32_t lhs = parse_term(b);
        for (;;) {
            skip_ws();
            uint32_t at = static_cast<uint32_t>(pos_);
            if (accept('+')) {
                lhs = b.make(ExprOp::Add, at, lhs, parse_term(b));
            } else if (accept('-')) {
                lhs = b.make(ExprOp::Sub, at, lhs, parse_term(b));
            } else {
                return lhs;
            }
        }
    }

    int32_t parse_term(ExprBuilder& b) {
        int32_t lhs = parse_unary(b);
        for (;;) {
            skip_ws();
            uint32_t at = static_cast<uint32_t>(pos_);
            if (accept('*')) {
                lhs = b.make(ExprOp::Mul, at, lhs, parse_unary(b));
            } else if (accept('/')) {
                lhs = b.make(ExprOp::Div, at, lhs, parse_unary(b));
            } else {
                return lhs;
            }
        }
    }

    int32_t parse_unary(ExprBuilder& b) {
        skip_ws();
        uint32_t at = static_cast<uint32_t>(pos_);
        if (accept('-')) return b.make(ExprOp::Neg, at, parse_unary(b));
        return parse_power(b);
    }

    int32_t parse_power(ExprBuilder& b) {
        int32_t base = parse_atom(b);
        skip_ws();
        uint32_t at = static_cast<uint32_t>(pos_);
        if (accept('^')) {
            // right-associative; the exponent may itself carry a unary minus
            return b.make(ExprOp::Pow, at, base, parse_unary(b));
        }
        return base;
    }

    int32_t parse_atom(ExprBuilder& b) {
        skip_ws();
        if (pos_ >= text_.size())
            fail("input ended early", "a number, 't', 'y', a function name or '('");
        const char ch = text_[pos_];

        if (ch == '(') {
            ++pos_;
            int32_t inner = parse_sum(b);
            expect(')', "to close the parenthesized expression");
            return inner;
        }
        if ((ch >= '0' && ch <= '9') || ch == '.') return parse_number(b);
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') return parse_ident(b);
        fail("unexpected character", "a number, 't', 'y', a function name or '('");
    }

    int32_t parse_number(ExprBuilder& b) {
        uint32_t at = static_cast<uint32_t>(pos_);
        size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
                while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
            } else {
                pos_ = mark; // bare 'e' belongs to the next token, not this number
            }
        }
        std::string token(text_.substr(start, pos_ - start));
        if (token == ".") {
            pos_ = start;
            fail("malformed number", "digits");
        }
        return b.literal(std::strtod(token.c_str(), nullptr), at);
    }

    int32_t parse_ident(ExprBuilder& b) {
        uint32_t at = static_cast<uint32_t>(pos_);
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);

        if (name == "t") return b.leaf(ExprOp::VarT, at);
        if (name == "y") return b.leaf(ExprOp::VarY, at);

        if (name == "clamp") {
            // clamp(x, lo, hi) is sugar for min(max(x, lo), hi)
            expect('(', "after function name");
            int32_t x = parse_sum(b);
            expect(',', "between function arguments");
            int32_t lo = parse_sum(b);
            expect(',', "between function arguments");
            int32_t hi = parse_sum(b);
            expect(')', "to close the argument list");
            return b.make(ExprOp::Min, at, b.make(ExprOp::Max, at, x, lo), hi);
        }

        for (const FuncInfo& f : kFunctions) {
            if (name == f.name) {
                expect('(', "after function name");
                int32_t args[4] = {-1, -1, -1, -1};
                for (int k = 0; k < f.arity; ++k) {
                    if (k > 0) expect(',', "between function arguments");
                    args[k] = parse_sum(b);
                }
                expect(')', "to close the argument list");
                return b.make(f.op, at, args[0], args[1], args[2], args[3]);
            }
        }

        pos_ = start;
        throw ExprParseError("unknown identifier \"" + std::string(name) + "\" at offset " +
                                 std::to_string(start) +
                                 " (only t, y and the built-in functions are available; "
                                 "named constants must be substituted before parsing)",
                             start, 1, start + 1);
    }

    std::string_view text_;
    size_t pos_ = 0;
};

Expr Expr::parse(std::string_view text) { return ExprParser(text).run(); }

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

double eval_node(const std::vector<ExprNode>& nodes, int32_t idx, double t, double y) {
    const ExprNode& n = nodes[static_cast<size_t>(idx)];
    switch (n.op) {
    case ExprOp::Literal: return n.value;
    case ExprOp::VarT: return t;
    case ExprOp::VarY: return y;
    default: break;
    }
    double args[4] = {0, 0, 0, 0};
    int argc = is_unary(n.op) ? 1 : (n.op == ExprOp::Select ? 4 : 2);
    for (int k = 0; k < argc; ++k) args[k] = eval_node(nodes, n.child[k], t, y);
    double r;
    if (!apply_op(n.op, args, r)) {
        if (n.op == ExprOp::Div && args[1] == 0.0)
            throw ExprEvalError("division by zero at offset " + std::to_string(n.pos), n.pos);
        if (n.op == ExprOp::Log && args[0] <= 0.0)
            throw ExprEvalError("log of a nonpositive value at offset " + std::to_string(n.pos),
                                n.pos);
        if (n.op == ExprOp::Sqrt && args[0] < 0.0)
            throw ExprEvalError("sqrt of a negative value at offset " + std::to_string(n.pos),
                                n.pos);
        throw ExprEvalError(std::string("non-finite result in ") + op_name(n.op) +
                                " at offset " + std::to_string(n.pos),
                            n.pos);
    }
    return r;
}

} // namespace

double Expr::eval(double t, double y) const {
    if (!valid()) throw Error("eval on an empty expression");
    return eval_node(nodes_, root_, t, y);
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

namespace {

// Builds d(src[idx])/d(var) into b, returning the new root. `dup` deep-copies
// original subtrees when the derivative references them.
int32_t diff_node(const std::vector<ExprNode>& src, int32_t idx, Var var, ExprBuilder& b) {
    const ExprNode& n = src[static_cast<size_t>(idx)];
    const uint32_t at = n.pos;
    auto dup = [&](int32_t i) { return b.import(src, i); };
    auto d = [&](int32_t i) { return diff_node(src, i, var, b); };

    switch (n.op) {
    case ExprOp::Literal: return b.literal(0.0, at);
    case ExprOp::VarT: return b.literal(var == Var::T ? 1.0 : 0.0, at);
    case ExprOp::VarY: return b.literal(var == Var::Y ? 1.0 : 0.0, at);
    case ExprOp::Neg: return b.make(ExprOp::Neg, at, d(n.child[0]));
    case ExprOp::Add: return b.make(ExprOp::Add, at, d(n.child[0]), d(n.child[1]));
    case ExprOp::Sub: return b.make(ExprOp::Sub, at, d(n.child[0]), d(n.child[1]));
    case ExprOp::Mul: {
        int32_t lhs = b.make(ExprOp::Mul, at, d(n.child[0]), dup(n.child[1]));
        int32_t rhs = b.make(ExprOp::Mul, at, dup(n.child[0]), d(n.child[1]));
        return b.make(ExprOp::Add, at, lhs, rhs);
    }
    case ExprOp::Div: {
        int32_t num = b.make(ExprOp::Sub, at,
                             b.make(ExprOp::Mul, at, d(n.child[0]), dup(n.child[1])),
                             b.make(ExprOp::Mul, at, dup(n.child[0]), d(n.child[1])));
        int32_t den = b.make(ExprOp::Mul, at, dup(n.child[1]), dup(n.child[1]));
        return b.make(ExprOp::Div, at, num, den);
    }
    case ExprOp::Pow: {
        const ExprNode& e = src[static_cast<size_t>(n.child[1])];
        if (e.op == ExprOp::Literal) {
            // d(u^k) = k * u^(k-1) * u'
            int32_t u_pow = b.make(ExprOp::Pow, at, dup(n.child[0]),
                                   b.literal(e.value - 1.0, at));
            int32_t k_upow = b.make(ExprOp::Mul, at, b.literal(e.value, at), u_pow);
            return b.make(ExprOp::Mul, at, k_upow, d(n.child[0]));
        }
        // d(u^v) = u^v * (v' * log(u) + v * u' / u)
        int32_t self = b.make(ExprOp::Pow, at, dup(n.child[0]), dup(n.child[1]));
        int32_t term1 = b.make(ExprOp::Mul, at, d(n.child[1]),
                               b.make(ExprOp::Log, at, dup(n.child[0])));
        int32_t term2 = b.make(ExprOp::Div, at,
                               b.make(ExprOp::Mul, at, dup(n.child[1]), d(n.child[0])),
                               dup(n.child[0]));
        return b.make(ExprOp::Mul, at, self, b.make(ExprOp::Add, at, term1, term2));
    }
    case ExprOp::Exp:
        return b.make(ExprOp::Mul, at, b.make(ExprOp::Exp, at, dup(n.child[0])), d(n.child[0]));
    case ExprOp::Log: return b.make(ExprOp::Div, at, d(n.child[0]), dup(n.child[0]));
    case ExprOp::Sin:
        return b.make(ExprOp::Mul, at, b.make(ExprOp::Cos, at, dup(n.child[0])), d(n.child[0]));
    case ExprOp::Cos:
        return b.make(ExprOp::Neg, at,
                      b.make(ExprOp::Mul, at, b.make(ExprOp::Sin, at, dup(n.child[0])),
                             d(n.child[0])));
    case ExprOp::Tanh: {
        int32_t sech2 = b.make(ExprOp::Pow, at, b.make(ExprOp::Sech, at, dup(n.child[0])),
                               b.literal(2.0, at));
        return b.make(ExprOp::Mul, at, sech2, d(n.child[0]));
    }
    case ExprOp::Sech: {
        int32_t st = b.make(ExprOp::Mul, at, b.make(ExprOp::Sech, at, dup(n.child[0])),
                            b.make(ExprOp::Tanh, at, dup(n.child[0])));
        return b.make(ExprOp::Neg, at, b.make(ExprOp::Mul, at, st, d(n.child[0])));
    }
    case ExprOp::Sqrt: {
        int32_t den = b.make(ExprOp::Mul, at, b.literal(2.0, at),
                             b.make(ExprOp::Sqrt, at, dup(n.child[0])));
        return b.make(ExprOp::Div, at, d(n.child[0]), den);
    }
    case ExprOp::Abs:
        // 0 <= u -> u' ; else -u'
        return b.make(ExprOp::Select, at, b.literal(0.0, at), dup(n.child[0]), d(n.child[0]),
                      b.make(ExprOp::Neg, at, d(n.child[0])));
    case ExprOp::Min:
        return b.make(ExprOp::Select, at, dup(n.child[0]), dup(n.child[1]), d(n.child[0]),
                      d(n.child[1]));
    case ExprOp::Max:
        return b.make(ExprOp::Select, at, dup(n.child[1]), dup(n.child[0]), d(n.child[0]),
                      d(n.child[1]));
    case ExprOp::Select:
        return b.make(ExprOp::Select, at, dup(n.child[0]), dup(n.child[1]), d(n.child[2]),
                      d(n.child[3]));
    }
    throw Error("unreachable expression op");
}

} // namespace

Expr Expr::derivative(Var v) const {
    if (!valid()) throw Error("derivative of an empty expression");
    Expr out;
    ExprBuilder b(out.nodes_);
    out.root_ = diff_node(nodes_, root_, v, b);
    return out;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

void print_node(const std::vector<ExprNode>& nodes, int32_t idx, std::string& out) {
    const ExprNode& n = nodes[static_cast<size_t>(idx)];
    switch (n.op) {
    case ExprOp::Literal: out += format17(n.value); return;
    case ExprOp::VarT: out += 't'; return;
    case ExprOp::VarY: out += 'y'; return;
    case ExprOp::Neg:
        out += "(-";
        print_node(nodes, n.child[0], out);
        out += ')';
        return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div:
    case ExprOp::Pow: {
        const char* sym = n.op == ExprOp::Add   ? " + "
                          : n.op == ExprOp::Sub ? " - "
                          : n.op == ExprOp::Mul ? " * "
                          : n.op == ExprOp::Div ? " / "
                                                : " ^ ";
        out += '(';
        print_node(nodes, n.child[0], out);
        out += sym;
        print_node(nodes, n.child[1], out);
        out += ')';
        return;
    }
    default: {
        const char* name = nullptr;
        int arity = 1;
        switch (n.op) {
        case ExprOp::Exp: name = "exp"; break;
        case ExprOp::Log: name = "log"; break;
        case ExprOp::Sin: name = "sin"; break;
        case ExprOp::Cos: name = "cos"; break;
        case ExprOp::Tanh: name = "tanh"; break;
        case ExprOp::Sech: name = "sech"; break;
        case ExprOp::Sqrt: name = "sqrt"; break;
        case ExprOp::Abs: name = "abs"; break;
        case ExprOp::Min:
            name = "min";
            arity = 2;
            break;
        case ExprOp::Max:
            name = "max";
            arity = 2;
            break;
        case ExprOp::Select:
            name = "sel";
            arity = 4;
            break;
        default: throw Error("unreachable expression op in print");
        }
        out += name;
        out += '(';
        for (int k = 0; k < arity; ++k) {
            if (k > 0) out += ", ";
            print_node(nodes, n.child[k], out);
        }
        out += ')';
        return;
    }
    }
}

} // namespace

std::string Expr::str() const {
    if (!valid()) return "";
    std::string out;
    print_node(nodes_, root_, out);
    return out;
}

// ---------------------------------------------------------------------------
// Introspection
// ---------------------------------------------------------------------------

bool Expr::depends_on(Var v) const {
    const ExprOp target = v == Var::T ? ExprOp::VarT : ExprOp::VarY;
    for (const ExprNode& n : nodes_)
        if (n.op == target) return true;
    return false;
}

namespace {

bool same_node(const std::vector<ExprNode>& a, int32_t ia, const std::vector<ExprNode>& b,
               int32_t ib) {
    if ((ia < 0) != (ib < 0)) return false;
    if (ia < 0) return true;
    const ExprNode& na = a[static_cast<size_t>(ia)];
    const ExprNode& nb = b[static_cast<size_t>(ib)];
    if (na.op != nb.op) return false;
    if (na.op == ExprOp::Literal)
        return std::memcmp(&na.value, &nb.value, sizeof(double)) == 0;
    for (int k = 0; k < 4; ++k)
        if (!same_node(a, na.child[k], b, nb.child[k])) return false;
    return true;
}

} // namespace

bool Expr::same_tree(const Expr& other) const {
    return same_node(nodes_, root_, other.nodes_, other.root_);
}

} // namespace scl
