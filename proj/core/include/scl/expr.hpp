#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scl/common.hpp"

namespace scl {

/// Variables of the expression language. Coefficient functions are functions
/// of time t and state y only; named constants are substituted textually by
/// the config layer before parsing.
enum class Var : uint8_t { T, Y };

enum class ExprOp : uint8_t {
    Literal,
    VarT,
    VarY,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Sech,
    Sqrt,
    Abs,
    Min,
    Max,
    // sel(a, b, p, q) evaluates p if a <= b, else q. Never produced by user
    // input in practice; it carries the branch choice of piecewise
    // derivatives (abs/min/max) so derivative trees stay printable.
    Select,
};

struct ExprNode {
    ExprOp op = ExprOp::Literal;
    uint32_t pos = 0; // byte offset into the source text, for diagnostics
    int32_t child[4] = {-1, -1, -1, -1};
    double value = 0.0; // Literal payload
};

class ExprParseError : public Error {
public:
    ExprParseError(const std::string& msg, size_t offset, size_t line, size_t column)
        : Error(msg), offset(offset), line(line), column(column) {}
    size_t offset;
    size_t line;
    size_t column;
};

class ExprEvalError : public Error {
public:
    ExprEvalError(const std::string& msg, size_t offset) : Error(msg), offset(offset) {}
    size_t offset;
};

/// Immutable arithmetic expression over (t, y), stored as a flat node arena.
/// Copying is cheap (plain vectors); evaluation is reentrant, so a single
/// Expr may be evaluated from any number of threads concurrently.
class Expr {
public:
    Expr() = default;

    /// Parse an expression. Throws ExprParseError with byte offset, line,
    /// column and the expected-token set on malformed input.
    static Expr parse(std::string_view text);

    bool valid() const { return root_ >= 0; }

    /// Evaluate at (t, y). Throws ExprEvalError on domain errors (log of a
    /// nonpositive value, division by zero, non-finite result from finite
    /// inputs), naming the offending node's source offset.
    double eval(double t, double y) const;
    double operator()(double t, double y) const { return eval(t, y); }

    /// Exact symbolic derivative. Piecewise primitives (abs/min/max) are
    /// differentiated branchwise; at a kink the branch that wins the
    /// function's own tie-break (first argument for min/max, the
    /// nonnegative branch for abs) supplies the derivative.
    Expr derivative(Var v) const;

    /// Print to a canonical parenthesized form. parse(str()) reproduces the
    /// same tree.
    std::string str() const;

    bool depends_on(Var v) const;

    /// Structural equality (same shape, ops and bit-identical literals).
    bool same_tree(const Expr& other) const;

    const std::vector<ExprNode>& nodes() const { return nodes_; }
    int32_t root() const { return root_; }

private:
    std::vector<ExprNode> nodes_;
    int32_t root_ = -1;

    friend class ExprBuilder;
    friend class ExprParser;
};

inline Expr parse_expr(std::string_view text) { return Expr::parse(text); }
inline Expr differentiate(const Expr& e, Var v) { return e.derivative(v); }
inline std::string to_string(const Expr& e) { return e.str(); }

} // namespace scl
