#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace featforge::featscript {

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

enum class BinaryOp { add, sub, mul, div, lt, le, gt, ge, eq, ne, logical_and, logical_or };
enum class UnaryOp { negate, logical_not };

struct NumberLit {
    double value = 0.0;
};

// Reference to a let-bound name. Schema variables never appear here; they
// occur only in the variable slot of a ToolCall.
struct VarRef {
    std::string name;
};

struct Let {
    std::string name;
    ExprPtr value;
    ExprPtr body;
};

struct If {
    ExprPtr condition;
    ExprPtr then_branch;
    ExprPtr else_branch;
};

struct Unary {
    UnaryOp op;
    ExprPtr operand;
};

struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

// Builtin function application (aggregations, scalar functions, horizon).
struct Call {
    std::string function;
    std::vector<ExprPtr> args;
};

// Temporal tool application; the record is implicit, the first syntactic
// argument names a schema variable.
struct ToolCall {
    std::string tool;
    std::string variable;
    std::vector<ExprPtr> args;  // arguments after the variable name
};

struct Expr {
    std::variant<NumberLit, VarRef, Let, If, Unary, Binary, Call, ToolCall> node;
    int line = 0;
    int column = 0;
};

ExprPtr clone_expr(const Expr& e);

// Structural equality; source positions are ignored, number literals
// compare by exact value.
bool ast_equal(const Expr& a, const Expr& b);

const char* binary_op_token(BinaryOp op);
const char* unary_op_token(UnaryOp op);

}  // namespace featforge::featscript
