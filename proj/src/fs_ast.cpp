#include "featforge/featscript_ast.hpp"

namespace featforge::featscript {

ExprPtr clone_expr(const Expr& e) {
    Expr out;
    out.line = e.line;
    out.column = e.column;
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, NumberLit> || std::is_same_v<T, VarRef>) {
                out.node = node;
            } else if constexpr (std::is_same_v<T, Let>) {
                out.node = Let{node.name, clone_expr(*node.value), clone_expr(*node.body)};
            } else if constexpr (std::is_same_v<T, If>) {
                out.node = If{clone_expr(*node.condition), clone_expr(*node.then_branch),
                              clone_expr(*node.else_branch)};
            } else if constexpr (std::is_same_v<T, Unary>) {
                out.node = Unary{node.op, clone_expr(*node.operand)};
            } else if constexpr (std::is_same_v<T, Binary>) {
                out.node = Binary{node.op, clone_expr(*node.lhs), clone_expr(*node.rhs)};
            } else if constexpr (std::is_same_v<T, Call>) {
                Call call{node.function, {}};
                call.args.reserve(node.args.size());
                for (const auto& a : node.args) call.args.push_back(clone_expr(*a));
                out.node = std::move(call);
            } else if constexpr (std::is_same_v<T, ToolCall>) {
                ToolCall call{node.tool, node.variable, {}};
                call.args.reserve(node.args.size());
                for (const auto& a : node.args) call.args.push_back(clone_expr(*a));
                out.node = std::move(call);
            }
        },
        e.node);
    return std::make_unique<Expr>(std::move(out));
}

bool ast_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& lhs) -> bool {
            using T = std::decay_t<decltype(lhs)>;
            const auto& rhs = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, NumberLit>) {
                return lhs.value == rhs.value;
            } else if constexpr (std::is_same_v<T, VarRef>) {
                return lhs.name == rhs.name;
            } else if constexpr (std::is_same_v<T, Let>) {
                return lhs.name == rhs.name && ast_equal(*lhs.value, *rhs.value) &&
                       ast_equal(*lhs.body, *rhs.body);
            } else if constexpr (std::is_same_v<T, If>) {
                return ast_equal(*lhs.condition, *rhs.condition) &&
                       ast_equal(*lhs.then_branch, *rhs.then_branch) &&
                       ast_equal(*lhs.else_branch, *rhs.else_branch);
            } else if constexpr (std::is_same_v<T, Unary>) {
                return lhs.op == rhs.op && ast_equal(*lhs.operand, *rhs.operand);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return lhs.op == rhs.op && ast_equal(*lhs.lhs, *rhs.lhs) && ast_equal(*lhs.rhs, *rhs.rhs);
            } else if constexpr (std::is_same_v<T, Call>) {
                if (lhs.function != rhs.function || lhs.args.size() != rhs.args.size()) return false;
                for (std::size_t i = 0; i < lhs.args.size(); ++i)
                    if (!ast_equal(*lhs.args[i], *rhs.args[i])) return false;
                return true;
            } else if constexpr (std::is_same_v<T, ToolCall>) {
                if (lhs.tool != rhs.tool || lhs.variable != rhs.variable ||
                    lhs.args.size() != rhs.args.size())
                    return false;
                for (std::size_t i = 0; i < lhs.args.size(); ++i)
                    if (!ast_equal(*lhs.args[i], *rhs.args[i])) return false;
                return true;
            }
        },
        a.node);
}

const char* binary_op_token(BinaryOp op) {
    switch (op) {
        case BinaryOp::add: return "+";
        case BinaryOp::sub: return "-";
        case BinaryOp::mul: return "*";
        case BinaryOp::div: return "/";
        case BinaryOp::lt: return "<";
        case BinaryOp::le: return "<=";
        case BinaryOp::gt: return ">";
        case BinaryOp::ge: return ">=";
        case BinaryOp::eq: return "==";
        case BinaryOp::ne: return "!=";
        case BinaryOp::logical_and: return "and";
        case BinaryOp::logical_or: return "or";
    }
    return "?";
}

const char* unary_op_token(UnaryOp op) {
    switch (op) {
        case UnaryOp::negate: return "-";
        case UnaryOp::logical_not: return "not";
    }
    return "?";
}

}  // namespace featforge::featscript
