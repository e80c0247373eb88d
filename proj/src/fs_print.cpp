#include "featforge/featscript.hpp"
#include "featforge/num.hpp"
#include "fs_builtins.hpp"

#include <cctype>

namespace featforge::featscript {

namespace {

// Precedence levels: let/if 0, or 1, and 2, not 3, comparison 4,
// additive 5, multiplicative 6, unary minus 7, primary 8.
int binary_precedence(BinaryOp op) {
    switch (op) {
        case BinaryOp::logical_or: return 1;
        case BinaryOp::logical_and: return 2;
        case BinaryOp::lt:
        case BinaryOp::le:
        case BinaryOp::gt:
        case BinaryOp::ge:
        case BinaryOp::eq:
        case BinaryOp::ne: return 4;
        case BinaryOp::add:
        case BinaryOp::sub: return 5;
        case BinaryOp::mul:
        case BinaryOp::div: return 6;
    }
    return 8;
}

bool is_bare_variable_name(const std::string& name) {
    if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
        return false;
    for (char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    static const char* keywords[] = {"let", "in", "if", "then", "else", "and", "or", "not"};
    for (const char* kw : keywords)
        if (name == kw) return false;
    return true;
}

std::string quote_variable(const std::string& name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void print(const Expr& e, int parent_prec, bool right_operand, std::string& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, NumberLit>) {
                out += format_double(node.value);
            } else if constexpr (std::is_same_v<T, VarRef>) {
                out += node.name;
            } else if constexpr (std::is_same_v<T, Let>) {
                bool need = parent_prec > 0;
                if (need) out.push_back('(');
                out += "let ";
                out += node.name;
                out += " = ";
                print(*node.value, 0, false, out);
                out += " in ";
                print(*node.body, 0, false, out);
                if (need) out.push_back(')');
            } else if constexpr (std::is_same_v<T, If>) {
                bool need = parent_prec > 0;
                if (need) out.push_back('(');
                out += "if ";
                print(*node.condition, 0, false, out);
                out += " then ";
                print(*node.then_branch, 0, false, out);
                out += " else ";
                print(*node.else_branch, 0, false, out);
                if (need) out.push_back(')');
            } else if constexpr (std::is_same_v<T, Unary>) {
                int prec = node.op == UnaryOp::negate ? 7 : 3;
                bool need = prec < parent_prec;
                if (need) out.push_back('(');
                out += unary_op_token(node.op);
                if (node.op == UnaryOp::logical_not) out.push_back(' ');
                print(*node.operand, prec, false, out);
                if (need) out.push_back(')');
            } else if constexpr (std::is_same_v<T, Binary>) {
                int prec = binary_precedence(node.op);
                bool need = prec < parent_prec || (prec == parent_prec && right_operand);
                if (need) out.push_back('(');
                // comparisons are non-associative, so comparison children are
                // always parenthesized (ctx one level up)
                int child_ctx = prec == 4 ? prec + 1 : prec;
                print(*node.lhs, child_ctx, false, out);
                out.push_back(' ');
                out += binary_op_token(node.op);
                out.push_back(' ');
                print(*node.rhs, child_ctx, true, out);
                if (need) out.push_back(')');
            } else if constexpr (std::is_same_v<T, Call>) {
                out += node.function;
                out.push_back('(');
                for (std::size_t i = 0; i < node.args.size(); ++i) {
                    if (i) out += ", ";
                    print(*node.args[i], 0, false, out);
                }
                out.push_back(')');
            } else if constexpr (std::is_same_v<T, ToolCall>) {
                out += node.tool;
                out.push_back('(');
                out += is_bare_variable_name(node.variable) ? node.variable
                                                            : quote_variable(node.variable);
                for (const auto& a : node.args) {
                    out += ", ";
                    print(*a, 0, false, out);
                }
                out.push_back(')');
            }
        },
        e.node);
}

}  // namespace

std::string pretty_print(const Expr& root) {
    std::string out;
    print(root, 0, false, out);
    return out;
}

std::string pretty_print(const Program& program) { return pretty_print(*program.ast); }

std::string variable_token(const std::string& name) {
    return is_bare_variable_name(name) ? name : quote_variable(name);
}

}  // namespace featforge::featscript
