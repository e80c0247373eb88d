#include "featforge/featscript.hpp"
#include "fs_builtins.hpp"

#include <optional>
#include <sstream>

namespace featforge::featscript {

namespace {

struct Checker {
    const cohort::Schema& schema;
    const std::set<std::string>& allowed;
    std::vector<ValidationError>& errors;
    std::vector<std::pair<std::string, Kind>> env;

    void report(ValidationErrorKind kind, const std::string& node, const Expr& at, std::string message) {
        errors.push_back({kind, node, at.line, at.column, std::move(message)});
    }

    std::optional<Kind> lookup(const std::string& name) const {
        for (auto it = env.rbegin(); it != env.rend(); ++it)
            if (it->first == name) return it->second;
        return std::nullopt;
    }

    bool satisfies(Kind kind, ArgConstraint constraint) const {
        switch (constraint) {
            case ArgConstraint::scalar: return kind == Kind::scalar;
            case ArgConstraint::boolean: return kind == Kind::boolean;
            case ArgConstraint::series: return kind == Kind::series;
            case ArgConstraint::scalar_or_boolean: return kind != Kind::series;
        }
        return false;
    }

    // Returns nullopt when the subtree already produced an error; parents
    // then skip their own kind checks to avoid cascading noise.
    std::optional<Kind> check(const Expr& e) {
        return std::visit(
            [&](const auto& node) -> std::optional<Kind> {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, NumberLit>) {
                    return Kind::scalar;
                } else if constexpr (std::is_same_v<T, VarRef>) {
                    auto kind = lookup(node.name);
                    if (!kind) {
                        std::string hint = schema.has_variable(node.name)
                                               ? "; schema variables may only appear inside tool calls"
                                               : "";
                        report(ValidationErrorKind::unknown_variable, node.name, e,
                               "unknown identifier '" + node.name + "'" + hint);
                    }
                    return kind;
                } else if constexpr (std::is_same_v<T, Let>) {
                    auto value_kind = check(*node.value);
                    if (!value_kind) return std::nullopt;
                    env.emplace_back(node.name, *value_kind);
                    auto body_kind = check(*node.body);
                    env.pop_back();
                    return body_kind;
                } else if constexpr (std::is_same_v<T, If>) {
                    auto cond = check(*node.condition);
                    if (cond && *cond != Kind::boolean)
                        report(ValidationErrorKind::kind_mismatch, "if", e,
                               "if condition must be boolean, got " + std::string(kind_name(*cond)));
                    auto then_kind = check(*node.then_branch);
                    auto else_kind = check(*node.else_branch);
                    if (!then_kind || !else_kind) return std::nullopt;
                    if (*then_kind != *else_kind) {
                        report(ValidationErrorKind::kind_mismatch, "if", e,
                               std::string("if branches disagree: ") + kind_name(*then_kind) + " vs " +
                                   kind_name(*else_kind));
                        return std::nullopt;
                    }
                    return then_kind;
                } else if constexpr (std::is_same_v<T, Unary>) {
                    auto operand = check(*node.operand);
                    if (!operand) return std::nullopt;
                    if (node.op == UnaryOp::negate) {
                        if (*operand != Kind::scalar) {
                            report(ValidationErrorKind::kind_mismatch, "-", e,
                                   "unary '-' needs a scalar, got " + std::string(kind_name(*operand)));
                            return std::nullopt;
                        }
                        return Kind::scalar;
                    }
                    if (*operand != Kind::boolean) {
                        report(ValidationErrorKind::kind_mismatch, "not", e,
                               "'not' needs a boolean, got " + std::string(kind_name(*operand)));
                        return std::nullopt;
                    }
                    return Kind::boolean;
                } else if constexpr (std::is_same_v<T, Binary>) {
                    auto lhs = check(*node.lhs);
                    auto rhs = check(*node.rhs);
                    if (!lhs || !rhs) return std::nullopt;
                    const char* token = binary_op_token(node.op);
                    switch (node.op) {
                        case BinaryOp::add:
                        case BinaryOp::sub:
                        case BinaryOp::mul:
                        case BinaryOp::div:
                            if (*lhs != Kind::scalar || *rhs != Kind::scalar) {
                                report(ValidationErrorKind::kind_mismatch, token, e,
                                       std::string("'") + token + "' needs scalar operands, got " +
                                           kind_name(*lhs) + " and " + kind_name(*rhs));
                                return std::nullopt;
                            }
                            return Kind::scalar;
                        case BinaryOp::lt:
                        case BinaryOp::le:
                        case BinaryOp::gt:
                        case BinaryOp::ge:
                        case BinaryOp::eq:
                        case BinaryOp::ne:
                            if (*lhs != Kind::scalar || *rhs != Kind::scalar) {
                                report(ValidationErrorKind::kind_mismatch, token, e,
                                       std::string("'") + token + "' compares scalars, got " +
                                           kind_name(*lhs) + " and " + kind_name(*rhs));
                                return std::nullopt;
                            }
                            return Kind::boolean;
                        case BinaryOp::logical_and:
                        case BinaryOp::logical_or:
                            if (*lhs != Kind::boolean || *rhs != Kind::boolean) {
                                report(ValidationErrorKind::kind_mismatch, token, e,
                                       std::string("'") + token + "' needs boolean operands, got " +
                                           kind_name(*lhs) + " and " + kind_name(*rhs));
                                return std::nullopt;
                            }
                            return Kind::boolean;
                    }
                    return std::nullopt;
                } else if constexpr (std::is_same_v<T, Call>) {
                    const BuiltinSpec* spec = find_builtin(node.function);
                    if (!spec || spec->is_tool) {
                        if (spec && spec->is_tool) {
                            // parser only builds Call for non-tools; defensive
                            report(ValidationErrorKind::kind_mismatch, node.function, e,
                                   "tool used without a variable argument");
                        } else {
                            report(ValidationErrorKind::unknown_function, node.function, e,
                                   "unknown function '" + node.function + "'");
                        }
                        for (const auto& a : node.args) check(*a);
                        return std::nullopt;
                    }
                    if (node.args.size() != spec->args.size()) {
                        report(ValidationErrorKind::arity_mismatch, node.function, e,
                               node.function + " takes " + std::to_string(spec->args.size()) +
                                   " argument(s), got " + std::to_string(node.args.size()));
                        for (const auto& a : node.args) check(*a);
                        return std::nullopt;
                    }
                    bool poisoned = false;
                    for (std::size_t i = 0; i < node.args.size(); ++i) {
                        auto kind = check(*node.args[i]);
                        if (!kind) {
                            poisoned = true;
                            continue;
                        }
                        if (!satisfies(*kind, spec->args[i])) {
                            report(ValidationErrorKind::kind_mismatch, node.function, e,
                                   "argument " + std::to_string(i + 1) + " of " + node.function +
                                       " has kind " + kind_name(*kind));
                            poisoned = true;
                        }
                    }
                    if (poisoned) return std::nullopt;
                    return spec->result;
                } else if constexpr (std::is_same_v<T, ToolCall>) {
                    const BuiltinSpec* spec = find_builtin(node.tool);
                    if (!spec || !spec->is_tool) {
                        report(ValidationErrorKind::unknown_function, node.tool, e,
                               "unknown tool '" + node.tool + "'");
                        for (const auto& a : node.args) check(*a);
                        return std::nullopt;
                    }
                    if (!schema.has_variable(node.variable)) {
                        report(ValidationErrorKind::unknown_variable, node.variable, e,
                               "variable '" + node.variable + "' is not in the schema");
                    } else if (!allowed.count(node.variable)) {
                        report(ValidationErrorKind::unknown_variable, node.variable, e,
                               "variable '" + node.variable + "' is not allowed for this program");
                    }
                    if (node.args.size() != spec->args.size()) {
                        report(ValidationErrorKind::arity_mismatch, node.tool, e,
                               node.tool + " takes a variable plus " + std::to_string(spec->args.size()) +
                                   " argument(s), got " + std::to_string(node.args.size()));
                        for (const auto& a : node.args) check(*a);
                        return std::nullopt;
                    }
                    bool poisoned = !schema.has_variable(node.variable) || !allowed.count(node.variable);
                    for (std::size_t i = 0; i < node.args.size(); ++i) {
                        auto kind = check(*node.args[i]);
                        if (!kind) {
                            poisoned = true;
                            continue;
                        }
                        if (!satisfies(*kind, spec->args[i])) {
                            report(ValidationErrorKind::kind_mismatch, node.tool, e,
                                   "argument " + std::to_string(i + 2) + " of " + node.tool +
                                       " has kind " + kind_name(*kind));
                            poisoned = true;
                        }
                    }
                    if (poisoned) return std::nullopt;
                    return spec->result;
                }
            },
            e.node);
    }
};

}  // namespace

ValidationResult validate(const Program& program, const cohort::Schema& schema,
                          const std::set<std::string>& allowed_variables) {
    ValidationResult result;
    if (!program.ast) {
        result.errors.push_back({ValidationErrorKind::non_scalar_result, "<empty>", 0, 0, "program has no ast"});
        return result;
    }
    Checker checker{schema, allowed_variables, result.errors, {}};
    auto kind = checker.check(*program.ast);
    if (kind && *kind != Kind::scalar) {
        result.errors.push_back({ValidationErrorKind::non_scalar_result, "<program>", program.ast->line,
                                 program.ast->column,
                                 std::string("program result must be scalar-or-NA, got ") + kind_name(*kind)});
    }
    return result;
}

std::string ValidationResult::summary() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (i) out << "; ";
        out << errors[i].message << " (line " << errors[i].line << ")";
    }
    return out.str();
}

}  // namespace featforge::featscript
