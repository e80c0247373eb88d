#pragma once

#include "featforge/cohort.hpp"
#include "featforge/featscript_ast.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace featforge::featscript {

// A parsed feature program. Total, sandboxed: no loops, no recursion, no
// I/O, no access to anything beyond the one record it is evaluated on.
struct Program {
    std::string source;
    ExprPtr ast;
    std::set<std::string> declared_variables;  // schema names referenced by tool calls

    Program clone() const;
};

struct SyntaxError {
    int line = 0;
    int column = 0;
    std::string message;
};

struct ParseResult {
    std::optional<Program> program;
    std::optional<SyntaxError> error;
    bool ok() const { return program.has_value(); }
};

ParseResult parse(std::string_view source);

// Canonical source form: normalized whitespace, minimal parenthesization,
// shortest round-trip number formatting. parse(pretty_print(p)) yields an
// ast identical to p's.
std::string pretty_print(const Expr& root);
std::string pretty_print(const Program& program);

enum class ValidationErrorKind {
    unknown_variable,
    unknown_function,
    arity_mismatch,
    kind_mismatch,
    non_scalar_result,
};

struct ValidationError {
    ValidationErrorKind kind;
    std::string node;  // offending name or operator token
    int line = 0;
    int column = 0;
    std::string message;
};

struct ValidationResult {
    std::vector<ValidationError> errors;
    bool ok() const { return errors.empty(); }
    std::string summary() const;
};

// Static checks: referenced variables lie in allowed_variables and in the
// schema, builtin arity and argument kinds match, and the program's result
// kind is scalar-or-NA.
ValidationResult validate(const Program& program, const cohort::Schema& schema,
                          const std::set<std::string>& allowed_variables);

struct EvalBudget {
    std::int64_t max_steps = 100000;
    std::int64_t max_series_ops = 10000000;
};

enum class RuntimeErrorKind {
    division_by_zero,
    invalid_window,
    log_nonpositive,
    budget_exhausted,
    non_finite_result,
};

struct RuntimeFault {
    RuntimeErrorKind kind;
    std::string node;
    int line = 0;
    int column = 0;
    std::string message;
};

struct EvalOutcome {
    enum class Kind { scalar, na, error };
    Kind kind = Kind::na;
    double value = 0.0;
    std::optional<RuntimeFault> fault;

    bool is_scalar() const { return kind == Kind::scalar; }
    bool is_na() const { return kind == Kind::na; }
    bool is_error() const { return kind == Kind::error; }

    static EvalOutcome make_scalar(double v) { return {Kind::scalar, v, std::nullopt}; }
    static EvalOutcome make_na() { return {Kind::na, 0.0, std::nullopt}; }
    static EvalOutcome make_error(RuntimeFault f) { return {Kind::error, 0.0, std::move(f)}; }
};

// Deterministic bounded evaluation of a validated program against one
// record. NA is absorbing through every operator and builtin; is_na,
// coalesce and the if-condition are the only NA-aware forms.
EvalOutcome evaluate(const Program& program, const cohort::PatientRecord& record,
                     const EvalBudget& budget = {});

extern const char* const kGrammarVersion;

// Grammar and semantics reference embedded into prompts and recorded in run
// manifests.
std::string grammar_summary();

// Renders a schema variable name as it appears in source text: bare when
// identifier-shaped and not a keyword, double-quoted otherwise.
std::string variable_token(const std::string& name);

}  // namespace featforge::featscript
