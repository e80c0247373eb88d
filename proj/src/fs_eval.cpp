#include "featforge/featscript.hpp"
#include "featforge/num.hpp"
#include "featforge/toolkit.hpp"
#include "fs_builtins.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace featforge::featscript {

namespace {

using cohort::Observation;

struct Value {
    enum class Tag { scalar, boolean, na, series } tag = Tag::na;
    double num = 0.0;
    bool truth = false;
    std::vector<Observation> series;

    static Value scalar(double v) { return {Tag::scalar, v, false, {}}; }
    static Value boolean(bool b) { return {Tag::boolean, 0.0, b, {}}; }
    static Value na() { return {Tag::na, 0.0, false, {}}; }
    static Value from_series(std::vector<Observation> s) { return {Tag::series, 0.0, false, std::move(s)}; }
    bool is_na() const { return tag == Tag::na; }
};

struct EvalAbort {
    RuntimeFault fault;
};

struct Evaluator {
    const cohort::PatientRecord& record;
    const EvalBudget& budget;
    std::int64_t steps = 0;
    std::int64_t series_ops = 0;
    std::vector<std::pair<std::string, Value>> env;

    [[noreturn]] void fault(RuntimeErrorKind kind, const Expr& at, std::string node, std::string message) {
        throw EvalAbort{RuntimeFault{kind, std::move(node), at.line, at.column, std::move(message)}};
    }

    void charge_step(const Expr& at) {
        if (++steps > budget.max_steps)
            fault(RuntimeErrorKind::budget_exhausted, at, "<budget>", "evaluation step budget exhausted");
    }

    void charge_series(const Expr& at, std::size_t n) {
        series_ops += static_cast<std::int64_t>(n) + 1;
        if (series_ops > budget.max_series_ops)
            fault(RuntimeErrorKind::budget_exhausted, at, "<budget>", "series operation budget exhausted");
    }

    double require_finite(double v, const Expr& at, const std::string& node) {
        if (!std::isfinite(v))
            fault(RuntimeErrorKind::non_finite_result, at, node, "operation produced a non-finite value");
        return v;
    }

    const Value* lookup(const std::string& name) const {
        for (auto it = env.rbegin(); it != env.rend(); ++it)
            if (it->first == name) return &it->second;
        return nullptr;
    }

    Value eval(const Expr& e) {
        charge_step(e);
        return std::visit([&](const auto& node) -> Value { return eval_node(e, node); }, e.node);
    }

    Value eval_node(const Expr&, const NumberLit& node) { return Value::scalar(node.value); }

    Value eval_node(const Expr& e, const VarRef& node) {
        const Value* bound = lookup(node.name);
        if (!bound) throw std::invalid_argument("evaluate: unbound identifier '" + node.name + "' (program not validated)");
        (void)e;
        return *bound;
    }

    Value eval_node(const Expr&, const Let& node) {
        Value value = eval(*node.value);
        env.emplace_back(node.name, std::move(value));
        Value result = eval(*node.body);
        env.pop_back();
        return result;
    }

    Value eval_node(const Expr&, const If& node) {
        Value cond = eval(*node.condition);
        if (cond.is_na()) return Value::na();
        return cond.truth ? eval(*node.then_branch) : eval(*node.else_branch);
    }

    Value eval_node(const Expr&, const Unary& node) {
        Value operand = eval(*node.operand);
        if (operand.is_na()) return Value::na();
        if (node.op == UnaryOp::negate) return Value::scalar(-operand.num);
        return Value::boolean(!operand.truth);
    }

    Value eval_node(const Expr& e, const Binary& node) {
        Value lhs = eval(*node.lhs);
        Value rhs = eval(*node.rhs);
        if (lhs.is_na() || rhs.is_na()) return Value::na();
        const char* token = binary_op_token(node.op);
        switch (node.op) {
            case BinaryOp::add: return Value::scalar(require_finite(lhs.num + rhs.num, e, token));
            case BinaryOp::sub: return Value::scalar(require_finite(lhs.num - rhs.num, e, token));
            case BinaryOp::mul: return Value::scalar(require_finite(lhs.num * rhs.num, e, token));
            case BinaryOp::div:
                if (rhs.num == 0.0)
                    fault(RuntimeErrorKind::division_by_zero, e, token, "division by zero");
                return Value::scalar(require_finite(lhs.num / rhs.num, e, token));
            case BinaryOp::lt: return Value::boolean(lhs.num < rhs.num);
            case BinaryOp::le: return Value::boolean(lhs.num <= rhs.num);
            case BinaryOp::gt: return Value::boolean(lhs.num > rhs.num);
            case BinaryOp::ge: return Value::boolean(lhs.num >= rhs.num);
            case BinaryOp::eq: return Value::boolean(lhs.num == rhs.num);
            case BinaryOp::ne: return Value::boolean(lhs.num != rhs.num);
            case BinaryOp::logical_and: return Value::boolean(lhs.truth && rhs.truth);
            case BinaryOp::logical_or: return Value::boolean(lhs.truth || rhs.truth);
        }
        throw std::logic_error("unreachable binary op");
    }

    Value eval_node(const Expr& e, const ToolCall& node) {
        std::vector<Value> args;
        args.reserve(node.args.size());
        bool any_na = false;
        for (const auto& a : node.args) {
            args.push_back(eval(*a));
            any_na = any_na || args.back().is_na();
        }
        if (any_na) return Value::na();

        if (node.tool == "get_all_measurements") {
            auto view = toolkit::get_all_measurements(record, node.variable);
            charge_series(e, view.size());
            return Value::from_series({view.begin(), view.end()});
        }
        if (node.tool == "get_in_window") {
            double t_start = args[0].num, t_end = args[1].num;
            if (t_start > t_end)
                fault(RuntimeErrorKind::invalid_window, e, node.tool,
                      "invalid window: t_start " + format_double(t_start) + " > t_end " +
                          format_double(t_end));
            auto view = toolkit::get_in_window(record, node.variable, t_start, t_end);
            charge_series(e, view.size());
            return Value::from_series({view.begin(), view.end()});
        }
        if (node.tool == "last_value_before") {
            charge_series(e, 0);
            auto v = toolkit::last_value_before(record, node.variable, args[0].num);
            return v ? Value::scalar(*v) : Value::na();
        }
        if (node.tool == "count_measurements") {
            charge_series(e, 0);
            return Value::scalar(toolkit::count_measurements(record, node.variable));
        }
        if (node.tool == "time_since_last") {
            charge_series(e, 0);
            auto v = toolkit::time_since_last(record, node.variable, args[0].num);
            return v ? Value::scalar(*v) : Value::na();
        }
        throw std::invalid_argument("evaluate: unknown tool '" + node.tool + "' (program not validated)");
    }

    Value eval_node(const Expr& e, const Call& node) {
        std::vector<Value> args;
        args.reserve(node.args.size());
        for (const auto& a : node.args) args.push_back(eval(*a));

        if (node.function == "is_na") return Value::boolean(args[0].is_na());
        if (node.function == "coalesce") return args[0].is_na() ? args[1] : args[0];
        if (node.function == "horizon") return Value::scalar(record.horizon);

        for (const auto& a : args)
            if (a.is_na()) return Value::na();

        if (node.function == "abs") return Value::scalar(std::fabs(args[0].num));
        if (node.function == "log") {
            if (args[0].num <= 0.0)
                fault(RuntimeErrorKind::log_nonpositive, e, node.function,
                      "log of non-positive value " + format_double(args[0].num));
            return Value::scalar(require_finite(std::log(args[0].num), e, node.function));
        }
        if (node.function == "exp")
            return Value::scalar(require_finite(std::exp(args[0].num), e, node.function));

        // series forms
        const std::vector<Observation>& s = args[0].series;
        charge_series(e, s.size());
        if (node.function == "times") {
            std::vector<Observation> out(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) out[i] = {s[i].time, s[i].time};
            return Value::from_series(std::move(out));
        }
        if (node.function == "values") return args[0];
        if (node.function == "count") return Value::scalar(static_cast<double>(s.size()));
        if (s.empty()) return Value::na();  // every other aggregation is NA on empty input

        if (node.function == "first") return Value::scalar(s.front().value);
        if (node.function == "last") return Value::scalar(s.back().value);
        if (node.function == "min") {
            double m = s[0].value;
            for (const auto& obs : s) m = std::min(m, obs.value);
            return Value::scalar(m);
        }
        if (node.function == "max") {
            double m = s[0].value;
            for (const auto& obs : s) m = std::max(m, obs.value);
            return Value::scalar(m);
        }
        if (node.function == "sum") {
            double total = 0.0;
            for (const auto& obs : s) total += obs.value;
            return Value::scalar(require_finite(total, e, node.function));
        }
        if (node.function == "mean") {
            double total = 0.0;
            for (const auto& obs : s) total += obs.value;
            return Value::scalar(require_finite(total / static_cast<double>(s.size()), e, node.function));
        }
        if (node.function == "std") {
            double total = 0.0;
            for (const auto& obs : s) total += obs.value;
            double mean = total / static_cast<double>(s.size());
            double ss = 0.0;
            for (const auto& obs : s) ss += (obs.value - mean) * (obs.value - mean);
            // population convention: single observation has std 0
            return Value::scalar(require_finite(std::sqrt(ss / static_cast<double>(s.size())), e, node.function));
        }
        if (node.function == "quantile") {
            double q = std::clamp(args[1].num, 0.0, 1.0);
            std::vector<double> values(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) values[i] = s[i].value;
            std::sort(values.begin(), values.end());
            return Value::scalar(quantile_sorted(values, q));
        }
        if (node.function == "slope") {
            if (s.size() < 2) return Value::na();
            double t_mean = 0.0, v_mean = 0.0;
            for (const auto& obs : s) {
                t_mean += obs.time;
                v_mean += obs.value;
            }
            t_mean /= static_cast<double>(s.size());
            v_mean /= static_cast<double>(s.size());
            double cov = 0.0, var = 0.0;
            for (const auto& obs : s) {
                cov += (obs.time - t_mean) * (obs.value - v_mean);
                var += (obs.time - t_mean) * (obs.time - t_mean);
            }
            if (var == 0.0) return Value::na();
            return Value::scalar(require_finite(cov / var, e, node.function));
        }
        throw std::invalid_argument("evaluate: unknown function '" + node.function + "' (program not validated)");
    }
};

}  // namespace

EvalOutcome evaluate(const Program& program, const cohort::PatientRecord& record, const EvalBudget& budget) {
    if (!program.ast) throw std::invalid_argument("evaluate: program has no ast");
    Evaluator evaluator{record, budget, 0, 0, {}};
    try {
        Value result = evaluator.eval(*program.ast);
        switch (result.tag) {
            case Value::Tag::scalar: return EvalOutcome::make_scalar(result.num);
            case Value::Tag::na: return EvalOutcome::make_na();
            default:
                throw std::invalid_argument("evaluate: program result is not scalar-or-NA (not validated)");
        }
    } catch (const EvalAbort& abort) {
        return EvalOutcome::make_error(abort.fault);
    }
}

}  // namespace featforge::featscript
