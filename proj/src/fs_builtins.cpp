#include "fs_builtins.hpp"

namespace featforge::featscript {

namespace {
constexpr ArgConstraint kScalar = ArgConstraint::scalar;
constexpr ArgConstraint kSeries = ArgConstraint::series;
}  // namespace

const std::vector<BuiltinSpec>& builtins() {
    static const std::vector<BuiltinSpec> table = {
        // temporal tools (record implicit, first syntactic argument is a variable name)
        {"get_all_measurements", {}, Kind::series, true},
        {"get_in_window", {kScalar, kScalar}, Kind::series, true},
        {"last_value_before", {kScalar}, Kind::scalar, true},
        {"count_measurements", {}, Kind::scalar, true},
        {"time_since_last", {kScalar}, Kind::scalar, true},
        // series aggregations
        {"mean", {kSeries}, Kind::scalar, false},
        {"std", {kSeries}, Kind::scalar, false},
        {"min", {kSeries}, Kind::scalar, false},
        {"max", {kSeries}, Kind::scalar, false},
        {"sum", {kSeries}, Kind::scalar, false},
        {"count", {kSeries}, Kind::scalar, false},
        {"first", {kSeries}, Kind::scalar, false},
        {"last", {kSeries}, Kind::scalar, false},
        {"quantile", {kSeries, kScalar}, Kind::scalar, false},
        {"slope", {kSeries}, Kind::scalar, false},
        // series projections
        {"times", {kSeries}, Kind::series, false},
        {"values", {kSeries}, Kind::series, false},
        // scalar functions
        {"abs", {kScalar}, Kind::scalar, false},
        {"log", {kScalar}, Kind::scalar, false},
        {"exp", {kScalar}, Kind::scalar, false},
        // NA forms
        {"is_na", {ArgConstraint::scalar_or_boolean}, Kind::boolean, false},
        {"coalesce", {kScalar, kScalar}, Kind::scalar, false},
        // record window length
        {"horizon", {}, Kind::scalar, false},
    };
    return table;
}

const BuiltinSpec* find_builtin(const std::string& name) {
    for (const auto& spec : builtins())
        if (name == spec.name) return &spec;
    return nullptr;
}

bool is_tool_name(const std::string& name) {
    const BuiltinSpec* spec = find_builtin(name);
    return spec && spec->is_tool;
}

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::scalar: return "scalar";
        case Kind::boolean: return "boolean";
        case Kind::series: return "series";
    }
    return "?";
}

}  // namespace featforge::featscript
