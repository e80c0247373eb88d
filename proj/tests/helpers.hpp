#pragma once

#include "featforge/cohort.hpp"
#include "featforge/featscript.hpp"
#include "featforge/rng.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ff_test {

using featforge::Rng;
using featforge::cohort::Cohort;
using featforge::cohort::Observation;
using featforge::cohort::PatientRecord;
using featforge::cohort::Schema;
using featforge::cohort::VariableMeta;

using SeriesData = std::vector<std::pair<double, double>>;  // (time, value)

inline PatientRecord make_record(const std::string& id, double horizon,
                                 const std::map<std::string, SeriesData>& series) {
    PatientRecord rec;
    rec.patient_id = id;
    rec.horizon = horizon;
    for (const auto& [name, points] : series) {
        auto& col = rec.events.column(name);
        for (const auto& [t, v] : points) col.push_back({t, v});
    }
    return rec;
}

inline Schema make_schema(const std::vector<std::string>& names) {
    Schema schema;
    for (const auto& name : names) {
        VariableMeta meta;
        meta.name = name;
        schema.variables.push_back(meta);
    }
    return schema;
}

// ---------------------------------------------------------------------------
// Straightforward reference implementations of the aggregations, written
// independently of the evaluator (different algebraic routes on purpose).
// ---------------------------------------------------------------------------
namespace ref {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();  // NA stand-in

inline double mean(const SeriesData& s) {
    if (s.empty()) return kNaN;
    double total = 0;
    for (auto& [t, v] : s) total += v;
    return total / double(s.size());
}

inline double std_dev(const SeriesData& s) {
    if (s.empty()) return kNaN;
    double m = mean(s);
    double acc = 0;
    for (auto& [t, v] : s) acc += (v - m) * (v - m);
    return std::sqrt(acc / double(s.size()));
}

inline double min(const SeriesData& s) {
    if (s.empty()) return kNaN;
    double out = s[0].second;
    for (auto& [t, v] : s)
        if (v < out) out = v;
    return out;
}

inline double max(const SeriesData& s) {
    if (s.empty()) return kNaN;
    double out = s[0].second;
    for (auto& [t, v] : s)
        if (v > out) out = v;
    return out;
}

inline double sum(const SeriesData& s) {
    if (s.empty()) return kNaN;
    double total = 0;
    for (auto& [t, v] : s) total += v;
    return total;
}

inline double count(const SeriesData& s) { return double(s.size()); }

inline double first(const SeriesData& s) { return s.empty() ? kNaN : s.front().second; }
inline double last(const SeriesData& s) { return s.empty() ? kNaN : s.back().second; }

inline double quantile(const SeriesData& s, double q) {
    if (s.empty()) return kNaN;
    std::vector<double> vals;
    for (auto& [t, v] : s) vals.push_back(v);
    std::sort(vals.begin(), vals.end());
    if (q < 0) q = 0;
    if (q > 1) q = 1;
    double pos = q * double(vals.size() - 1);
    std::size_t lo = std::size_t(std::floor(pos));
    std::size_t hi = std::size_t(std::ceil(pos));
    if (hi >= vals.size()) return vals.back();
    double w = pos - double(lo);
    return vals[lo] * (1 - w) + vals[hi] * w;
}

// slope via the uncentered normal-equation route
inline double slope(const SeriesData& s) {
    if (s.size() < 2) return kNaN;
    double n = double(s.size());
    double st = 0, sv = 0, stt = 0, stv = 0;
    for (auto& [t, v] : s) {
        st += t;
        sv += v;
        stt += t * t;
        stv += t * v;
    }
    double denom = stt - st * st / n;
    if (denom == 0) return kNaN;
    return (stv - st * sv / n) / denom;
}

}  // namespace ref

// ---------------------------------------------------------------------------
// Random series / program generation
// ---------------------------------------------------------------------------

inline SeriesData random_series(Rng& rng, std::size_t max_len = 20, double horizon = 48.0) {
    std::size_t n = rng.below(max_len + 1);
    std::vector<double> times;
    for (std::size_t i = 0; i < n; ++i) times.push_back(rng.uniform(0.0, horizon));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    SeriesData out;
    for (double t : times) {
        double v = rng.normal(50.0, 20.0);
        if (rng.bernoulli(0.2)) v = std::floor(v);  // induce ties
        out.emplace_back(t, v);
    }
    return out;
}

// Random ASTs in parser-reachable space (arbitrary kinds; for round-trip
// fuzzing, not validation).
class AstFuzzer {
  public:
    explicit AstFuzzer(Rng& rng) : rng_(rng) {}

    featforge::featscript::ExprPtr gen(int depth) {
        using namespace featforge::featscript;
        if (depth <= 0) return leaf();
        switch (rng_.below(9)) {
            case 0: return leaf();
            case 1: {
                Expr e;
                e.node = Unary{rng_.bernoulli(0.5) ? UnaryOp::negate : UnaryOp::logical_not, gen(depth - 1)};
                return std::make_unique<Expr>(std::move(e));
            }
            case 2:
            case 3: {
                static const BinaryOp ops[] = {BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div,
                                               BinaryOp::lt, BinaryOp::le, BinaryOp::gt, BinaryOp::ge,
                                               BinaryOp::eq, BinaryOp::ne, BinaryOp::logical_and,
                                               BinaryOp::logical_or};
                Expr e;
                e.node = Binary{ops[rng_.below(12)], gen(depth - 1), gen(depth - 1)};
                return std::make_unique<Expr>(std::move(e));
            }
            case 4: {
                std::string name = fresh_ident();
                Expr e;
                bound_.push_back(name);
                auto body = gen(depth - 1);
                bound_.pop_back();
                e.node = Let{name, gen(depth - 1), std::move(body)};
                return std::make_unique<Expr>(std::move(e));
            }
            case 5: {
                Expr e;
                e.node = If{gen(depth - 1), gen(depth - 1), gen(depth - 1)};
                return std::make_unique<Expr>(std::move(e));
            }
            case 6: {
                static const char* funcs[] = {"mean", "std", "quantile", "coalesce", "is_na",
                                              "abs", "log", "exp", "slope", "horizon"};
                const char* f = funcs[rng_.below(10)];
                std::size_t arity = rng_.below(3);
                Expr e;
                Call call{f, {}};
                for (std::size_t i = 0; i < arity; ++i) call.args.push_back(gen(depth - 1));
                e.node = std::move(call);
                return std::make_unique<Expr>(std::move(e));
            }
            default: {
                static const char* tools[] = {"get_all_measurements", "get_in_window", "last_value_before",
                                              "count_measurements", "time_since_last"};
                static const char* vars[] = {"HR", "sbp_mean", "weird name", "let", "a\"b", "_v9"};
                const char* tool = tools[rng_.below(5)];
                Expr e;
                ToolCall call{tool, vars[rng_.below(6)], {}};
                std::size_t extra = rng_.below(3);
                for (std::size_t i = 0; i < extra; ++i) call.args.push_back(gen(depth - 1));
                e.node = std::move(call);
                return std::make_unique<Expr>(std::move(e));
            }
        }
    }

  private:
    Rng& rng_;
    std::vector<std::string> bound_;
    int counter_ = 0;

    featforge::featscript::ExprPtr leaf() {
        using namespace featforge::featscript;
        Expr e;
        if (!bound_.empty() && rng_.bernoulli(0.3)) {
            e.node = VarRef{bound_[rng_.below(bound_.size())]};
        } else {
            static const double nums[] = {0.0, 1.0, 2.0, 0.5, 85.0, 1e-3, 12345.678, 1e100};
            e.node = NumberLit{nums[rng_.below(8)]};
        }
        return std::make_unique<Expr>(std::move(e));
    }

    std::string fresh_ident() { return "x" + std::to_string(counter_++); }
};

// Kind-correct random programs over a variable pool; always parse, validate
// and evaluate without internal errors (runtime faults still possible).
class ValidProgramGen {
  public:
    ValidProgramGen(Rng& rng, std::vector<std::string> variables)
        : rng_(rng), variables_(std::move(variables)) {}

    std::string gen_scalar_source(int depth = 3) { return gen_scalar(depth); }

  private:
    Rng& rng_;
    std::vector<std::string> variables_;

    std::string var() { return variables_[rng_.below(variables_.size())]; }

    std::string num() {
        static const char* nums[] = {"0", "1", "2", "0.5", "10", "24", "48"};
        return nums[rng_.below(7)];
    }

    std::string gen_series(int depth) {
        if (depth <= 0 || rng_.bernoulli(0.6)) return "get_all_measurements(" + var() + ")";
        switch (rng_.below(3)) {
            case 0: {
                std::string a = num(), b = num();
                return "get_in_window(" + var() + ", " + a + ", " + a + " + " + b + ")";
            }
            case 1: return "times(" + gen_series(depth - 1) + ")";
            default: return "values(" + gen_series(depth - 1) + ")";
        }
    }

    std::string gen_bool(int depth) {
        if (depth <= 0) return gen_scalar(0) + " > " + num();
        switch (rng_.below(3)) {
            case 0: return "is_na(" + gen_scalar(depth - 1) + ")";
            case 1: return "(" + gen_bool(depth - 1) + ") and (" + gen_bool(depth - 1) + ")";
            default: return "(" + gen_scalar(depth - 1) + ") <= (" + gen_scalar(depth - 1) + ")";
        }
    }

    std::string gen_scalar(int depth) {
        if (depth <= 0) {
            switch (rng_.below(4)) {
                case 0: return num();
                case 1: return "count_measurements(" + var() + ")";
                case 2: return "last_value_before(" + var() + ", " + num() + ")";
                default: return "horizon()";
            }
        }
        switch (rng_.below(8)) {
            case 0: {
                static const char* aggs[] = {"mean", "std", "min", "max", "sum", "count", "first", "last",
                                             "slope"};
                return std::string(aggs[rng_.below(9)]) + "(" + gen_series(depth - 1) + ")";
            }
            case 1: return "quantile(" + gen_series(depth - 1) + ", 0.9)";
            case 2: return "coalesce(" + gen_scalar(depth - 1) + ", " + num() + ")";
            case 3: return "(" + gen_scalar(depth - 1) + ") + (" + gen_scalar(depth - 1) + ")";
            case 4: return "(" + gen_scalar(depth - 1) + ") * (" + gen_scalar(depth - 1) + ")";
            case 5: return "if " + gen_bool(depth - 1) + " then " + gen_scalar(depth - 1) + " else " +
                           gen_scalar(depth - 1);
            case 6: return "let z = " + gen_scalar(depth - 1) + " in z + " + num();
            default: return "abs(" + gen_scalar(depth - 1) + ")";
        }
    }
};

}  // namespace ff_test
