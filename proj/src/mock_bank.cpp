#include "featforge/featscript.hpp"
#include "featforge/gateway.hpp"

#include <algorithm>
#include <sstream>

namespace featforge::llm {

namespace {

std::string tok(const std::string& variable) { return featscript::variable_token(variable); }

std::vector<std::string> take(std::vector<std::string> pool, int b) {
    std::vector<std::string> out;
    if (pool.empty() || b <= 0) return out;
    for (int i = 0; i < b; ++i) out.push_back(pool[i % pool.size()]);
    return out;
}

// Shared question templates. The first three mirror the planted-signal
// structure of the synthetic cohorts (final-window nadir, trend comparison,
// measurement frequency); the rest are generic pairings.
std::vector<QuestionPair> standard_questions(const std::vector<std::string>& vars, int n_questions) {
    std::vector<QuestionPair> out;
    if (vars.empty()) return out;
    const std::size_t m = vars.size();
    auto add = [&](std::string q, std::vector<std::string> vs) {
        if (static_cast<int>(out.size()) < n_questions) out.push_back({std::move(q), std::move(vs)});
    };
    add("Does " + vars[0] + " reach a low point in the final quarter of the observation window?",
        {vars[0]});
    if (m >= 3)
        add("How does the overall trend of " + vars[1] + " compare with the trend of " + vars[2] + "?",
            {vars[1], vars[2]});
    if (m >= 4)
        add("Is the measurement frequency of " + vars[3] + " itself informative for the outcome?",
            {vars[3]});
    int k = 0;
    while (static_cast<int>(out.size()) < n_questions) {
        std::string a = vars[k % m];
        std::string b = vars[(k + 1 + k / static_cast<int>(m)) % m];
        std::ostringstream q;
        q << "How do " << a << " and " << b << " relate over the observation window (view " << k << ")?";
        if (a == b)
            add("What is the late-window behaviour of " + a + " (view " + std::to_string(k) + ")?", {a});
        else
            add(q.str(), {a, b});
        ++k;
    }
    return out;
}

class OracleBank : public MockBank {
  public:
    std::vector<std::string> univariate_programs(const std::string& variable, int b, Rng&) const override {
        const std::string v = tok(variable);
        return take(
            {
                "count(get_all_measurements(" + v + "))",
                "min(get_all_measurements(" + v + "))",
                "slope(get_all_measurements(" + v + "))",
                "mean(get_all_measurements(" + v + "))",
                "coalesce(last(get_all_measurements(" + v + ")), 0)",
                "let s = get_all_measurements(" + v + ") in coalesce(max(s) - min(s), 0)",
                "quantile(get_all_measurements(" + v + "), 0.1)",
            },
            b);
    }

    std::vector<QuestionPair> question_pairs(const std::vector<std::string>& schema_variables,
                                             int n_questions, Rng&) const override {
        return standard_questions(schema_variables, n_questions);
    }

    std::vector<std::string> multivariate_programs(const QuestionPair& pair, int b, Rng&) const override {
        if (pair.variables.empty()) return {};
        const std::string a = tok(pair.variables[0]);
        const std::string c = tok(pair.variables.size() > 1 ? pair.variables[1] : pair.variables[0]);
        if (pair.question.find("low point") != std::string::npos) {
            return take(
                {
                    "min(get_in_window(" + a + ", horizon() - horizon() / 4, horizon()))",
                    "coalesce(min(get_in_window(" + a + ", horizon() - horizon() / 4, horizon())), "
                    "min(get_all_measurements(" + a + ")))",
                    "quantile(get_in_window(" + a + ", horizon() - horizon() / 4, horizon()), 0.25)",
                    "coalesce(last_value_before(" + a + ", horizon()), 0)",
                    "let w = horizon() / 4 in coalesce(mean(get_in_window(" + a +
                        ", horizon() - w, horizon())), mean(get_all_measurements(" + a + ")))",
                },
                b);
        }
        if (pair.question.find("trend") != std::string::npos && pair.variables.size() >= 2) {
            return take(
                {
                    "let a = coalesce(slope(get_all_measurements(" + a +
                        ")), 0) in let b = coalesce(slope(get_all_measurements(" + c +
                        ")), 0) in if b == 0 then 0 else a / b",
                    "coalesce(slope(get_all_measurements(" + a + ")), 0) - "
                    "coalesce(slope(get_all_measurements(" + c + ")), 0)",
                    "coalesce(slope(get_all_measurements(" + a + ")), 0)",
                    "coalesce(slope(get_all_measurements(" + c + ")), 0)",
                    "coalesce(slope(get_in_window(" + a + ", horizon() / 2, horizon())), 0)",
                },
                b);
        }
        if (pair.question.find("frequency") != std::string::npos) {
            return take(
                {
                    "count_measurements(" + a + ")",
                    "count_measurements(" + a + ") / horizon()",
                    "coalesce(time_since_last(" + a + ", horizon()), horizon())",
                    "count(get_in_window(" + a + ", horizon() / 2, horizon()))",
                    "count(get_in_window(" + a + ", 0, horizon() / 2))",
                },
                b);
        }
        return take(
            {
                "coalesce(mean(get_all_measurements(" + a + ")), 0) - "
                "coalesce(mean(get_all_measurements(" + c + ")), 0)",
                "let x = coalesce(last_value_before(" + a +
                    ", horizon()), 0) in let y = coalesce(last_value_before(" + c +
                    ", horizon()), 1) in if y == 0 then 0 else x / y",
                "count_measurements(" + a + ") - count_measurements(" + c + ")",
                "coalesce(max(get_all_measurements(" + a + ")), 0) - "
                "coalesce(max(get_all_measurements(" + c + ")), 0)",
                "coalesce(std(get_in_window(" + a + ", horizon() / 2, horizon())), 0)",
            },
            b);
    }
};

class PlausibleBank : public MockBank {
  public:
    std::vector<std::string> univariate_programs(const std::string& variable, int b, Rng&) const override {
        const std::string v = tok(variable);
        return take(
            {
                "coalesce(last(get_all_measurements(" + v + ")), 0)",
                "count(get_all_measurements(" + v + "))",
                "quantile(get_all_measurements(" + v + "), 0.9)",
                "std(get_all_measurements(" + v + "))",
                "mean(get_all_measurements(" + v + "))",
            },
            b);
    }

    std::vector<QuestionPair> question_pairs(const std::vector<std::string>& schema_variables,
                                             int n_questions, Rng&) const override {
        return standard_questions(schema_variables, n_questions);
    }

    std::vector<std::string> multivariate_programs(const QuestionPair& pair, int b, Rng&) const override {
        if (pair.variables.empty()) return {};
        const std::string a = tok(pair.variables[0]);
        const std::string c = tok(pair.variables.size() > 1 ? pair.variables[1] : pair.variables[0]);
        return take(
            {
                "coalesce(mean(get_in_window(" + a + ", horizon() / 2, horizon())), 0)",
                "coalesce(last_value_before(" + a + ", horizon()), 0) - coalesce(last_value_before(" +
                    c + ", horizon()), 0)",
                "coalesce(time_since_last(" + a + ", horizon()), horizon())",
                "count_measurements(" + a + ") + count_measurements(" + c + ")",
                "coalesce(std(get_in_window(" + a + ", horizon() / 2, horizon())), 0)",
            },
            b);
    }
};

// Fixed candidate composition per prompt: valid, valid, syntax error,
// schema violation, all-NA. Generation-accounting tests predict exact
// tallies from it.
class MixedBank : public MockBank {
  public:
    std::vector<std::string> univariate_programs(const std::string& variable, int b, Rng&) const override {
        const std::string v = tok(variable);
        std::vector<std::string> pool = {
            "mean(get_all_measurements(" + v + "))",
            "count(get_all_measurements(" + v + "))",
            "mean(get_all_measurements(" + v + ")",  // unbalanced parenthesis
            "mean(get_all_measurements(zz_unknown_variable))",
            "mean(get_in_window(" + v + ", horizon() + 1, horizon() + 2))",  // empty window: NA everywhere
        };
        if (b <= static_cast<int>(pool.size())) return {pool.begin(), pool.begin() + b};
        return take(pool, b);
    }

    std::vector<QuestionPair> question_pairs(const std::vector<std::string>& schema_variables,
                                             int n_questions, Rng&) const override {
        return standard_questions(schema_variables, n_questions);
    }

    std::vector<std::string> multivariate_programs(const QuestionPair& pair, int b, Rng&) const override {
        if (pair.variables.empty()) return {};
        const std::string a = tok(pair.variables[0]);
        std::vector<std::string> pool = {
            "coalesce(mean(get_all_measurements(" + a + ")), 0)",
            "count_measurements(" + a + ")",
            "count_measurements(" + a + ")) + 1",  // stray parenthesis
            "mean(get_all_measurements(zz_unknown_variable))",
            "max(get_in_window(" + a + ", horizon() + 1, horizon() + 2))",
        };
        if (b <= static_cast<int>(pool.size())) return {pool.begin(), pool.begin() + b};
        return take(pool, b);
    }
};

}  // namespace

std::shared_ptr<const MockBank> make_bank(const std::string& name) {
    if (name == "oracle") return std::make_shared<OracleBank>();
    if (name == "plausible") return std::make_shared<PlausibleBank>();
    if (name == "mixed") return std::make_shared<MixedBank>();
    return nullptr;
}

}  // namespace featforge::llm
