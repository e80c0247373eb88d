#include "featforge/featscript.hpp"
#include "featforge/gateway.hpp"
#include "featforge/hash.hpp"
#include "featforge/log.hpp"
#include "featforge/num.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace featforge::llm {

namespace {

const char* kSystemText =
    "You are a clinical feature-engineering assistant. You write small programs in FeatScript, a "
    "restricted expression language, that each turn one patient's irregularly sampled event series "
    "into a single scalar feature. You never see patient-level data; you work only from the dataset "
    "schema and the task description. Follow the output format instructions exactly.";

std::string stats_line(const cohort::VariableStats& s) {
    std::ostringstream out;
    out << "stats: observation_count=" << s.observation_count
        << ", patient_coverage_fraction=" << format_double(s.patient_coverage_fraction)
        << ", mean=" << format_double(s.mean) << ", std=" << format_double(s.std_dev)
        << ", min=" << format_double(s.min) << ", p25=" << format_double(s.p25)
        << ", median=" << format_double(s.median) << ", p75=" << format_double(s.p75)
        << ", max=" << format_double(s.max);
    return out.str();
}

std::string meta_block(const cohort::VariableMeta& meta) {
    std::string out = "name=" + meta.name + "\n";
    out += "unit=" + (meta.unit.empty() ? std::string("(none)") : meta.unit) + "\n";
    out += stats_line(meta.stats) + "\n";
    return out;
}

std::string meta_line(const cohort::VariableMeta& meta) {
    return "name=" + meta.name + " unit=" + (meta.unit.empty() ? std::string("(none)") : meta.unit) +
           " " + stats_line(meta.stats);
}

std::string program_instructions(int b) {
    std::ostringstream out;
    out << "Propose " << b
        << " distinct FeatScript programs. Each program must evaluate to one scalar (or NA) per "
           "patient and should be plausibly predictive for the task. Reply with exactly "
        << b << " fenced code blocks (```featscript ... ```), one program per block, and nothing else.";
    return out.str();
}

}  // namespace

ChatRequest build_univariate_prompt(const std::string& task_description,
                                    const cohort::VariableMeta& meta, const std::string& tool_docs,
                                    const PromptOptions& options) {
    std::ostringstream user;
    user << "## Task\n"
         << task_description << "\n\n## Target variable\n"
         << meta_block(meta) << "\n## Available tools\n"
         << tool_docs << "\n## FeatScript language\n"
         << featscript::grammar_summary() << "\n## Instructions\n"
         << program_instructions(options.candidates_per_prompt)
         << " Use only the target variable named above.\n";
    return ChatRequest{kSystemText, user.str(), options.temperature, 1, options.max_tokens,
                       options.model};
}

ChatRequest build_question_prompt(const std::string& task_description, const cohort::Schema& schema,
                                  int n_questions, const PromptOptions& options) {
    std::ostringstream user;
    user << "## Task\n" << task_description << "\n\n## Variables\n";
    for (const auto& meta : schema.variables) user << meta_line(meta) << "\n";
    user << "\n## Instructions\n"
         << "Propose exactly " << n_questions
         << " clinically motivated questions about this cohort whose answers could help the "
            "prediction task. Each question must be answerable from the listed variables' event "
            "series and must name the variables it needs. Reply with one fenced block "
            "(```questions ... ```) containing exactly "
         << n_questions
         << " entries in this format:\n\nquestion: <one-line question>\nvariables: <comma-separated "
            "variable names from the list above>\n\nSeparate entries with a blank line and output "
            "nothing else.\n";
    return ChatRequest{kSystemText, user.str(), options.temperature, 1, options.max_tokens,
                       options.model};
}

ChatRequest build_multivariate_prompt(const std::string& task_description, const QuestionPair& pair,
                                      const std::vector<cohort::VariableMeta>& metas,
                                      const std::string& tool_docs, const PromptOptions& options) {
    std::ostringstream user;
    user << "## Task\n"
         << task_description << "\n\n## Clinical question\n"
         << pair.question << "\n\n## Variables for this question\n";
    for (const auto& meta : metas) user << meta_block(meta) << "\n";
    user << "## Available tools\n"
         << tool_docs << "\n## FeatScript language\n"
         << featscript::grammar_summary() << "\n## Instructions\n"
         << program_instructions(options.candidates_per_prompt)
         << " Use only the variables listed above.\n";
    return ChatRequest{kSystemText, user.str(), options.temperature, 1, options.max_tokens,
                       options.model};
}

std::string prompt_hash(const ChatRequest& request) {
    return to_hex(mix_hash(fnv1a64(request.system_text), fnv1a64(request.user_text)));
}

std::vector<std::string> parse_candidates(const std::string& completion_text, int max_candidates) {
    std::vector<std::string> blocks;
    std::istringstream in(completion_text);
    std::string line;
    bool in_fence = false;
    std::string current;
    while (std::getline(in, line)) {
        std::string trimmed = line;
        while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) trimmed.pop_back();
        std::size_t first = trimmed.find_first_not_of(' ');
        bool fence = first != std::string::npos && trimmed.compare(first, 3, "```") == 0;
        if (fence) {
            if (in_fence) {
                blocks.push_back(current);
                current.clear();
                in_fence = false;
                if (static_cast<int>(blocks.size()) >= max_candidates) break;
            } else {
                in_fence = true;
            }
            continue;
        }
        if (in_fence) {
            if (!current.empty()) current += "\n";
            current += line;
        }
    }
    if (in_fence) log_warn("parse_candidates: unterminated fence ignored");
    return blocks;
}

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool starts_with_ci(const std::string& line, const char* prefix) {
    std::size_t n = std::string(prefix).size();
    if (line.size() < n) return false;
    for (std::size_t i = 0; i < n; ++i)
        if (std::tolower(static_cast<unsigned char>(line[i])) != prefix[i]) return false;
    return true;
}

std::string normalize_question(const std::string& q) {
    std::string out;
    bool pending_space = false;
    for (char c : q) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    while (!out.empty() && (out.back() == '?' || out.back() == '.' || out.back() == '!')) out.pop_back();
    return out;
}

}  // namespace

std::vector<QuestionPair> parse_questions(const std::string& completion_text,
                                          const cohort::Schema& schema) {
    // prefer fenced content when present; fall back to the whole text
    std::string body;
    {
        auto blocks = parse_candidates(completion_text, 1000);
        if (blocks.empty()) {
            body = completion_text;
        } else {
            for (const auto& b : blocks) {
                body += b;
                body += "\n";
            }
        }
    }

    std::vector<QuestionPair> pairs;
    std::set<std::string> seen;
    std::istringstream in(body);
    std::string line;
    std::string pending_question;
    while (std::getline(in, line)) {
        std::string t = trim_copy(line);
        if (starts_with_ci(t, "question:")) {
            pending_question = trim_copy(t.substr(9));
            continue;
        }
        if (!starts_with_ci(t, "variables:")) continue;
        if (pending_question.empty()) continue;
        std::string list = t.substr(10);
        QuestionPair pair;
        pair.question = pending_question;
        pending_question.clear();
        std::istringstream items(list);
        std::string item;
        std::set<std::string> dedup;
        bool all_known = true;
        while (std::getline(items, item, ',')) {
            std::string name = trim_copy(item);
            if (name.empty()) continue;
            if (!schema.has_variable(name)) {
                log_info("parse_questions: dropping pair with unknown variable '" + name + "'");
                all_known = false;
                break;
            }
            if (dedup.insert(name).second) pair.variables.push_back(name);
        }
        if (!all_known || pair.variables.empty()) continue;
        std::string key = normalize_question(pair.question);
        if (!seen.insert(key).second) continue;  // duplicate question text
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace featforge::llm
