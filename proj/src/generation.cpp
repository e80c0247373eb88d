#include "featforge/generation.hpp"

#include "featforge/hash.hpp"
#include "featforge/log.hpp"
#include "featforge/rng.hpp"
#include "featforge/toolkit.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace featforge::pipeline {

using nlohmann::json;

const char* to_string(ProgramKind kind) {
    return kind == ProgramKind::univariate ? "univariate" : "multivariate";
}

const char* to_string(ProgramStatus status) {
    switch (status) {
        case ProgramStatus::valid: return "valid";
        case ProgramStatus::syntax_rejected: return "syntax_rejected";
        case ProgramStatus::validation_rejected: return "validation_rejected";
        case ProgramStatus::smoke_rejected: return "smoke_rejected";
    }
    return "?";
}

const char* to_string(GenerationMode mode) {
    switch (mode) {
        case GenerationMode::uni: return "uni";
        case GenerationMode::multi: return "multi";
        case GenerationMode::both: return "both";
    }
    return "?";
}

GenerationMode parse_mode(const std::string& text) {
    if (text == "uni") return GenerationMode::uni;
    if (text == "multi") return GenerationMode::multi;
    if (text == "both") return GenerationMode::both;
    throw std::invalid_argument("unknown generation mode: " + text + " (expected uni|multi|both)");
}

std::string program_id(const std::string& source_canonical, ProgramKind kind,
                       const std::vector<std::string>& sorted_variables) {
    std::string key = source_canonical;
    key += '\x1f';
    key += to_string(kind);
    for (const auto& v : sorted_variables) {
        key += '\x1f';
        key += v;
    }
    return hash_hex(key);
}

std::vector<const FeatureProgram*> FeatureRegistry::valid_programs() const {
    std::vector<const FeatureProgram*> out;
    for (const auto& p : programs)
        if (p.status == ProgramStatus::valid) out.push_back(&p);
    return out;
}

const FeatureProgram* FeatureRegistry::find(const std::string& id) const {
    for (const auto& p : programs)
        if (p.id == id) return &p;
    return nullptr;
}

std::vector<const cohort::PatientRecord*> smoke_sample(const cohort::Cohort& train, int size,
                                                       std::uint64_t seed) {
    std::vector<std::size_t> indices(train.records.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng(mix_hash(seed, fnv1a64("smoke_sample")));
    rng.shuffle(indices);
    std::vector<const cohort::PatientRecord*> out;
    std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(size, 0)), indices.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&train.records[indices[i]]);
    return out;
}

SmokeResult smoke_test(const featscript::Program& program,
                       const std::vector<const cohort::PatientRecord*>& sample_records,
                       const featscript::EvalBudget& budget) {
    SmokeResult result;
    if (sample_records.empty()) {
        result.reason = "no sample records";
        return result;
    }
    for (const auto* record : sample_records) {
        auto outcome = featscript::evaluate(program, *record, budget);
        if (outcome.is_scalar()) {
            ++result.scalar_count;
        } else if (outcome.is_na()) {
            ++result.na_count;
        } else {
            ++result.error_count;
            if (outcome.fault->kind == featscript::RuntimeErrorKind::budget_exhausted)
                result.budget_exceeded = true;
        }
    }
    const double n = static_cast<double>(sample_records.size());
    if (result.budget_exceeded) {
        result.reason = "budget exhausted on at least one record";
    } else if (static_cast<double>(result.error_count) > 0.5 * n) {
        result.reason = "runtime errors on " + std::to_string(result.error_count) + "/" +
                        std::to_string(sample_records.size()) + " records";
    } else if (result.scalar_count == 0) {
        result.reason = "no record yields a non-NA scalar";
    } else {
        result.pass = true;
    }
    return result;
}

namespace {

struct CandidateContext {
    ProgramKind kind;
    std::vector<std::string> intended_variables;  // sorted
    std::string question;
    int round_index;
    std::string prompt_hash;
};

FeatureProgram process_candidate(const std::string& raw_source, const CandidateContext& ctx,
                                 const cohort::Schema& schema,
                                 const std::vector<const cohort::PatientRecord*>& smoke_records,
                                 const featscript::EvalBudget& budget) {
    FeatureProgram out;
    out.kind = ctx.kind;
    out.variables = ctx.intended_variables;
    out.question = ctx.question;
    out.round_index = ctx.round_index;
    out.prompt_hash = ctx.prompt_hash;

    auto parsed = featscript::parse(raw_source);
    if (!parsed.ok()) {
        out.status = ProgramStatus::syntax_rejected;
        out.reject_reason = parsed.error->message + " (line " + std::to_string(parsed.error->line) +
                            ", col " + std::to_string(parsed.error->column) + ")";
        std::string trimmed = raw_source;
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
            trimmed.pop_back();
        out.source_canonical = trimmed;
        out.id = program_id(out.source_canonical, out.kind, out.variables);
        return out;
    }

    const featscript::Program& program = *parsed.program;
    out.source_canonical = featscript::pretty_print(program);
    out.id = program_id(out.source_canonical, out.kind, out.variables);

    std::set<std::string> allowed(ctx.intended_variables.begin(), ctx.intended_variables.end());
    auto validation = featscript::validate(program, schema, allowed);
    if (!validation.ok()) {
        out.status = ProgramStatus::validation_rejected;
        out.reject_reason = validation.summary();
        return out;
    }
    if (ctx.kind == ProgramKind::univariate) {
        if (program.declared_variables != allowed) {
            out.status = ProgramStatus::validation_rejected;
            out.reject_reason = "univariate program must reference exactly its target variable";
            return out;
        }
    } else if (program.declared_variables.empty()) {
        out.status = ProgramStatus::validation_rejected;
        out.reject_reason = "program references no variables";
        return out;
    }

    auto smoke = smoke_test(program, smoke_records, budget);
    if (!smoke.pass) {
        out.status = ProgramStatus::smoke_rejected;
        out.reject_reason = smoke.reason;
        return out;
    }
    out.status = ProgramStatus::valid;
    return out;
}

void validate_config(const GenConfig& config) {
    if (config.candidates_per_prompt < 1 || config.n_questions < 1 || config.n_rounds < 1 ||
        config.smoke_sample_size < 1 || config.max_tokens < 1)
        throw std::invalid_argument("generation config: counts must be positive");
    if (config.temperature < 0.0 || config.temperature > 2.0)
        throw std::invalid_argument("generation config: temperature must lie in [0, 2]");
}

llm::PromptOptions prompt_options(const GenConfig& config) {
    llm::PromptOptions opt;
    opt.candidates_per_prompt = config.candidates_per_prompt;
    opt.temperature = config.temperature;
    opt.max_tokens = config.max_tokens;
    opt.model = config.model;
    return opt;
}

// Fingerprint of the fixed prompt scaffolding (templates, tool docs,
// grammar), computed from probe prompts over a dummy schema.
std::string compute_prompt_template_hash(const GenConfig& config) {
    llm::PromptOptions opt = prompt_options(config);
    cohort::VariableMeta probe;
    probe.name = "__probe__";
    probe.unit = "u";
    cohort::Schema schema;
    schema.variables.push_back(probe);
    auto uni = llm::build_univariate_prompt("__task__", probe, toolkit::render_tool_docs(true), opt);
    auto q = llm::build_question_prompt("__task__", schema, config.n_questions, opt);
    llm::QuestionPair pair{"__q__", {"__probe__"}};
    auto multi =
        llm::build_multivariate_prompt("__task__", pair, {probe}, toolkit::render_tool_docs(false), opt);
    return to_hex(mix_hash(fnv1a64(uni.system_text + uni.user_text),
                           mix_hash(fnv1a64(q.user_text), fnv1a64(multi.user_text))));
}

GenerationManifest make_manifest(const GenConfig& config, const llm::ProviderConfig& provider,
                                 const std::string& mode) {
    GenerationManifest manifest;
    manifest.config = config;
    manifest.mode = mode;
    manifest.prompt_template_hash = compute_prompt_template_hash(config);
    manifest.tool_docs_univariate = toolkit::render_tool_docs(true);
    manifest.tool_docs_multivariate = toolkit::render_tool_docs(false);
    manifest.grammar_version = featscript::kGrammarVersion;
    manifest.provider = llm::provider_identity(provider);
    return manifest;
}

void log_generation_summary(const char* stage, const GenerationManifest& manifest) {
    std::ostringstream line;
    line << "stage=" << stage;
    for (const auto& [key, value] : manifest.counters) line << " " << key << "=" << value;
    log_info(line.str());
}

}  // namespace

std::vector<llm::QuestionPair> request_questions(const std::string& task, const cohort::Schema& schema,
                                                 const GenConfig& config,
                                                 const llm::ProviderConfig& provider,
                                                 std::map<std::string, std::int64_t>& counters) {
    auto request = llm::build_question_prompt(task, schema, config.n_questions, prompt_options(config));
    ++counters["question_prompts_sent"];
    auto result = llm::complete(request, provider);
    if (!result.ok()) {
        ++counters["provider_failures"];
        log_warn("question prompt failed: " + result.error->message);
        return {};
    }
    auto pairs = llm::parse_questions(result.response->completions[0], schema);
    if (pairs.empty() && !result.response->completions[0].empty()) {
        // one reformatting retry, then give up on the round
        auto retry = request;
        retry.user_text +=
            "\n\nYour previous reply could not be parsed. Reply again with ONLY the fenced "
            "```questions``` block in the exact format requested above.\n";
        ++counters["question_reformat_retries"];
        auto second = llm::complete(retry, provider);
        if (second.ok()) pairs = llm::parse_questions(second.response->completions[0], schema);
        if (pairs.empty()) {
            ++counters["question_rounds_unparseable"];
            log_warn("question prompt yielded no parseable pairs after retry");
        }
    }
    if (static_cast<int>(pairs.size()) > config.n_questions) {
        log_info("question prompt returned " + std::to_string(pairs.size()) + " pairs; keeping first " +
                 std::to_string(config.n_questions));
        pairs.resize(static_cast<std::size_t>(config.n_questions));
    }
    return pairs;
}

FeatureRegistry generate_univariate(const cohort::Schema& schema, const std::string& task,
                                    const GenConfig& config, const llm::ProviderConfig& provider,
                                    const cohort::Cohort& train) {
    if (schema.variables.empty()) throw std::invalid_argument("generate_univariate: empty schema");
    FeatureRegistry registry;
    registry.manifest = make_manifest(config, provider, "uni");
    auto& counters = registry.manifest.counters;
    auto sample = smoke_sample(train, config.smoke_sample_size, config.seed);
    const std::string tool_docs = toolkit::render_tool_docs(true);
    const llm::PromptOptions opt = prompt_options(config);

    for (int round = 1; round <= config.n_rounds; ++round) {
        std::vector<llm::ChatRequest> requests;
        requests.reserve(schema.variables.size());
        for (const auto& meta : schema.variables)
            requests.push_back(llm::build_univariate_prompt(task, meta, tool_docs, opt));
        counters["prompts_sent"] += static_cast<std::int64_t>(requests.size());
        auto results = llm::complete_batch(requests, provider);

        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& meta = schema.variables[i];
            if (!results[i].ok()) {
                ++counters["provider_failures"];
                log_warn("univariate prompt for " + meta.name + " failed: " + results[i].error->message);
                continue;
            }
            auto candidates =
                llm::parse_candidates(results[i].response->completions[0], config.candidates_per_prompt);
            if (static_cast<int>(candidates.size()) < config.candidates_per_prompt)
                log_info("univariate prompt for " + meta.name + " yielded " +
                         std::to_string(candidates.size()) + "/" +
                         std::to_string(config.candidates_per_prompt) + " candidates");
            CandidateContext ctx{ProgramKind::univariate, {meta.name}, "", round,
                                 llm::prompt_hash(requests[i])};
            for (const auto& source : candidates) {
                auto program = process_candidate(source, ctx, schema, sample, config.budget);
                ++counters[to_string(program.status)];
                registry.programs.push_back(std::move(program));
            }
        }
    }
    log_generation_summary("generate_univariate", registry.manifest);
    return registry;
}

FeatureRegistry generate_multivariate(const cohort::Schema& schema, const std::string& task,
                                      const GenConfig& config, const llm::ProviderConfig& provider,
                                      const cohort::Cohort& train) {
    if (schema.variables.size() < 2)
        throw std::invalid_argument("generate_multivariate: schema needs at least 2 variables");
    FeatureRegistry registry;
    registry.manifest = make_manifest(config, provider, "multi");
    auto& counters = registry.manifest.counters;
    auto sample = smoke_sample(train, config.smoke_sample_size, config.seed);
    const std::string tool_docs = toolkit::render_tool_docs(false);
    const llm::PromptOptions opt = prompt_options(config);

    for (int round = 1; round <= config.n_rounds; ++round) {
        auto pairs = request_questions(task, schema, config, provider, counters);
        if (pairs.empty()) {
            log_warn("round " + std::to_string(round) + ": no question pairs; round contributes nothing");
            continue;
        }
        counters["question_pairs"] += static_cast<std::int64_t>(pairs.size());

        std::vector<llm::ChatRequest> requests;
        requests.reserve(pairs.size());
        for (const auto& pair : pairs) {
            std::vector<cohort::VariableMeta> metas;
            for (const auto& name : pair.variables) metas.push_back(*schema.find(name));
            requests.push_back(llm::build_multivariate_prompt(task, pair, metas, tool_docs, opt));
        }
        counters["prompts_sent"] += static_cast<std::int64_t>(requests.size());
        auto results = llm::complete_batch(requests, provider);

        for (std::size_t i = 0; i < results.size(); ++i) {
            if (!results[i].ok()) {
                ++counters["provider_failures"];
                log_warn("multivariate prompt failed: " + results[i].error->message);
                continue;
            }
            auto candidates =
                llm::parse_candidates(results[i].response->completions[0], config.candidates_per_prompt);
            std::vector<std::string> sorted_vars = pairs[i].variables;
            std::sort(sorted_vars.begin(), sorted_vars.end());
            CandidateContext ctx{ProgramKind::multivariate, sorted_vars, pairs[i].question, round,
                                 llm::prompt_hash(requests[i])};
            for (const auto& source : candidates) {
                auto program = process_candidate(source, ctx, schema, sample, config.budget);
                ++counters[to_string(program.status)];
                registry.programs.push_back(std::move(program));
            }
        }
    }
    log_generation_summary("generate_multivariate", registry.manifest);
    return registry;
}

FeatureRegistry dedup(FeatureRegistry registry) {
    std::set<std::string> seen;
    std::vector<FeatureProgram> kept;
    kept.reserve(registry.programs.size());
    std::int64_t collapsed = 0;
    for (auto& program : registry.programs) {
        if (program.status == ProgramStatus::valid) {
            if (!seen.insert(program.id).second) {
                ++collapsed;
                continue;
            }
        }
        kept.push_back(std::move(program));
    }
    registry.programs = std::move(kept);
    registry.manifest.counters["duplicates_collapsed"] += collapsed;
    if (collapsed > 0) log_info("dedup: collapsed " + std::to_string(collapsed) + " duplicate programs");
    return registry;
}

FeatureRegistry run_generation(const cohort::Schema& schema, const std::string& task,
                               const GenConfig& config, const llm::ProviderConfig& provider,
                               GenerationMode mode, const cohort::Cohort& train) {
    FeatureRegistry merged;
    merged.manifest = make_manifest(config, provider, to_string(mode));
    if (mode == GenerationMode::uni || mode == GenerationMode::both) {
        auto uni = generate_univariate(schema, task, config, provider, train);
        for (auto& p : uni.programs) merged.programs.push_back(std::move(p));
        for (const auto& [k, v] : uni.manifest.counters) merged.manifest.counters[k] += v;
    }
    if (mode == GenerationMode::multi || mode == GenerationMode::both) {
        auto multi = generate_multivariate(schema, task, config, provider, train);
        for (auto& p : multi.programs) merged.programs.push_back(std::move(p));
        for (const auto& [k, v] : multi.manifest.counters) merged.manifest.counters[k] += v;
    }
    return dedup(std::move(merged));
}

// --- persistence -------------------------------------------------------------

namespace {

json config_to_json(const GenConfig& c) {
    return json{{"candidates_per_prompt", c.candidates_per_prompt},
                {"n_questions", c.n_questions},
                {"n_rounds", c.n_rounds},
                {"temperature", c.temperature},
                {"smoke_sample_size", c.smoke_sample_size},
                {"seed", c.seed},
                {"max_tokens", c.max_tokens},
                {"model", c.model},
                {"max_steps", c.budget.max_steps},
                {"max_series_ops", c.budget.max_series_ops}};
}

GenConfig config_from_json(const json& j) {
    GenConfig c;
    c.candidates_per_prompt = j.at("candidates_per_prompt").get<int>();
    c.n_questions = j.at("n_questions").get<int>();
    c.n_rounds = j.at("n_rounds").get<int>();
    c.temperature = j.at("temperature").get<double>();
    c.smoke_sample_size = j.at("smoke_sample_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_tokens = j.at("max_tokens").get<int>();
    c.model = j.at("model").get<std::string>();
    c.budget.max_steps = j.at("max_steps").get<std::int64_t>();
    c.budget.max_series_ops = j.at("max_series_ops").get<std::int64_t>();
    return c;
}

ProgramStatus status_from_string(const std::string& s) {
    if (s == "valid") return ProgramStatus::valid;
    if (s == "syntax_rejected") return ProgramStatus::syntax_rejected;
    if (s == "validation_rejected") return ProgramStatus::validation_rejected;
    if (s == "smoke_rejected") return ProgramStatus::smoke_rejected;
    throw std::runtime_error("unknown program status: " + s);
}

}  // namespace

void save_registry(const FeatureRegistry& registry, const std::string& programs_path,
                   const std::string& manifest_path) {
    {
        std::ofstream out(programs_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + programs_path);
        for (const auto& p : registry.programs) {
            json line = {{"id", p.id},
                         {"kind", to_string(p.kind)},
                         {"source", p.source_canonical},
                         {"variables", p.variables},
                         {"round", p.round_index},
                         {"prompt_hash", p.prompt_hash},
                         {"status", to_string(p.status)},
                         {"reject_reason", p.reject_reason}};
            if (p.kind == ProgramKind::multivariate) line["question"] = p.question;
            out << line.dump() << "\n";
        }
    }
    {
        const auto& m = registry.manifest;
        json manifest = {{"config", config_to_json(m.config)},
                         {"mode", m.mode},
                         {"prompt_template_hash", m.prompt_template_hash},
                         {"tool_docs_univariate", m.tool_docs_univariate},
                         {"tool_docs_multivariate", m.tool_docs_multivariate},
                         {"grammar_version", m.grammar_version},
                         {"provider", m.provider},
                         {"counters", m.counters}};
        std::ofstream out(manifest_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + manifest_path);
        out << manifest.dump(2) << "\n";
    }
}

FeatureRegistry load_registry(const std::string& programs_path, const std::string& manifest_path) {
    FeatureRegistry registry;
    std::ifstream in(programs_path);
    if (!in) throw std::runtime_error("cannot open " + programs_path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& ex) {
            throw std::runtime_error(programs_path + ": line " + std::to_string(line_no) + ": " +
                                     ex.what());
        }
        FeatureProgram p;
        p.id = j.at("id").get<std::string>();
        p.kind = j.at("kind").get<std::string>() == "univariate" ? ProgramKind::univariate
                                                                 : ProgramKind::multivariate;
        p.source_canonical = j.at("source").get<std::string>();
        p.variables = j.at("variables").get<std::vector<std::string>>();
        p.question = j.value("question", "");
        p.round_index = j.at("round").get<int>();
        p.prompt_hash = j.at("prompt_hash").get<std::string>();
        p.status = status_from_string(j.at("status").get<std::string>());
        p.reject_reason = j.value("reject_reason", "");
        registry.programs.push_back(std::move(p));
    }
    std::ifstream min(manifest_path);
    if (!min) throw std::runtime_error("cannot open " + manifest_path);
    json m = json::parse(min);
    registry.manifest.config = config_from_json(m.at("config"));
    registry.manifest.mode = m.value("mode", "");
    registry.manifest.prompt_template_hash = m.value("prompt_template_hash", "");
    registry.manifest.tool_docs_univariate = m.value("tool_docs_univariate", "");
    registry.manifest.tool_docs_multivariate = m.value("tool_docs_multivariate", "");
    registry.manifest.grammar_version = m.value("grammar_version", "");
    registry.manifest.provider = m.value("provider", "");
    for (const auto& [k, v] : m.at("counters").items())
        registry.manifest.counters[k] = v.get<std::int64_t>();
    return registry;
}

}  // namespace featforge::pipeline
