#pragma once

#include "featforge/cohort.hpp"
#include "featforge/featscript.hpp"
#include "featforge/gateway.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace featforge::pipeline {

enum class ProgramKind { univariate, multivariate };
enum class ProgramStatus { valid, syntax_rejected, validation_rejected, smoke_rejected };
enum class GenerationMode { uni, multi, both };

const char* to_string(ProgramKind kind);
const char* to_string(ProgramStatus status);
const char* to_string(GenerationMode mode);
GenerationMode parse_mode(const std::string& text);

struct FeatureProgram {
    std::string id;  // pure function of (canonical source, kind, variables)
    ProgramKind kind = ProgramKind::univariate;
    std::string source_canonical;  // canonical form when parseable, raw source otherwise
    std::vector<std::string> variables;  // sorted; univariate: the target variable, multivariate: the question's set
    std::string question;  // multivariate only
    int round_index = 1;   // 1-based
    std::string prompt_hash;
    ProgramStatus status = ProgramStatus::valid;
    std::string reject_reason;  // empty when valid
};

std::string program_id(const std::string& source_canonical, ProgramKind kind,
                       const std::vector<std::string>& sorted_variables);

struct GenConfig {
    int candidates_per_prompt = 5;  // B
    int n_questions = 20;           // n_q
    int n_rounds = 5;               // n_r
    double temperature = 1.0;
    int smoke_sample_size = 32;
    std::uint64_t seed = 0;
    int max_tokens = 4096;
    std::string model = "mock";
    featscript::EvalBudget budget;
};

struct GenerationManifest {
    GenConfig config;
    std::string mode;
    std::string prompt_template_hash;
    // the three prompt families rendered over placeholder inputs, so the
    // exact scaffolding that produced a registry is reproducible from the
    // manifest alone
    std::map<std::string, std::string> prompt_templates;
    std::string tool_docs_univariate;
    std::string tool_docs_multivariate;
    std::string grammar_version;
    std::string provider;
    std::map<std::string, std::int64_t> counters;
};

struct FeatureRegistry {
    // ordered by (round, schema-variable / question index, candidate index);
    // rejected candidates are retained with their reasons for audit
    std::vector<FeatureProgram> programs;
    GenerationManifest manifest;

    std::vector<const FeatureProgram*> valid_programs() const;
    const FeatureProgram* find(const std::string& id) const;
};

struct SmokeResult {
    bool pass = false;
    std::string reason;
    int scalar_count = 0;
    int na_count = 0;
    int error_count = 0;
    bool budget_exceeded = false;
};

// Pass iff no evaluation exhausts the budget, the runtime-error fraction is
// <= 0.5, and at least one record yields a non-NA scalar.
SmokeResult smoke_test(const featscript::Program& program,
                       const std::vector<const cohort::PatientRecord*>& sample_records,
                       const featscript::EvalBudget& budget = {});

// Deterministic seeded draw from the training split, fixed across rounds.
std::vector<const cohort::PatientRecord*> smoke_sample(const cohort::Cohort& train, int size,
                                                       std::uint64_t seed);

// Question prompt + parse, with one reformatting retry on a wholly
// unparseable response.
std::vector<llm::QuestionPair> request_questions(const std::string& task, const cohort::Schema& schema,
                                                 const GenConfig& config,
                                                 const llm::ProviderConfig& provider,
                                                 std::map<std::string, std::int64_t>& counters);

FeatureRegistry generate_univariate(const cohort::Schema& schema, const std::string& task,
                                    const GenConfig& config, const llm::ProviderConfig& provider,
                                    const cohort::Cohort& train);

FeatureRegistry generate_multivariate(const cohort::Schema& schema, const std::string& task,
                                      const GenConfig& config, const llm::ProviderConfig& provider,
                                      const cohort::Cohort& train);

// Collapses valid programs with identical ids (earliest round wins); the
// number of collapsed duplicates lands in manifest counters.
FeatureRegistry dedup(FeatureRegistry registry);

FeatureRegistry run_generation(const cohort::Schema& schema, const std::string& task,
                               const GenConfig& config, const llm::ProviderConfig& provider,
                               GenerationMode mode, const cohort::Cohort& train);

void save_registry(const FeatureRegistry& registry, const std::string& programs_path,
                   const std::string& manifest_path);
FeatureRegistry load_registry(const std::string& programs_path, const std::string& manifest_path);

}  // namespace featforge::pipeline
