#pragma once

#include "featforge/cohort.hpp"
#include "featforge/rng.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace featforge::llm {

// This module never touches patient records: prompt builders accept only
// schema-level metadata and task text, which is the privacy boundary of the
// whole pipeline.

struct ChatRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 1.0;
    int n_samples = 1;
    int max_tokens = 4096;
    std::string model_name;
};

struct ChatResponse {
    std::vector<std::string> completions;
    std::map<std::string, std::string> provider_metadata;  // token counts, latency
};

// One clinically motivated question plus the variables needed to answer it.
struct QuestionPair {
    std::string question;
    std::vector<std::string> variables;  // deduplicated, subset of the schema
};

struct RetryPolicy {
    int max_retries = 3;
    int backoff_ms = 250;  // doubled per attempt
};

class MockBank;

struct ProviderConfig {
    enum class Kind { http, mock };
    Kind kind = Kind::mock;

    // http
    std::string endpoint;  // e.g. https://host:port/v1/chat/completions
    std::string auth_env;  // name of the env var holding the bearer token
    RetryPolicy retry;

    // mock
    std::uint64_t mock_seed = 0;
    std::string mock_bank = "oracle";
    std::shared_ptr<const MockBank> custom_bank;  // overrides mock_bank when set

    int max_in_flight = 4;
};

struct ProviderError {
    std::string message;
};

struct CompletionResult {
    std::optional<ChatResponse> response;
    std::optional<ProviderError> error;
    bool ok() const { return response.has_value(); }
};

struct PromptOptions {
    int candidates_per_prompt = 5;  // B
    double temperature = 1.0;
    int max_tokens = 4096;
    std::string model = "mock";
};

ChatRequest build_univariate_prompt(const std::string& task_description,
                                    const cohort::VariableMeta& meta, const std::string& tool_docs,
                                    const PromptOptions& options);

ChatRequest build_question_prompt(const std::string& task_description, const cohort::Schema& schema,
                                  int n_questions, const PromptOptions& options);

ChatRequest build_multivariate_prompt(const std::string& task_description, const QuestionPair& pair,
                                      const std::vector<cohort::VariableMeta>& metas,
                                      const std::string& tool_docs, const PromptOptions& options);

// Hex hash of the request text; identifies a prompt in registries and seeds
// the mock provider.
std::string prompt_hash(const ChatRequest& request);

// Human-readable provider identity for manifests ("mock:oracle:seed=7", ...).
std::string provider_identity(const ProviderConfig& config);

CompletionResult complete(const ChatRequest& request, const ProviderConfig& config);

// Bounded fan-out (config.max_in_flight); results land at the index of their
// request, so downstream processing is independent of completion timing.
std::vector<CompletionResult> complete_batch(const std::vector<ChatRequest>& requests,
                                             const ProviderConfig& config);

// Extracts fenced code blocks in order, at most `max_candidates`; fewer (or
// zero) is tolerated.
std::vector<std::string> parse_candidates(const std::string& completion_text, int max_candidates);

// Parses the structured question block; drops pairs naming variables outside
// the schema and deduplicates by normalized question text.
std::vector<QuestionPair> parse_questions(const std::string& completion_text,
                                          const cohort::Schema& schema);

// ---------------------------------------------------------------------------
// Mock provider. A first-class feature, not a test shim: the acceptance
// suite and the synthetic experiments run against it.
// ---------------------------------------------------------------------------

class MockBank {
  public:
    virtual ~MockBank() = default;
    virtual std::vector<std::string> univariate_programs(const std::string& variable, int b,
                                                         Rng& rng) const = 0;
    virtual std::vector<QuestionPair> question_pairs(const std::vector<std::string>& schema_variables,
                                                     int n_questions, Rng& rng) const = 0;
    virtual std::vector<std::string> multivariate_programs(const QuestionPair& pair, int b,
                                                           Rng& rng) const = 0;
};

// Named presets: "oracle" (programs expressing the synthetic planted
// signals), "plausible" (reasonable but imperfect programs), "mixed" (fixed
// proportions of broken / schema-violating / all-NA candidates, for
// generation-accounting tests).
std::shared_ptr<const MockBank> make_bank(const std::string& name);

}  // namespace featforge::llm
