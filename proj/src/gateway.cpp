#include "featforge/gateway.hpp"

#include "featforge/hash.hpp"
#include "featforge/log.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace featforge::llm {

using nlohmann::json;

namespace {

// --- mock prompt classification -------------------------------------------
// The three prompt families have fixed header lines; the mock provider keys
// on them to decide what to fabricate.

std::optional<std::string> find_line_after(const std::string& text, const std::string& header,
                                           const std::string& line_prefix) {
    std::size_t at = text.find(header);
    if (at == std::string::npos) return std::nullopt;
    std::size_t from = at + header.size();
    std::size_t hit = text.find(line_prefix, from);
    if (hit == std::string::npos) return std::nullopt;
    std::size_t start = hit + line_prefix.size();
    std::size_t end = text.find('\n', start);
    return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::vector<std::string> section_names(const std::string& text, const std::string& header) {
    std::vector<std::string> names;
    std::size_t at = text.find(header);
    if (at == std::string::npos) return names;
    std::size_t pos = at + header.size();
    while (true) {
        std::size_t line_end = text.find('\n', pos);
        std::string line = text.substr(pos, line_end == std::string::npos ? std::string::npos : line_end - pos);
        if (line.rfind("name=", 0) == 0) {
            std::size_t stop = line.find(" unit=");
            names.push_back(stop == std::string::npos ? line.substr(5) : line.substr(5, stop - 5));
        } else if (line.rfind("##", 0) == 0 || (line.empty() && !names.empty())) {
            break;
        }
        if (line_end == std::string::npos) break;
        pos = line_end + 1;
    }
    return names;
}

std::string fence_block(const std::string& body, const std::string& tag) {
    return "```" + tag + "\n" + body + "\n```\n";
}

CompletionResult complete_mock(const ChatRequest& request, const ProviderConfig& config) {
    std::shared_ptr<const MockBank> bank =
        config.custom_bank ? config.custom_bank : make_bank(config.mock_bank);
    if (!bank) return {std::nullopt, ProviderError{"unknown mock bank: " + config.mock_bank}};

    std::uint64_t key =
        mix_hash(config.mock_seed, fnv1a64(request.system_text + "\x1e" + request.user_text));

    ChatResponse response;
    response.provider_metadata["provider"] = "mock";
    const std::string& user = request.user_text;
    for (int i = 0; i < request.n_samples; ++i) {
        Rng rng(mix_hash(key, static_cast<std::uint64_t>(i)));
        std::ostringstream out;
        if (user.find("## Target variable\n") != std::string::npos) {
            auto variable = find_line_after(user, "## Target variable\n", "name=");
            if (!variable) return {std::nullopt, ProviderError{"mock: univariate prompt without name="}};
            int b = 5;
            if (auto n = find_line_after(user, "## Instructions\n", "Propose "))
                b = std::max(1, std::atoi(n->c_str()));
            out << "Candidate features for " << *variable << ":\n\n";
            for (const auto& src : bank->univariate_programs(*variable, b, rng))
                out << fence_block(src, "featscript") << "\n";
        } else if (user.find("## Clinical question\n") != std::string::npos) {
            auto question = find_line_after(user, "## Clinical question\n", "");
            auto vars = section_names(user, "## Variables for this question\n");
            int b = 5;
            if (auto n = find_line_after(user, "## Instructions\n", "Propose "))
                b = std::max(1, std::atoi(n->c_str()));
            QuestionPair pair{question.value_or(""), vars};
            out << "Candidate features answering the question:\n\n";
            for (const auto& src : bank->multivariate_programs(pair, b, rng))
                out << fence_block(src, "featscript") << "\n";
        } else if (user.find("## Variables\n") != std::string::npos) {
            int n_questions = 1;
            if (auto n = find_line_after(user, "## Instructions\n", "Propose exactly "))
                n_questions = std::max(1, std::atoi(n->c_str()));
            auto vars = section_names(user, "## Variables\n");
            std::ostringstream body;
            bool first = true;
            for (const auto& pair : bank->question_pairs(vars, n_questions, rng)) {
                if (!first) body << "\n";
                first = false;
                body << "question: " << pair.question << "\n";
                body << "variables: ";
                for (std::size_t k = 0; k < pair.variables.size(); ++k) {
                    if (k) body << ", ";
                    body << pair.variables[k];
                }
                body << "\n";
            }
            out << fence_block(body.str(), "questions");
        } else {
            return {std::nullopt, ProviderError{"mock: unrecognized prompt shape"}};
        }
        response.completions.push_back(out.str());
    }
    return {std::move(response), std::nullopt};
}

// --- http provider ----------------------------------------------------------

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;
};

std::optional<Endpoint> split_endpoint(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) return std::nullopt;
    std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return Endpoint{url, "/"};
    return Endpoint{url.substr(0, slash), url.substr(slash)};
}

CompletionResult complete_http(const ChatRequest& request, const ProviderConfig& config) {
    auto endpoint = split_endpoint(config.endpoint);
    if (!endpoint) return {std::nullopt, ProviderError{"malformed endpoint: " + config.endpoint}};

    httplib::Headers headers;
    if (!config.auth_env.empty()) {
        const char* token = std::getenv(config.auth_env.c_str());
        if (!token)
            return {std::nullopt,
                    ProviderError{"auth environment variable not set: " + config.auth_env}};
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    json body = {
        {"model", request.model_name},
        {"messages",
         json::array({json{{"role", "system"}, {"content", request.system_text}},
                      json{{"role", "user"}, {"content", request.user_text}}})},
        {"temperature", request.temperature},
        {"n", request.n_samples},
        {"max_tokens", request.max_tokens},
    };
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config.retry.max_retries; ++attempt) {
        if (attempt > 0) {
            int delay = config.retry.backoff_ms << (attempt - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client client(endpoint->base);
        client.set_connection_timeout(30, 0);
        client.set_read_timeout(300, 0);

        auto started = std::chrono::steady_clock::now();
        httplib::Result res = client.Post(endpoint->path, headers, payload, "application/json");
        auto elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();

        if (!res) {
            last_error = "network error: " + httplib::to_string(res.error());
            continue;  // transient
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "http status " + std::to_string(res->status);
            continue;  // transient
        }
        if (res->status != 200)
            return {std::nullopt,
                    ProviderError{"http status " + std::to_string(res->status) + ": " + res->body}};

        try {
            json reply = json::parse(res->body);
            const auto& choices = reply.at("choices");
            ChatResponse response;
            for (const auto& choice : choices) {
                response.completions.push_back(choice.at("message").at("content").get<std::string>());
                if (static_cast<int>(response.completions.size()) == request.n_samples) break;
            }
            if (static_cast<int>(response.completions.size()) != request.n_samples)
                return {std::nullopt,
                        ProviderError{"provider returned " + std::to_string(response.completions.size()) +
                                      " completions, expected " + std::to_string(request.n_samples)}};
            response.provider_metadata["latency_ms"] = std::to_string(elapsed_ms);
            if (reply.contains("usage")) {
                const auto& usage = reply["usage"];
                if (usage.contains("total_tokens"))
                    response.provider_metadata["total_tokens"] =
                        std::to_string(usage["total_tokens"].get<long long>());
            }
            return {std::move(response), std::nullopt};
        } catch (const json::exception& ex) {
            return {std::nullopt, ProviderError{std::string("malformed provider payload: ") + ex.what()}};
        }
    }
    return {std::nullopt,
            ProviderError{"request failed after " + std::to_string(config.retry.max_retries + 1) +
                          " attempts: " + last_error}};
}

}  // namespace

std::string provider_identity(const ProviderConfig& config) {
    if (config.kind == ProviderConfig::Kind::mock) {
        std::string bank = config.custom_bank ? "custom" : config.mock_bank;
        return "mock:" + bank + ":seed=" + std::to_string(config.mock_seed);
    }
    return "http:" + config.endpoint;
}

CompletionResult complete(const ChatRequest& request, const ProviderConfig& config) {
    if (request.system_text.empty() || request.user_text.empty())
        return {std::nullopt, ProviderError{"request texts must be nonempty"}};
    if (request.n_samples < 1) return {std::nullopt, ProviderError{"n_samples must be >= 1"}};
    if (request.temperature < 0.0 || request.temperature > 2.0)
        return {std::nullopt, ProviderError{"temperature must lie in [0, 2]"}};
    if (config.kind == ProviderConfig::Kind::mock) return complete_mock(request, config);
    if (config.endpoint.empty()) return {std::nullopt, ProviderError{"http provider needs an endpoint"}};
    return complete_http(request, config);
}

std::vector<CompletionResult> complete_batch(const std::vector<ChatRequest>& requests,
                                             const ProviderConfig& config) {
    std::vector<CompletionResult> results(requests.size());
    if (requests.empty()) return results;
    int workers = std::max(1, std::min<int>(config.max_in_flight, static_cast<int>(requests.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) break;
            results[i] = complete(requests[i], config);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace featforge::llm
