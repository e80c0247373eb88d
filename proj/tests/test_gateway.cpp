#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "featforge/featscript.hpp"
#include "featforge/gateway.hpp"
#include "featforge/toolkit.hpp"
#include "helpers.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <thread>

using namespace featforge;
using namespace featforge::llm;
using nlohmann::json;

namespace {

cohort::VariableMeta hr_meta() {
    cohort::VariableMeta meta;
    meta.name = "HR";
    meta.unit = "bpm";
    meta.stats.observation_count = 2;
    meta.stats.patient_coverage_fraction = 1.0;
    meta.stats.mean = 85.0;
    meta.stats.std_dev = 5.0;
    meta.stats.min = 80.0;
    meta.stats.p25 = 82.5;
    meta.stats.median = 85.0;
    meta.stats.p75 = 87.5;
    meta.stats.max = 90.0;
    return meta;
}

cohort::Schema small_schema() {
    auto schema = ff_test::make_schema({"GCS", "HR", "SBP"});
    for (auto& v : schema.variables) v.stats.mean = 1.0;
    return schema;
}

}  // namespace

TEST_CASE("univariate prompt: contents and determinism") {
    PromptOptions opt;
    auto req = build_univariate_prompt("Predict in-hospital mortality.", hr_meta(),
                                       toolkit::render_tool_docs(true), opt);
    CHECK(req.user_text.find("mean=85") != std::string::npos);
    CHECK(req.user_text.find("Predict in-hospital mortality.") != std::string::npos);
    CHECK(req.user_text.find("get_all_measurements") != std::string::npos);
    // univariate tool docs list exactly one tool signature
    std::size_t sigs = 0, pos = 0;
    while ((pos = req.user_text.find(") -> ", pos)) != std::string::npos) {
        ++sigs;
        pos += 4;
    }
    CHECK(req.user_text.find("get_in_window(variable") == std::string::npos);
    CHECK(req.user_text.find("FeatScript") != std::string::npos);
    CHECK(req.user_text.find("Propose 5 ") != std::string::npos);

    auto req2 = build_univariate_prompt("Predict in-hospital mortality.", hr_meta(),
                                        toolkit::render_tool_docs(true), opt);
    CHECK(req.user_text == req2.user_text);
    CHECK(req.system_text == req2.system_text);
    CHECK(prompt_hash(req) == prompt_hash(req2));
}

TEST_CASE("question prompt: counts and variable listing") {
    PromptOptions opt;
    auto req = build_question_prompt("task text", small_schema(), 20, opt);
    CHECK(req.user_text.find("exactly 20") != std::string::npos);
    for (const char* name : {"GCS", "HR", "SBP"})
        CHECK(req.user_text.find(std::string("name=") + name) != std::string::npos);
}

TEST_CASE("multivariate prompt: question, restricted metas, full tool docs") {
    PromptOptions opt;
    QuestionPair pair{"Does HR rise while SBP falls?", {"HR", "SBP"}};
    std::vector<cohort::VariableMeta> metas = {hr_meta()};
    auto req = build_multivariate_prompt("task", pair, metas, toolkit::render_tool_docs(false), opt);
    CHECK(req.user_text.find(pair.question) != std::string::npos);
    for (const char* tool : {"get_all_measurements", "get_in_window", "last_value_before",
                             "count_measurements", "time_since_last"})
        CHECK(req.user_text.find(tool) != std::string::npos);
}

TEST_CASE("parse_candidates: extraction, truncation, robustness") {
    std::string text = "intro\n";
    for (int i = 0; i < 7; ++i)
        text += "```featscript\nprogram_" + std::to_string(i) + "\n```\nfiller\n";
    auto five = parse_candidates(text, 5);
    REQUIRE(five.size() == 5);
    CHECK(five[0] == "program_0");
    CHECK(five[4] == "program_4");
    CHECK(parse_candidates("no fences here", 5).empty());
    auto all = parse_candidates(text, 100);
    CHECK(all.size() == 7);
    // multi-line block
    auto multi = parse_candidates("```\nline1\nline2\n```", 5);
    REQUIRE(multi.size() == 1);
    CHECK(multi[0] == "line1\nline2");
}

TEST_CASE("parse_questions: schema filtering and dedup") {
    auto schema = small_schema();
    std::string text =
        "```questions\n"
        "question: How fast does HR change?\n"
        "variables: HR\n"
        "\n"
        "question: Is SBP related to LACTATE?\n"
        "variables: SBP, LACTATE\n"
        "\n"
        "question: how fast  does hr CHANGE??\n"
        "variables: HR, SBP\n"
        "\n"
        "question: Joint movement of HR and SBP?\n"
        "variables: HR, SBP, HR\n"
        "```\n";
    auto pairs = parse_questions(text, schema);
    REQUIRE(pairs.size() == 2);  // unknown-variable pair dropped, near-duplicate dropped
    CHECK(pairs[0].question == "How fast does HR change?");
    CHECK(pairs[0].variables == std::vector<std::string>{"HR"});
    CHECK(pairs[1].variables == std::vector<std::string>{"HR", "SBP"});  // deduplicated list
    CHECK(parse_questions("", schema).empty());
    // unfenced fallback
    auto bare = parse_questions("question: q1 about HR?\nvariables: HR\n", schema);
    CHECK(bare.size() == 1);
}

TEST_CASE("mock provider: determinism and valid programs") {
    ProviderConfig cfg;
    cfg.kind = ProviderConfig::Kind::mock;
    cfg.mock_seed = 11;
    cfg.mock_bank = "oracle";
    PromptOptions opt;
    auto req = build_univariate_prompt("task", hr_meta(), toolkit::render_tool_docs(true), opt);

    auto r1 = complete(req, cfg);
    auto r2 = complete(req, cfg);
    REQUIRE(r1.ok());
    REQUIRE(r2.ok());
    CHECK(r1.response->completions == r2.response->completions);

    auto candidates = parse_candidates(r1.response->completions[0], 5);
    REQUIRE(candidates.size() == 5);
    for (const auto& src : candidates) {
        CAPTURE(src);
        auto parsed = featscript::parse(src);
        REQUIRE(parsed.ok());
        CHECK(parsed.program->declared_variables == std::set<std::string>{"HR"});
    }
}

TEST_CASE("mock provider: question prompts parse back") {
    ProviderConfig cfg;
    cfg.mock_seed = 3;
    auto schema = small_schema();
    PromptOptions opt;
    auto req = build_question_prompt("task", schema, 6, opt);
    auto res = complete(req, cfg);
    REQUIRE(res.ok());
    auto pairs = parse_questions(res.response->completions[0], schema);
    CHECK(pairs.size() == 6);
    for (const auto& p : pairs) {
        CHECK_FALSE(p.variables.empty());
        for (const auto& v : p.variables) CHECK(schema.has_variable(v));
    }
}

TEST_CASE("complete_batch preserves request order") {
    ProviderConfig cfg;
    cfg.mock_seed = 5;
    cfg.max_in_flight = 4;
    PromptOptions opt;
    std::vector<ChatRequest> requests;
    std::vector<std::string> expected;
    auto schema = small_schema();
    for (const auto& meta : schema.variables) {
        requests.push_back(build_univariate_prompt("task", meta, toolkit::render_tool_docs(true), opt));
        expected.push_back(complete(requests.back(), cfg).response->completions[0]);
    }
    auto results = complete_batch(requests, cfg);
    REQUIRE(results.size() == 3);
    for (std::size_t i = 0; i < results.size(); ++i) {
        REQUIRE(results[i].ok());
        CHECK(results[i].response->completions[0] == expected[i]);
    }
}

TEST_CASE("http provider: retry on 429 then success; payload shape") {
    httplib::Server server;
    std::atomic<int> hits{0};
    json seen_body;
    std::mutex body_mutex;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        int n = ++hits;
        {
            std::lock_guard<std::mutex> lock(body_mutex);
            seen_body = json::parse(req.body);
        }
        if (n == 1) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        json reply = {
            {"choices", json::array({json{{"message", json{{"role", "assistant"},
                                                           {"content", "```featscript\n1 + 1\n```"}}}}})},
            {"usage", {{"total_tokens", 42}}},
        };
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    while (!server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));

    ProviderConfig cfg;
    cfg.kind = ProviderConfig::Kind::http;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.retry.max_retries = 2;
    cfg.retry.backoff_ms = 1;

    ChatRequest req{"system text", "user text", 1.0, 1, 512, "test-model"};
    auto result = complete(req, cfg);
    server.stop();
    server_thread.join();

    REQUIRE(result.ok());
    CHECK(hits.load() == 2);
    CHECK(result.response->completions[0] == "```featscript\n1 + 1\n```");
    CHECK(result.response->provider_metadata.at("total_tokens") == "42");
    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"][1]["content"] == "user text");
    CHECK(seen_body["n"] == 1);
    CHECK(seen_body["temperature"] == 1.0);
}

TEST_CASE("http provider: exhausted retries surface an error") {
    ProviderConfig cfg;
    cfg.kind = ProviderConfig::Kind::http;
    cfg.endpoint = "http://127.0.0.1:1/nothing-listens-here";
    cfg.retry.max_retries = 1;
    cfg.retry.backoff_ms = 1;
    ChatRequest req{"s", "u", 1.0, 1, 16, "m"};
    auto result = complete(req, cfg);
    REQUIRE_FALSE(result.ok());
    CHECK(result.error->message.find("attempts") != std::string::npos);
}
