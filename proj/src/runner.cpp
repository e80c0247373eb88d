#include "featforge/runner.hpp"

#include "featforge/csv.hpp"
#include "featforge/extraction.hpp"
#include "featforge/hash.hpp"
#include "featforge/log.hpp"
#include "featforge/num.hpp"
#include "featforge/toolkit.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace featforge::runner {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kStageOrder = {"synth", "split", "generate", "extract", "evaluate"};

// --- configuration ------------------------------------------------------------

RunConfig RunConfig::from_file(const std::string& path) {
    return from_config(ConfigFile::parse_file(path));
}

RunConfig RunConfig::from_config(const ConfigFile& file) {
    // the provider section is the one section with no sensible default
    file.require_section("provider");

    RunConfig c;
    c.out_dir = file.get_string("run", "out", std::string("run_out"));
    c.seed = static_cast<std::uint64_t>(file.get_int("run", "seed", 0));
    c.workers = static_cast<int>(file.get_int("run", "workers", 1));

    std::string source = file.get_string("cohort", "source", std::string("synth"));
    if (source == "synth") {
        c.source = Source::synth;
        c.synth_spec = synth::SynthSpec::from_config(file);
    } else if (source == "files") {
        c.source = Source::files;
        c.events_path = file.get_string("cohort", "events");
        c.statics_path = file.get_string("cohort", "statics", std::string(""));
        c.labels_path = file.get_string("cohort", "labels");
        c.horizon = file.get_double("cohort", "horizon");
    } else if (source == "dir") {
        c.source = Source::dir;
        c.cohort_dir = file.get_string("cohort", "dir");
    } else {
        throw std::runtime_error("config: [cohort] source must be synth|files|dir, got " + source);
    }
    c.test_fraction = file.get_double("cohort", "test_fraction", 0.2);

    c.task_description = file.get_string("task", "description", std::string(""));

    c.gen.candidates_per_prompt = static_cast<int>(file.get_int("generation", "candidates_per_prompt", 5));
    c.gen.n_questions = static_cast<int>(file.get_int("generation", "questions", 20));
    c.gen.n_rounds = static_cast<int>(file.get_int("generation", "rounds", 5));
    c.gen.temperature = file.get_double("generation", "temperature", 1.0);
    c.gen.smoke_sample_size = static_cast<int>(file.get_int("generation", "smoke_sample_size", 32));
    c.gen.seed = static_cast<std::uint64_t>(
        file.get_int("generation", "seed", static_cast<long long>(c.seed)));
    c.gen.max_tokens = static_cast<int>(file.get_int("generation", "max_tokens", 4096));
    c.gen.budget.max_steps = file.get_int("generation", "max_steps", 100000);
    c.gen.budget.max_series_ops = file.get_int("generation", "max_series_ops", 10000000);
    c.mode = pipeline::parse_mode(file.get_string("generation", "mode", std::string("both")));
    c.best_of_b = file.get_bool("generation", "best_of_b", false);

    std::string kind = file.get_string("provider", "kind", std::string("mock"));
    if (kind == "mock") {
        c.provider.kind = llm::ProviderConfig::Kind::mock;
    } else if (kind == "http") {
        c.provider.kind = llm::ProviderConfig::Kind::http;
        c.provider.endpoint = file.get_string("provider", "endpoint");
    } else {
        throw std::runtime_error("config: [provider] kind must be mock|http, got " + kind);
    }
    c.provider.mock_bank = file.get_string("provider", "bank", std::string("oracle"));
    c.provider.mock_seed = static_cast<std::uint64_t>(
        file.get_int("provider", "mock_seed", static_cast<long long>(c.seed)));
    c.provider.auth_env = file.get_string("provider", "auth_env", std::string(""));
    c.provider.retry.max_retries = static_cast<int>(file.get_int("provider", "max_retries", 3));
    c.provider.retry.backoff_ms = static_cast<int>(file.get_int("provider", "backoff_ms", 250));
    c.provider.max_in_flight = static_cast<int>(file.get_int("provider", "max_in_flight", 4));
    c.gen.model = file.get_string("provider", "model", std::string("mock"));

    c.predictor.l2_strength = file.get_double("predictor", "l2_strength", 1.0);
    c.predictor.max_iterations = static_cast<int>(file.get_int("predictor", "max_iterations", 100));
    c.predictor.tolerance = file.get_double("predictor", "tolerance", 1e-8);

    c.n_boot = static_cast<int>(file.get_int("evaluation", "n_boot", 1000));
    return c;
}

ConfigFile RunConfig::to_config() const {
    ConfigFile f;
    f.set("run", "out", out_dir);
    f.set("run", "seed", std::to_string(seed));
    f.set("run", "workers", std::to_string(workers));

    switch (source) {
        case Source::synth: f.set("cohort", "source", "synth"); break;
        case Source::files: f.set("cohort", "source", "files"); break;
        case Source::dir: f.set("cohort", "source", "dir"); break;
    }
    if (source == Source::files) {
        f.set("cohort", "events", events_path);
        f.set("cohort", "statics", statics_path);
        f.set("cohort", "labels", labels_path);
        f.set("cohort", "horizon", format_double(horizon));
    }
    if (source == Source::dir) f.set("cohort", "dir", cohort_dir);
    f.set("cohort", "test_fraction", format_double(test_fraction));

    f.set("task", "description", task_description);

    if (source == Source::synth) {
        const auto& s = synth_spec;
        f.set("synth", "n_patients", std::to_string(s.n_patients));
        f.set("synth", "n_variables", std::to_string(s.n_variables));
        f.set("synth", "horizon", format_double(s.horizon));
        f.set("synth", "rate_min", format_double(s.rate_min));
        f.set("synth", "rate_max", format_double(s.rate_max));
        f.set("synth", "noise_scale", format_double(s.noise_scale));
        f.set("synth", "sparsity_sigma", format_double(s.sparsity_sigma));
        f.set("synth", "label_dependent_sparsity", s.label_dependent_sparsity ? "true" : "false");
        f.set("synth", "sparse_factor", format_double(s.sparse_factor));
        f.set("synth", "target_prevalence", format_double(s.target_prevalence));
        f.set("synth", "seed", std::to_string(s.seed));
    }

    f.set("generation", "mode", pipeline::to_string(mode));
    f.set("generation", "candidates_per_prompt", std::to_string(gen.candidates_per_prompt));
    f.set("generation", "questions", std::to_string(gen.n_questions));
    f.set("generation", "rounds", std::to_string(gen.n_rounds));
    f.set("generation", "temperature", format_double(gen.temperature));
    f.set("generation", "smoke_sample_size", std::to_string(gen.smoke_sample_size));
    f.set("generation", "seed", std::to_string(gen.seed));
    f.set("generation", "max_tokens", std::to_string(gen.max_tokens));
    f.set("generation", "max_steps", std::to_string(gen.budget.max_steps));
    f.set("generation", "max_series_ops", std::to_string(gen.budget.max_series_ops));
    f.set("generation", "best_of_b", best_of_b ? "true" : "false");

    f.set("provider", "kind", provider.kind == llm::ProviderConfig::Kind::mock ? "mock" : "http");
    if (provider.kind == llm::ProviderConfig::Kind::http) f.set("provider", "endpoint", provider.endpoint);
    f.set("provider", "bank", provider.mock_bank);
    f.set("provider", "mock_seed", std::to_string(provider.mock_seed));
    f.set("provider", "auth_env", provider.auth_env);
    f.set("provider", "max_retries", std::to_string(provider.retry.max_retries));
    f.set("provider", "backoff_ms", std::to_string(provider.retry.backoff_ms));
    f.set("provider", "max_in_flight", std::to_string(provider.max_in_flight));
    f.set("provider", "model", gen.model);

    f.set("predictor", "l2_strength", format_double(predictor.l2_strength));
    f.set("predictor", "max_iterations", std::to_string(predictor.max_iterations));
    f.set("predictor", "tolerance", format_double(predictor.tolerance));

    f.set("evaluation", "n_boot", std::to_string(n_boot));
    return f;
}

// --- manifest plumbing --------------------------------------------------------

namespace {

std::string file_content_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return hash_hex(buf.str());
}

// for fingerprinting inputs that may not exist yet; the stage itself reports
// the real error
std::string input_hash(const fs::path& path) {
    return fs::exists(path) ? file_content_hash(path) : std::string("absent");
}

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::vector<std::string> applicable_stages(const RunConfig& config) {
    std::vector<std::string> stages;
    for (const auto& s : kStageOrder) {
        if (s == "synth" && config.source != RunConfig::Source::synth) continue;
        stages.push_back(s);
    }
    return stages;
}

// stage fingerprints chain so downstream stages go stale automatically
std::string stage_fingerprint(const RunConfig& c, const std::string& stage,
                              const std::string& previous) {
    std::ostringstream key;
    key << previous << "|" << stage << "|";
    if (stage == "synth") {
        key << c.synth_spec.n_patients << "," << c.synth_spec.n_variables << ","
            << format_double(c.synth_spec.horizon) << "," << format_double(c.synth_spec.rate_min)
            << "," << format_double(c.synth_spec.rate_max) << ","
            << format_double(c.synth_spec.noise_scale) << ","
            << format_double(c.synth_spec.sparsity_sigma) << ","
            << c.synth_spec.label_dependent_sparsity << ","
            << format_double(c.synth_spec.sparse_factor) << ","
            << format_double(c.synth_spec.target_prevalence) << "," << c.synth_spec.seed;
    } else if (stage == "split") {
        key << c.seed << "," << format_double(c.test_fraction) << "," << c.task_description << ",";
        if (c.source == RunConfig::Source::files) {
            key << input_hash(c.events_path) << ","
                << (c.statics_path.empty() ? std::string("-") : input_hash(c.statics_path)) << ","
                << input_hash(c.labels_path) << "," << format_double(c.horizon);
        } else if (c.source == RunConfig::Source::dir) {
            for (const char* name : {"events.csv", "statics.csv", "labels.csv", "schema.json"}) {
                key << input_hash(fs::path(c.cohort_dir) / name) << ",";
            }
        }
    } else if (stage == "generate") {
        key << c.gen.candidates_per_prompt << "," << c.gen.n_questions << "," << c.gen.n_rounds << ","
            << format_double(c.gen.temperature) << "," << c.gen.smoke_sample_size << "," << c.gen.seed
            << "," << c.gen.max_tokens << "," << c.gen.model << "," << c.gen.budget.max_steps << ","
            << c.gen.budget.max_series_ops << "," << pipeline::to_string(c.mode) << ","
            << llm::provider_identity(c.provider) << "," << featscript::kGrammarVersion;
    } else if (stage == "extract") {
        key << c.best_of_b << "," << c.gen.budget.max_steps << "," << c.gen.budget.max_series_ops << ","
            << c.workers;
        // worker count does not change output; included only for transparency
    } else if (stage == "evaluate") {
        key << format_double(c.predictor.l2_strength) << "," << c.predictor.max_iterations << ","
            << format_double(c.predictor.tolerance) << "," << c.n_boot << "," << c.seed;
    }
    return hash_hex(key.str());
}

struct StageArtifacts {
    std::vector<std::string> files;  // relative to run dir
};

StageArtifacts stage_artifacts(const RunConfig& c, const std::string& stage) {
    StageArtifacts a;
    if (stage == "synth") {
        a.files = {"cohort/events.csv", "cohort/statics.csv", "cohort/labels.csv",
                   "cohort/schema.json", "cohort/latent.csv"};
    } else if (stage == "split") {
        a.files = {"split/split.csv"};
        for (const char* part : {"train", "test"})
            for (const char* name : {"events.csv", "statics.csv", "labels.csv", "schema.json"})
                a.files.push_back(std::string("split/") + part + "/" + name);
    } else if (stage == "generate") {
        a.files = {"registry.jsonl", "generation_manifest.json"};
    } else if (stage == "extract") {
        for (const char* name : {"baseline_train", "baseline_test", "generated_train",
                                 "generated_test", "combined_train", "combined_test"}) {
            a.files.push_back(std::string("matrices/") + name + ".csv");
            a.files.push_back(std::string("matrices/") + name + ".csv.provenance.json");
        }
        a.files.push_back("matrices/extraction_report.json");
        if (c.best_of_b) a.files.push_back("registry_selected.jsonl");
    } else if (stage == "evaluate") {
        a.files = {"report.csv", "report.txt"};
    }
    return a;
}

// --- stage implementations ----------------------------------------------------

void exec_synth(const RunConfig& c, const fs::path& dir) {
    auto result = synth::generate(c.synth_spec);
    synth::write_synth(result, (dir / "cohort").string());
}

cohort::Cohort load_input_cohort(const RunConfig& c, const fs::path& dir) {
    switch (c.source) {
        case RunConfig::Source::synth: return cohort::load_cohort((dir / "cohort").string());
        case RunConfig::Source::dir: return cohort::load_cohort(c.cohort_dir);
        case RunConfig::Source::files:
            return cohort::ingest(c.events_path, c.statics_path, c.labels_path, c.horizon);
    }
    throw std::logic_error("unreachable");
}

void exec_split(const RunConfig& c, const fs::path& dir) {
    auto cohort = load_input_cohort(c, dir);
    if (!c.task_description.empty()) cohort.schema.task_description = c.task_description;
    if (cohort.schema.task_description.empty())
        cohort.schema.task_description =
            "Predict the binary outcome from the observation window.";
    auto [train, test] = cohort::split_cohort(cohort, c.test_fraction, c.seed);
    cohort::export_cohort(train, (dir / "split" / "train").string());
    cohort::export_cohort(test, (dir / "split" / "test").string());

    std::ofstream out(dir / "split" / "split.csv", std::ios::binary);
    out << "patient_id,role\n";
    std::set<std::string> test_ids;
    for (const auto& rec : test.records) test_ids.insert(rec.patient_id);
    for (const auto& rec : cohort.records)
        out << csv_join({rec.patient_id, test_ids.count(rec.patient_id) ? "test" : "train"}) << "\n";
    log_info("stage=split n_train=" + std::to_string(train.records.size()) +
             " n_test=" + std::to_string(test.records.size()) +
             " prevalence=" + format_double(cohort.prevalence()));
}

void exec_generate(const RunConfig& c, const fs::path& dir) {
    auto train = cohort::load_cohort((dir / "split" / "train").string());
    auto registry = pipeline::run_generation(train.schema, train.schema.task_description, c.gen,
                                             c.provider, c.mode, train);
    pipeline::save_registry(registry, (dir / "registry.jsonl").string(),
                            (dir / "generation_manifest.json").string());
}

void exec_extract(const RunConfig& c, const fs::path& dir) {
    auto train = cohort::load_cohort((dir / "split" / "train").string());
    auto test = cohort::load_cohort((dir / "split" / "test").string());
    auto registry = pipeline::load_registry((dir / "registry.jsonl").string(),
                                            (dir / "generation_manifest.json").string());

    fs::create_directories(dir / "matrices");

    if (c.best_of_b) {
        auto [gen_train_full, report_full] =
            extraction::extract(train, registry, c.gen.budget, c.workers);
        registry = evaluation::select_best_of_b(registry, gen_train_full, train.label_vector());
        pipeline::save_registry(registry, (dir / "registry_selected.jsonl").string(),
                                (dir / "generation_manifest.json").string());
    }

    auto [gen_train, report_train] = extraction::extract(train, registry, c.gen.budget, c.workers);
    auto [gen_test, report_test] = extraction::extract(test, registry, c.gen.budget, c.workers);

    auto vocabulary = extraction::build_static_vocabulary(train);
    auto bl_train_stats = extraction::baseline_features(train, train.schema);
    auto bl_test_stats = extraction::baseline_features(test, train.schema);
    auto static_train = extraction::static_features(train, vocabulary);
    auto static_test = extraction::static_features(test, vocabulary);
    auto bl_train = extraction::concat({&bl_train_stats, &static_train});
    auto bl_test = extraction::concat({&bl_test_stats, &static_test});
    auto combined_train = extraction::concat({&bl_train, &gen_train});
    auto combined_test = extraction::concat({&bl_test, &gen_test});

    extraction::export_matrix(bl_train, (dir / "matrices" / "baseline_train.csv").string());
    extraction::export_matrix(bl_test, (dir / "matrices" / "baseline_test.csv").string());
    extraction::export_matrix(gen_train, (dir / "matrices" / "generated_train.csv").string());
    extraction::export_matrix(gen_test, (dir / "matrices" / "generated_test.csv").string());
    extraction::export_matrix(combined_train, (dir / "matrices" / "combined_train.csv").string());
    extraction::export_matrix(combined_test, (dir / "matrices" / "combined_test.csv").string());

    json columns = json::array();
    auto combined_report = extraction::summarize(combined_train);
    for (std::size_t i = 0; i < combined_train.columns.size(); ++i) {
        const auto& stats = combined_report.per_column[i];
        columns.push_back({{"name", combined_train.columns[i].name},
                           {"provenance", combined_train.columns[i].provenance},
                           {"non_missing_fraction", stats.non_missing_fraction},
                           {"error_fraction", stats.error_fraction},
                           {"constant", stats.constant}});
    }
    std::ofstream report_out(dir / "matrices" / "extraction_report.json", std::ios::binary);
    report_out << json{{"columns", columns}}.dump(2) << "\n";
    log_info("stage=extract d_baseline=" + std::to_string(bl_train.cols()) +
             " d_generated=" + std::to_string(gen_train.cols()));
}

std::string generated_method_label(const RunConfig& c) {
    std::string label = "BL+generated";
    if (c.mode == pipeline::GenerationMode::uni) label += "[w/o multi]";
    if (c.mode == pipeline::GenerationMode::multi) label += "[w/o uni]";
    if (c.best_of_b) label += "[best-of-B]";
    if (c.gen.candidates_per_prompt == 1) label += "[B=1]";
    if (c.gen.n_rounds == 1) label += "[single-round]";
    return label;
}

void exec_evaluate(const RunConfig& c, const fs::path& dir) {
    auto train = cohort::load_cohort((dir / "split" / "train").string());
    auto test = cohort::load_cohort((dir / "split" / "test").string());
    auto bl_train = extraction::import_matrix((dir / "matrices" / "baseline_train.csv").string());
    auto bl_test = extraction::import_matrix((dir / "matrices" / "baseline_test.csv").string());
    auto combined_train = extraction::import_matrix((dir / "matrices" / "combined_train.csv").string());
    auto combined_test = extraction::import_matrix((dir / "matrices" / "combined_test.csv").string());

    std::vector<evaluation::MethodMatrices> methods = {
        {"BL", &bl_train, &bl_test},
        {generated_method_label(c), &combined_train, &combined_test},
    };
    auto reports = evaluation::evaluate_pipeline(methods, train.label_vector(), test.label_vector(),
                                                 c.predictor, c.n_boot, c.seed);
    std::ofstream csv_out(dir / "report.csv", std::ios::binary);
    csv_out << evaluation::render_report_csv(reports);
    std::ofstream text_out(dir / "report.txt", std::ios::binary);
    text_out << evaluation::render_report_text(reports);
}

void exec_stage(const RunConfig& c, const std::string& stage, const fs::path& dir) {
    if (stage == "synth") exec_synth(c, dir);
    else if (stage == "split") exec_split(c, dir);
    else if (stage == "generate") exec_generate(c, dir);
    else if (stage == "extract") exec_extract(c, dir);
    else if (stage == "evaluate") exec_evaluate(c, dir);
    else throw std::logic_error("unknown stage " + stage);
}

json load_or_init_manifest(const RunConfig& c, const fs::path& dir) {
    fs::path path = dir / "manifest.json";
    if (fs::exists(path)) {
        std::ifstream in(path);
        return json::parse(in);
    }
    json manifest;
    manifest["config_echo"] = c.to_config().to_string();
    manifest["grammar_version"] = featscript::kGrammarVersion;
    manifest["grammar_summary"] = featscript::grammar_summary();
    manifest["tool_docs_univariate"] = toolkit::render_tool_docs(true);
    manifest["tool_docs_multivariate"] = toolkit::render_tool_docs(false);
    manifest["stages"] = json::object();
    return manifest;
}

void write_manifest(const json& manifest, const fs::path& dir) {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
}

void update_meta(json& meta, const fs::path& dir) {
    std::ofstream out(dir / "run_meta.json", std::ios::binary);
    out << meta.dump(2) << "\n";
}

int execute_stages(const RunConfig& config, const fs::path& dir, json& manifest,
                   const std::vector<std::string>& stages, std::size_t start_index) {
    json meta;
    fs::path meta_path = dir / "run_meta.json";
    if (fs::exists(meta_path)) {
        std::ifstream in(meta_path);
        meta = json::parse(in);
    }
    meta["started_at"] = iso_timestamp();

    std::string previous_fp;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::string& stage = stages[i];
        std::string fp = stage_fingerprint(config, stage, previous_fp);
        if (i >= start_index) {
            auto started = std::chrono::steady_clock::now();
            try {
                exec_stage(config, stage, dir);
            } catch (const std::exception& ex) {
                log_error("stage " + stage + " failed: " + ex.what());
                meta["failed_stage"] = stage;
                meta["finished_at"] = iso_timestamp();
                update_meta(meta, dir);
                write_manifest(manifest, dir);
                std::fprintf(stderr, "run failed at stage '%s': %s\n", stage.c_str(), ex.what());
                return 1;
            }
            json entry;
            entry["fingerprint"] = fp;
            json artifacts = json::object();
            for (const auto& rel : stage_artifacts(config, stage).files)
                artifacts[rel] = file_content_hash(dir / rel);
            entry["artifacts"] = artifacts;
            manifest["stages"][stage] = entry;
            write_manifest(manifest, dir);
            meta["stage_wall_seconds"][stage] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            meta.erase("failed_stage");
            update_meta(meta, dir);
        }
        previous_fp = fp;
    }
    meta["finished_at"] = iso_timestamp();
    update_meta(meta, dir);
    return 0;
}

}  // namespace

int run(const RunConfig& config) {
    fs::path dir(config.out_dir);
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "config.ini", std::ios::binary);
        out << config.to_config().to_string();
    }
    json manifest = load_or_init_manifest(config, dir);
    manifest["config_echo"] = config.to_config().to_string();
    auto stages = applicable_stages(config);
    return execute_stages(config, dir, manifest, stages, 0);
}

int resume(const std::string& run_dir, const std::string& from_stage) {
    fs::path dir(run_dir);
    if (!fs::exists(dir / "manifest.json") || !fs::exists(dir / "config.ini"))
        throw std::runtime_error(run_dir + " is not a run directory (missing manifest.json/config.ini)");
    RunConfig config = RunConfig::from_file((dir / "config.ini").string());
    config.out_dir = run_dir;

    json manifest;
    {
        std::ifstream in(dir / "manifest.json");
        manifest = json::parse(in);
    }

    auto stages = applicable_stages(config);

    // current fingerprints, chained
    std::vector<std::string> fingerprints(stages.size());
    {
        std::string previous;
        for (std::size_t i = 0; i < stages.size(); ++i) {
            fingerprints[i] = stage_fingerprint(config, stages[i], previous);
            previous = fingerprints[i];
        }
    }

    auto stage_state = [&](std::size_t i) -> std::string {
        if (!manifest["stages"].contains(stages[i])) return "missing";
        const json& entry = manifest["stages"][stages[i]];
        if (entry.value("fingerprint", "") != fingerprints[i]) return "stale";
        for (const auto& [rel, hash] : entry.at("artifacts").items()) {
            if (!fs::exists(dir / rel)) return "artifact-missing:" + rel;
            if (file_content_hash(dir / rel) != hash.get<std::string>())
                return "artifact-changed:" + rel;
        }
        return "ok";
    };

    std::size_t start = stages.size();
    if (!from_stage.empty()) {
        auto it = std::find(stages.begin(), stages.end(), from_stage);
        if (it == stages.end())
            throw std::runtime_error("unknown or inapplicable stage '" + from_stage + "'");
        start = static_cast<std::size_t>(it - stages.begin());
    } else {
        for (std::size_t i = 0; i < stages.size(); ++i) {
            if (stage_state(i) != "ok") {
                start = i;
                break;
            }
        }
        if (start == stages.size()) {
            log_info("resume: run is complete and consistent; nothing to do");
            return 0;
        }
    }

    // stages before the restart point must be consistent with the manifest
    for (std::size_t i = 0; i < start; ++i) {
        std::string state = stage_state(i);
        if (state != "ok")
            throw std::runtime_error("resume: stage '" + stages[i] +
                                     "' is inconsistent with the run manifest (" + state +
                                     "); refusing to resume from '" + stages[start] + "'");
    }

    log_info("resume: recomputing from stage '" + stages[start] + "'");
    return execute_stages(config, dir, manifest, stages, start);
}

}  // namespace featforge::runner
