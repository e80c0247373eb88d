#include "featforge/cohort.hpp"
#include "featforge/config.hpp"
#include "featforge/csv.hpp"
#include "featforge/evaluation.hpp"
#include "featforge/extraction.hpp"
#include "featforge/generation.hpp"
#include "featforge/log.hpp"
#include "featforge/num.hpp"
#include "featforge/runner.hpp"
#include "featforge/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace featforge;

namespace {

// flags shared by every subcommand
struct Common {
    std::string config_path;
    std::string out;
    long long seed = -1;  // -1: not set on the command line

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Configuration file");
        cmd->add_option("--out", out, "Output path or directory");
        cmd->add_option("--seed", seed, "Seed override");
    }
};

int cmd_ingest(const Common& common, const std::string& events, const std::string& statics,
               const std::string& labels, double horizon, const std::string& task) {
    cohort::IngestReport report;
    auto c = cohort::ingest(events, statics, labels, horizon, &report);
    if (!task.empty()) c.schema.task_description = task;
    std::string out = common.out.empty() ? "cohort_out" : common.out;
    cohort::export_cohort(c, out);
    std::cout << "ingested " << c.records.size() << " patients, " << report.rows_read
              << " event rows (dropped " << report.rows_dropped_after_horizon << " past horizon, "
              << report.rows_dropped_nonfinite << " non-finite; " << report.duplicate_overwrites
              << " duplicate overwrites) -> " << out << "\n";
    return 0;
}

int cmd_synth(const Common& common) {
    synth::SynthSpec spec;
    if (!common.config_path.empty())
        spec = synth::SynthSpec::from_config(ConfigFile::parse_file(common.config_path));
    if (common.seed >= 0) spec.seed = static_cast<std::uint64_t>(common.seed);
    auto result = synth::generate(spec);
    std::string out = common.out.empty() ? "synth_out" : common.out;
    synth::write_synth(result, out);
    std::cout << "synthesized " << result.cohort.records.size() << " patients ("
              << format_double(result.cohort.prevalence()) << " prevalence) -> " << out << "\n";
    return 0;
}

runner::RunConfig load_run_config(const Common& common) {
    if (common.config_path.empty()) throw std::runtime_error("--config is required");
    auto config = runner::RunConfig::from_file(common.config_path);
    if (!common.out.empty()) config.out_dir = common.out;
    if (common.seed >= 0) {
        config.seed = static_cast<std::uint64_t>(common.seed);
        config.gen.seed = config.seed;
        config.provider.mock_seed = config.seed;
        if (config.source == runner::RunConfig::Source::synth)
            config.synth_spec.seed = config.seed;
    }
    return config;
}

int cmd_generate(const Common& common, const std::string& cohort_dir, const std::string& mode,
                 int rounds, int candidates, int questions) {
    auto config = load_run_config(common);
    if (!mode.empty()) config.mode = pipeline::parse_mode(mode);
    if (rounds > 0) config.gen.n_rounds = rounds;
    if (candidates > 0) config.gen.candidates_per_prompt = candidates;
    if (questions > 0) config.gen.n_questions = questions;

    auto train = cohort::load_cohort(cohort_dir);
    if (!config.task_description.empty()) train.schema.task_description = config.task_description;
    auto registry = pipeline::run_generation(train.schema, train.schema.task_description, config.gen,
                                             config.provider, config.mode, train);
    std::string out = common.out.empty() ? "." : common.out;
    fs::create_directories(out);
    pipeline::save_registry(registry, (fs::path(out) / "registry.jsonl").string(),
                            (fs::path(out) / "generation_manifest.json").string());
    std::cout << "generated " << registry.valid_programs().size() << " valid programs ("
              << registry.programs.size() << " candidates) -> " << out << "/registry.jsonl\n";
    return 0;
}

int cmd_extract(const Common& common, const std::string& registry_path, const std::string& cohort_dir,
                bool baseline_only, bool with_baseline, int workers) {
    auto c = cohort::load_cohort(cohort_dir);
    std::string out = common.out.empty() ? "Z.csv" : common.out;

    extraction::FeatureMatrix matrix;
    if (baseline_only) {
        auto vocab = extraction::build_static_vocabulary(c);
        auto bl = extraction::baseline_features(c);
        auto st = extraction::static_features(c, vocab);
        matrix = extraction::concat({&bl, &st});
    } else {
        fs::path manifest = fs::path(registry_path).parent_path() / "generation_manifest.json";
        auto registry = pipeline::load_registry(registry_path, manifest.string());
        auto [generated, report] = extraction::extract(c, registry, {}, workers);
        if (with_baseline) {
            auto vocab = extraction::build_static_vocabulary(c);
            auto bl = extraction::baseline_features(c);
            auto st = extraction::static_features(c, vocab);
            auto base = extraction::concat({&bl, &st});
            matrix = extraction::concat({&base, &generated});
        } else {
            matrix = std::move(generated);
        }
    }
    extraction::export_matrix(matrix, out);
    std::cout << "extracted " << matrix.rows() << " x " << matrix.cols() << " matrix -> " << out << "\n";
    return 0;
}

int cmd_evaluate(const Common& common, const std::string& train_path, const std::string& test_path,
                 const std::string& labels_path, int n_boot, const std::string& name) {
    auto ztrain = extraction::import_matrix(train_path);
    auto ztest = extraction::import_matrix(test_path);

    CsvTable labels_csv = read_csv_file(labels_path);
    std::map<std::string, int> label_map;
    for (const auto& row : labels_csv.rows) label_map[row[0]] = row[1] == "1" ? 1 : 0;
    auto labels_for = [&](const std::vector<std::string>& ids) {
        std::vector<int> out;
        for (const auto& id : ids) {
            auto it = label_map.find(id);
            if (it == label_map.end()) throw std::runtime_error("no label for patient " + id);
            out.push_back(it->second);
        }
        return out;
    };

    std::uint64_t seed = common.seed >= 0 ? static_cast<std::uint64_t>(common.seed) : 0;
    evaluation::PredictorSpec spec;
    if (!common.config_path.empty()) {
        auto file = ConfigFile::parse_file(common.config_path);
        spec.l2_strength = file.get_double("predictor", "l2_strength", spec.l2_strength);
        spec.max_iterations =
            static_cast<int>(file.get_int("predictor", "max_iterations", spec.max_iterations));
        spec.tolerance = file.get_double("predictor", "tolerance", spec.tolerance);
    }
    auto reports = evaluation::evaluate_pipeline({{name, &ztrain, &ztest}}, labels_for(ztrain.patient_ids),
                                                 labels_for(ztest.patient_ids), spec, n_boot, seed);
    std::string csv = evaluation::render_report_csv(reports);
    std::cout << evaluation::render_report_text(reports);
    if (!common.out.empty()) {
        std::ofstream out(common.out, std::ios::binary);
        out << csv;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"featforge: LLM-assisted feature engineering for irregular event series"};
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Normalize raw event/static/label files into a cohort directory");
    Common ingest_common;
    ingest_common.attach(ingest_cmd);
    std::string events, statics, labels, task;
    double horizon = 48.0;
    ingest_cmd->add_option("--events", events, "Event log: patient_id,time,variable,value")->required();
    ingest_cmd->add_option("--statics", statics, "Static covariates: patient_id,<name>,...");
    ingest_cmd->add_option("--labels", labels, "Labels: patient_id,label")->required();
    ingest_cmd->add_option("--horizon", horizon, "Observation window length in hours")->required();
    ingest_cmd->add_option("--task", task, "Task description stored in the schema");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic cohort with planted signal");
    Common synth_common;
    synth_common.attach(synth_cmd);

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Run feature-program generation against a cohort");
    Common gen_common;
    gen_common.attach(gen_cmd);
    std::string gen_cohort, gen_mode;
    int gen_rounds = 0, gen_candidates = 0, gen_questions = 0;
    gen_cmd->add_option("--cohort", gen_cohort, "Cohort directory")->required();
    gen_cmd->add_option("--mode", gen_mode, "uni|multi|both");
    gen_cmd->add_option("--rounds", gen_rounds, "Generation rounds (n_r)");
    gen_cmd->add_option("--candidates", gen_candidates, "Candidates per prompt (B)");
    gen_cmd->add_option("--questions", gen_questions, "Questions per round (n_q)");

    // extract
    auto* ext_cmd = app.add_subcommand("extract", "Execute registry programs over a cohort into a matrix");
    Common ext_common;
    ext_common.attach(ext_cmd);
    std::string ext_registry, ext_cohort;
    bool baseline_only = false, with_baseline = false;
    int ext_workers = 1;
    ext_cmd->add_option("--registry", ext_registry, "registry.jsonl path");
    ext_cmd->add_option("--cohort", ext_cohort, "Cohort directory")->required();
    ext_cmd->add_flag("--baseline-only", baseline_only, "Only baseline + static columns");
    ext_cmd->add_flag("--with-baseline", with_baseline, "Prepend baseline + static columns");
    ext_cmd->add_option("--workers", ext_workers, "Extraction worker threads");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Train on one matrix, evaluate AUROC on another");
    Common eval_common;
    eval_common.attach(eval_cmd);
    std::string eval_train, eval_test, eval_labels, eval_name = "method";
    int n_boot = 1000;
    eval_cmd->add_option("--train", eval_train, "Training matrix CSV")->required();
    eval_cmd->add_option("--test", eval_test, "Test matrix CSV")->required();
    eval_cmd->add_option("--labels", eval_labels, "Labels CSV")->required();
    eval_cmd->add_option("--n-boot", n_boot, "Bootstrap resamples");
    eval_cmd->add_option("--name", eval_name, "Method name in the report");

    // run
    auto* run_cmd = app.add_subcommand("run", "End-to-end pipeline from a declarative config");
    Common run_common;
    run_common.attach(run_cmd);
    std::string run_mode;
    bool run_best_of_b = false;
    run_cmd->add_option("--mode", run_mode, "Override generation mode: uni|multi|both");
    run_cmd->add_flag("--best-of-b", run_best_of_b, "Keep only the max-MI program per prompt");

    // resume
    auto* resume_cmd = app.add_subcommand("resume", "Recompute a run directory from a stage onward");
    Common resume_common;
    resume_common.attach(resume_cmd);
    std::string resume_dir, resume_from;
    resume_cmd->add_option("--run", resume_dir, "Run directory")->required();
    resume_cmd->add_option("--from", resume_from, "Stage: synth|split|generate|extract|evaluate");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed()) return cmd_ingest(ingest_common, events, statics, labels, horizon, task);
        if (synth_cmd->parsed()) return cmd_synth(synth_common);
        if (gen_cmd->parsed())
            return cmd_generate(gen_common, gen_cohort, gen_mode, gen_rounds, gen_candidates, gen_questions);
        if (ext_cmd->parsed()) {
            if (!baseline_only && ext_registry.empty())
                throw std::runtime_error("--registry is required unless --baseline-only is set");
            return cmd_extract(ext_common, ext_registry, ext_cohort, baseline_only, with_baseline,
                               ext_workers);
        }
        if (eval_cmd->parsed())
            return cmd_evaluate(eval_common, eval_train, eval_test, eval_labels, n_boot, eval_name);
        if (run_cmd->parsed()) {
            auto config = load_run_config(run_common);
            if (!run_mode.empty()) config.mode = pipeline::parse_mode(run_mode);
            if (run_best_of_b) config.best_of_b = true;
            return runner::run(config);
        }
        if (resume_cmd->parsed()) return runner::resume(resume_dir, resume_from);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
