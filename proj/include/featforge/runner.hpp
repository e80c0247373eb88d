#pragma once

#include "featforge/config.hpp"
#include "featforge/evaluation.hpp"
#include "featforge/gateway.hpp"
#include "featforge/generation.hpp"
#include "featforge/synth.hpp"

#include <optional>
#include <string>
#include <vector>

namespace featforge::runner {

// Declarative end-to-end configuration; every field falls back to the
// documented default and the whole thing is echoed into the run manifest.
struct RunConfig {
    // [run]
    std::string out_dir;
    std::uint64_t seed = 0;
    int workers = 1;

    // [cohort]
    enum class Source { synth, files, dir };
    Source source = Source::synth;
    std::string events_path, statics_path, labels_path;  // source = files
    double horizon = 48.0;
    std::string cohort_dir;  // source = dir
    synth::SynthSpec synth_spec;  // source = synth ([synth] section)
    double test_fraction = 0.2;

    // [task]
    std::string task_description;

    // [generation]
    pipeline::GenConfig gen;
    pipeline::GenerationMode mode = pipeline::GenerationMode::both;
    bool best_of_b = false;

    // [provider]
    llm::ProviderConfig provider;

    // [predictor]
    evaluation::PredictorSpec predictor;

    // [evaluation]
    int n_boot = 1000;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_config(const ConfigFile& file);
    // Canonical echo; parsing it back yields an equivalent RunConfig.
    ConfigFile to_config() const;
};

extern const std::vector<std::string> kStageOrder;  // synth, split, generate, extract, evaluate

// Executes every stage into config.out_dir. Returns 0 only when all stages
// complete; on failure the failing stage is named on stderr and partial
// artifacts are retained.
int run(const RunConfig& config);

// Recomputes from `from_stage` (or from the first incomplete/stale stage
// when empty), refusing when earlier stages' recorded fingerprints disagree
// with the run directory's config.
int resume(const std::string& run_dir, const std::string& from_stage = "");

}  // namespace featforge::runner
