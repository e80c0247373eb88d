#pragma once

#include "featforge/cohort.hpp"
#include "featforge/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace featforge::synth {

// Seeded synthetic irregular cohorts with planted, documented signal. Three
// latent features drive the label: the observed nadir of variable 0 in the
// final quarter of the window, the ratio of the fitted trends of variables
// 1 and 2, and the observation count of variable 3 (informative sparsity).
// All three are expressible with the temporal tools, so a bank holding the
// matching programs demonstrates the pipeline's ceiling.
struct SynthSpec {
    int n_patients = 2000;
    int n_variables = 8;  // >= 4; variables beyond the first four are noise
    double horizon = 48.0;
    double rate_min = 0.15;  // base sampling rate range, observations per hour
    double rate_max = 0.5;
    double noise_scale = 2.0;
    double sparsity_sigma = 0.3;  // per-patient log-normal rate multiplier
    bool label_dependent_sparsity = true;
    double sparse_factor = 1.6;  // positive-class rate multiplier on variable 3
    double target_prevalence = 0.25;
    std::uint64_t seed = 7;

    void validate() const;
    static SynthSpec from_config(const ConfigFile& config);
};

struct LatentRow {
    std::string patient_id;
    double window_nadir = 0.0;
    double slope_ratio = 0.0;
    double sparse_count = 0.0;
    int label = 0;
};

struct SynthResult {
    cohort::Cohort cohort;
    std::vector<LatentRow> latents;  // cohort record order
};

SynthResult generate(const SynthSpec& spec);

// Emits the cohort-store three-file format plus schema.json and latent.csv.
void write_synth(const SynthResult& result, const std::string& dir);

std::vector<LatentRow> load_latents(const std::string& path);

// Names of the designated variables for a given spec (nadir carrier, trend
// numerator, trend denominator, sparse variable).
std::string variable_name(int index);

}  // namespace featforge::synth
