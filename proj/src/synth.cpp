#include "featforge/synth.hpp"

#include "featforge/csv.hpp"
#include "featforge/hash.hpp"
#include "featforge/log.hpp"
#include "featforge/num.hpp"
#include "featforge/rng.hpp"
#include "featforge/toolkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace featforge::synth {

namespace {

constexpr double kTwoPi = 6.283185307179586;

std::string patient_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%05d", index);
    return buf;
}

double gauss_bump(double t, double center, double width) {
    double z = (t - center) / width;
    return std::exp(-0.5 * z * z);
}

// Inhomogeneous point process via thinning; rate(t) = base * (1 + 0.6 sin).
std::vector<double> sample_times(Rng& rng, double base_rate, double horizon, double phase) {
    const double lambda_max = base_rate * 1.6;
    std::vector<double> times;
    double t = 0.0;
    while (true) {
        t += rng.exponential(lambda_max);
        if (t > horizon) break;
        double lambda = base_rate * (1.0 + 0.6 * std::sin(kTwoPi * t / horizon + phase));
        if (rng.uniform01() * lambda_max < lambda) times.push_back(t);
    }
    return times;
}

void ensure_distinct_sorted(std::vector<double>& times) {
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
}

double observed_slope(toolkit::SeriesView series) {
    if (series.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double t_mean = 0, v_mean = 0;
    for (const auto& obs : series) {
        t_mean += obs.time;
        v_mean += obs.value;
    }
    t_mean /= static_cast<double>(series.size());
    v_mean /= static_cast<double>(series.size());
    double cov = 0, var = 0;
    for (const auto& obs : series) {
        cov += (obs.time - t_mean) * (obs.value - v_mean);
        var += (obs.time - t_mean) * (obs.time - t_mean);
    }
    if (var == 0) return std::numeric_limits<double>::quiet_NaN();
    return cov / var;
}

struct PatientDraw {
    cohort::PatientRecord record;
    double dip_depth = 0.0;   // label driver for variable 0
    double kappa = 1.0;       // per-patient rate multiplier
    double sparse_base_rate = 0.0;
};

}  // namespace

void SynthSpec::validate() const {
    if (n_patients < 20) throw std::invalid_argument("synth: n_patients must be >= 20");
    if (n_variables < 4) throw std::invalid_argument("synth: n_variables must be >= 4");
    if (!(horizon > 0)) throw std::invalid_argument("synth: horizon must be positive");
    if (!(rate_min > 0) || rate_max < rate_min)
        throw std::invalid_argument("synth: need 0 < rate_min <= rate_max");
    if (!(noise_scale >= 0)) throw std::invalid_argument("synth: noise_scale must be >= 0");
    if (!(sparse_factor > 0)) throw std::invalid_argument("synth: sparse_factor must be positive");
    if (!(target_prevalence > 0.05 && target_prevalence < 0.5))
        throw std::invalid_argument("synth: target_prevalence must lie in (0.05, 0.5)");
}

SynthSpec SynthSpec::from_config(const ConfigFile& config) {
    SynthSpec spec;
    const std::string s = "synth";
    spec.n_patients = static_cast<int>(config.get_int(s, "n_patients", spec.n_patients));
    spec.n_variables = static_cast<int>(config.get_int(s, "n_variables", spec.n_variables));
    spec.horizon = config.get_double(s, "horizon", spec.horizon);
    spec.rate_min = config.get_double(s, "rate_min", spec.rate_min);
    spec.rate_max = config.get_double(s, "rate_max", spec.rate_max);
    spec.noise_scale = config.get_double(s, "noise_scale", spec.noise_scale);
    spec.sparsity_sigma = config.get_double(s, "sparsity_sigma", spec.sparsity_sigma);
    spec.label_dependent_sparsity =
        config.get_bool(s, "label_dependent_sparsity", spec.label_dependent_sparsity);
    spec.sparse_factor = config.get_double(s, "sparse_factor", spec.sparse_factor);
    spec.target_prevalence = config.get_double(s, "target_prevalence", spec.target_prevalence);
    spec.seed = static_cast<std::uint64_t>(config.get_int(s, "seed", static_cast<long long>(spec.seed)));
    return spec;
}

std::string variable_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "var%02d", index);
    return buf;
}

SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    const double horizon = spec.horizon;
    const double window_start = horizon - horizon / 4.0;

    std::vector<PatientDraw> draws;
    draws.reserve(static_cast<std::size_t>(spec.n_patients));

    for (int i = 0; i < spec.n_patients; ++i) {
        Rng rng(mix_hash(spec.seed, static_cast<std::uint64_t>(i) + 1));
        PatientDraw draw;
        draw.record.patient_id = patient_name(i);
        draw.record.horizon = horizon;
        draw.kappa = std::exp(rng.normal(0.0, spec.sparsity_sigma));

        // statics: age (numeric, no signal) and site (categorical, no signal)
        draw.record.statics["age"] = std::floor(rng.normal(60.0, 10.0) * 10.0) / 10.0;
        static const char* kSites[] = {"A", "B", "C"};
        draw.record.statics["site"] = std::string(kSites[rng.below(3)]);

        // variable 0: baseline with a nuisance early dip and a label-driving
        // late dip inside the final quarter of the window
        {
            double base = rng.normal(100.0, 8.0);
            double early_depth = rng.uniform(0.0, 30.0);
            double early_center = rng.uniform(0.10 * horizon, 0.45 * horizon);
            double late_depth = rng.uniform(0.0, 30.0);
            double late_center = rng.uniform(horizon - 0.20 * horizon, horizon - 0.05 * horizon);
            draw.dip_depth = late_depth;

            double rate = rng.uniform(spec.rate_min, spec.rate_max) * draw.kappa;
            auto times = sample_times(rng, rate, horizon, rng.uniform(0.0, kTwoPi));
            bool has_window_obs = false;
            for (double t : times) has_window_obs = has_window_obs || t >= window_start;
            if (!has_window_obs) times.push_back(rng.uniform(window_start, horizon));
            ensure_distinct_sorted(times);
            auto& col = draw.record.events.column(variable_name(0));
            for (double t : times) {
                double value = base - early_depth * gauss_bump(t, early_center, horizon / 12.0) -
                               late_depth * gauss_bump(t, late_center, horizon / 15.0) +
                               rng.normal(0.0, spec.noise_scale);
                col.push_back({t, value});
            }
        }

        // variables 1 and 2: linear trends; their ratio drives the label
        for (int v = 1; v <= 2; ++v) {
            double base = v == 1 ? rng.normal(50.0, 30.0) : rng.normal(80.0, 10.0);
            double slope = v == 1 ? rng.normal(0.0, 0.8) : rng.uniform(0.5, 1.5);
            double rate = rng.uniform(spec.rate_min, spec.rate_max) * draw.kappa;
            auto times = sample_times(rng, rate, horizon, rng.uniform(0.0, kTwoPi));
            while (times.size() < 2) times.push_back(rng.uniform(0.0, horizon));
            ensure_distinct_sorted(times);
            while (times.size() < 2) {  // uniqueness may have collapsed the top-up
                times.push_back(rng.uniform(0.0, horizon));
                ensure_distinct_sorted(times);
            }
            auto& col = draw.record.events.column(variable_name(v));
            for (double t : times)
                col.push_back({t, base + slope * t + rng.normal(0.0, spec.noise_scale)});
        }

        // remaining non-sparse variables: pure noise distractors
        for (int v = 4; v < spec.n_variables; ++v) {
            double base = rng.normal(40.0 + 15.0 * (v - 4), 12.0);
            double rate = rng.uniform(spec.rate_min, spec.rate_max) * draw.kappa;
            auto times = sample_times(rng, rate, horizon, rng.uniform(0.0, kTwoPi));
            ensure_distinct_sorted(times);
            auto& col = draw.record.events.column(variable_name(v));
            for (double t : times) col.push_back({t, base + rng.normal(0.0, spec.noise_scale)});
        }

        draw.sparse_base_rate = rng.uniform(spec.rate_min, spec.rate_max) * draw.kappa;
        draw.record.events.drop_empty_columns();
        draws.push_back(std::move(draw));
    }

    // latent features L1 (observed window nadir) and L2 (trend ratio)
    const std::string var0 = variable_name(0), var1 = variable_name(1), var2 = variable_name(2);
    std::vector<double> nadir(draws.size()), ratio(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        auto window = toolkit::get_in_window(draws[i].record, var0, window_start, horizon);
        double lo = window.front().value;
        for (const auto& obs : window) lo = std::min(lo, obs.value);
        nadir[i] = lo;
        double s1 = observed_slope(toolkit::get_all_measurements(draws[i].record, var1));
        double s2 = observed_slope(toolkit::get_all_measurements(draws[i].record, var2));
        if (!std::isfinite(s1) || !std::isfinite(s2) || s2 == 0.0)
            throw std::logic_error("synth: trend latent undefined; generator guarantees were violated");
        ratio[i] = s1 / s2;
    }

    auto standardized = [](const std::vector<double>& xs) {
        double mean = 0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double ss = 0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        double sd = std::sqrt(ss / static_cast<double>(xs.size()));
        if (sd == 0) sd = 1;
        std::vector<double> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - mean) / sd;
        return out;
    };
    auto nadir_z = standardized(nadir);
    auto ratio_z = standardized(ratio);

    const double beta_nadir = -1.8;  // deeper (lower) nadir raises risk
    const double beta_ratio = 1.2;
    std::vector<double> raw_logit(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i)
        raw_logit[i] = beta_nadir * nadir_z[i] + beta_ratio * ratio_z[i];

    // intercept search so the mean predicted probability hits the target
    auto mean_prob = [&](double intercept) {
        double total = 0;
        for (double z : raw_logit) total += 1.0 / (1.0 + std::exp(-(z + intercept)));
        return total / static_cast<double>(raw_logit.size());
    };
    double lo = -20, hi = 20;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (mean_prob(mid) < spec.target_prevalence ? lo : hi) = mid;
    }
    const double intercept = 0.5 * (lo + hi);

    // label draws; re-draw with a fresh stream if prevalence lands outside
    // the contract bounds
    std::vector<int> labels(draws.size());
    bool feasible = false;
    for (int attempt = 0; attempt < 4 && !feasible; ++attempt) {
        int positives = 0;
        for (std::size_t i = 0; i < draws.size(); ++i) {
            Rng rng(mix_hash(mix_hash(spec.seed, fnv1a64("labels")),
                             mix_hash(static_cast<std::uint64_t>(attempt), static_cast<std::uint64_t>(i))));
            double p = 1.0 / (1.0 + std::exp(-(raw_logit[i] + intercept)));
            labels[i] = rng.bernoulli(p) ? 1 : 0;
            positives += labels[i];
        }
        double prevalence = static_cast<double>(positives) / static_cast<double>(draws.size());
        feasible = prevalence >= 0.05 && prevalence <= 0.5;
        if (!feasible)
            log_warn("synth: prevalence " + format_double(prevalence) + " outside [0.05,0.5]; redrawing");
    }
    if (!feasible) throw std::runtime_error("synth: infeasible prevalence after intercept search");

    // sparse variable 3, optionally label-dependent (informative sparsity)
    const std::string var3 = variable_name(3);
    for (std::size_t i = 0; i < draws.size(); ++i) {
        Rng rng(mix_hash(mix_hash(spec.seed, fnv1a64("sparse")), static_cast<std::uint64_t>(i)));
        double rate = draws[i].sparse_base_rate;
        if (spec.label_dependent_sparsity && labels[i] == 1) rate *= spec.sparse_factor;
        double base = rng.normal(30.0, 5.0);
        auto times = sample_times(rng, rate, horizon, rng.uniform(0.0, kTwoPi));
        ensure_distinct_sorted(times);
        if (!times.empty()) {
            auto& col = draws[i].record.events.column(var3);
            for (double t : times) col.push_back({t, base + rng.normal(0.0, spec.noise_scale)});
        }
    }

    SynthResult result;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        LatentRow row;
        row.patient_id = draws[i].record.patient_id;
        row.window_nadir = nadir[i];
        row.slope_ratio = ratio[i];
        row.sparse_count = toolkit::count_measurements(draws[i].record, var3);
        row.label = labels[i];
        result.latents.push_back(row);
        result.cohort.labels[row.patient_id] = row.label;
        result.cohort.records.push_back(std::move(draws[i].record));
    }
    result.cohort.schema = cohort::compute_schema(result.cohort);
    for (auto& meta : result.cohort.schema.variables) meta.unit = "au";
    result.cohort.schema.static_covariate_names = {"age", "site"};
    result.cohort.schema.task_description =
        "Predict the binary deterioration outcome from the first " + format_double(horizon) +
        " hours of irregularly sampled observations.";
    return result;
}

void write_synth(const SynthResult& result, const std::string& dir) {
    cohort::export_cohort(result.cohort, dir);
    std::ofstream out(std::filesystem::path(dir) / "latent.csv", std::ios::binary);
    out << "patient_id,window_nadir,slope_ratio,sparse_count,label\n";
    for (const auto& row : result.latents) {
        out << csv_join({row.patient_id, format_double(row.window_nadir),
                         format_double(row.slope_ratio), format_double(row.sparse_count),
                         std::to_string(row.label)})
            << "\n";
    }
}

std::vector<LatentRow> load_latents(const std::string& path) {
    CsvTable table = read_csv_file(path);
    std::vector<LatentRow> rows;
    for (const auto& r : table.rows) {
        LatentRow row;
        row.patient_id = r[0];
        row.window_nadir = *parse_double(r[1]);
        row.slope_ratio = *parse_double(r[2]);
        row.sparse_count = *parse_double(r[3]);
        row.label = r[4] == "1" ? 1 : 0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace featforge::synth
