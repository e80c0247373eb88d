#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "featforge/evaluation.hpp"
#include "featforge/synth.hpp"
#include "featforge/toolkit.hpp"
#include "helpers.hpp"

#include <filesystem>
#include <fstream>

using namespace featforge;
using namespace featforge::synth;

namespace {

SynthSpec small_spec(std::uint64_t seed = 7) {
    SynthSpec spec;
    spec.n_patients = 400;
    spec.seed = seed;
    return spec;
}

extraction::FeatureMatrix latent_matrix(const std::vector<LatentRow>& rows) {
    extraction::FeatureMatrix m;
    m.values.resize(static_cast<Eigen::Index>(rows.size()), 3);
    m.mask.setZero(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.patient_ids.push_back(rows[i].patient_id);
        m.values(static_cast<Eigen::Index>(i), 0) = rows[i].window_nadir;
        m.values(static_cast<Eigen::Index>(i), 1) = rows[i].slope_ratio;
        m.values(static_cast<Eigen::Index>(i), 2) = rows[i].sparse_count;
    }
    m.columns = {{"nadir", "latent:nadir"}, {"ratio", "latent:ratio"}, {"count", "latent:count"}};
    m.error_counts.assign(3, 0);
    return m;
}

std::vector<int> latent_labels(const std::vector<LatentRow>& rows) {
    std::vector<int> out;
    for (const auto& r : rows) out.push_back(r.label);
    return out;
}

}  // namespace

TEST_CASE("synth: determinism, file-level" * doctest::timeout(120)) {
    auto result1 = generate(small_spec());
    auto result2 = generate(small_spec());
    CHECK(result1.cohort == result2.cohort);

    auto dir1 = std::filesystem::temp_directory_path() / "ff_synth_a";
    auto dir2 = std::filesystem::temp_directory_path() / "ff_synth_b";
    write_synth(result1, dir1.string());
    write_synth(result2, dir2.string());
    for (const char* name : {"events.csv", "statics.csv", "labels.csv", "schema.json", "latent.csv"}) {
        std::ifstream a(dir1 / name), b(dir2 / name);
        std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
        CAPTURE(name);
        CHECK(sa == sb);
        CHECK_FALSE(sa.empty());
    }
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("synth: structural invariants") {
    auto result = generate(small_spec(3));
    const auto& cohort = result.cohort;
    REQUIRE(cohort.records.size() == 400);
    double prevalence = cohort.prevalence();
    CHECK(prevalence >= 0.05);
    CHECK(prevalence <= 0.5);
    for (const auto& rec : cohort.records) {
        CHECK(rec.events.total_observations() >= 1);
        for (const auto& [name, col] : rec.events.columns()) {
            for (std::size_t k = 1; k < col.size(); ++k) CHECK(col[k - 1].time < col[k].time);
            for (const auto& obs : col) {
                CHECK(obs.time >= 0);
                CHECK(obs.time <= rec.horizon);
                CHECK(std::isfinite(obs.value));
            }
        }
    }
    CHECK(cohort.schema.variables.size() == 8);
    CHECK(cohort.schema.static_covariate_names == std::vector<std::string>{"age", "site"});
}

TEST_CASE("synth: latents recompute from the emitted files via the toolkit" * doctest::timeout(120)) {
    auto result = generate(small_spec(11));
    auto dir = std::filesystem::temp_directory_path() / "ff_synth_latents";
    write_synth(result, dir.string());

    auto reloaded = cohort::load_cohort(dir.string());
    auto latents = load_latents((dir / "latent.csv").string());
    REQUIRE(latents.size() == reloaded.records.size());
    for (std::size_t i = 0; i < latents.size(); ++i) {
        const auto& rec = reloaded.records[i];
        REQUIRE(rec.patient_id == latents[i].patient_id);
        double h = rec.horizon;

        auto window = toolkit::get_in_window(rec, "var00", h - h / 4.0, h);
        REQUIRE_FALSE(window.empty());
        double nadir = window[0].value;
        for (const auto& obs : window) nadir = std::min(nadir, obs.value);
        CHECK(std::fabs(nadir - latents[i].window_nadir) <= 1e-9 * std::max(1.0, std::fabs(nadir)));

        // independent slope route (normal equations, uncentered)
        auto slope_of = [](toolkit::SeriesView s) {
            double n = double(s.size()), st = 0, sv = 0, stt = 0, stv = 0;
            for (const auto& obs : s) {
                st += obs.time;
                sv += obs.value;
                stt += obs.time * obs.time;
                stv += obs.time * obs.value;
            }
            return (stv - st * sv / n) / (stt - st * st / n);
        };
        double ratio = slope_of(toolkit::get_all_measurements(rec, "var01")) /
                       slope_of(toolkit::get_all_measurements(rec, "var02"));
        CHECK(std::fabs(ratio - latents[i].slope_ratio) <= 1e-9 * std::max(1.0, std::fabs(ratio)));

        CHECK(toolkit::count_measurements(rec, "var03") == latents[i].sparse_count);
        CHECK(reloaded.label_of(rec.patient_id) == latents[i].label);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("synth: label-dependent sparsity shifts class mean counts by the factor" *
          doctest::timeout(120)) {
    auto spec = small_spec(5);
    spec.n_patients = 2000;
    spec.sparse_factor = 1.6;
    spec.label_dependent_sparsity = true;
    auto result = generate(spec);
    double pos_total = 0, neg_total = 0, pos_n = 0, neg_n = 0;
    for (const auto& row : result.latents) {
        if (row.label) {
            pos_total += row.sparse_count;
            pos_n += 1;
        } else {
            neg_total += row.sparse_count;
            neg_n += 1;
        }
    }
    double observed_factor = (pos_total / pos_n) / (neg_total / neg_n);
    CHECK(observed_factor == doctest::Approx(1.6).epsilon(0.10));
}

TEST_CASE("synth: latent oracle reaches AUROC >= 0.85 on a fresh draw" * doctest::timeout(300)) {
    auto train_result = generate(small_spec(21));
    auto test_result = generate(small_spec(22));  // fresh draw

    auto ztrain = latent_matrix(train_result.latents);
    auto ztest = latent_matrix(test_result.latents);
    auto model = evaluation::train(ztrain, latent_labels(train_result.latents), {}, 1);
    auto scores = evaluation::predict(model, ztest);
    std::vector<double> s(scores.data(), scores.data() + scores.size());
    double oracle_auroc = evaluation::auroc(s, latent_labels(test_result.latents));
    CHECK(oracle_auroc >= 0.85);

    // BL features alone must not close the gap to the latent oracle
    auto bl_train = extraction::baseline_features(train_result.cohort);
    auto bl_test = extraction::baseline_features(test_result.cohort, train_result.cohort.schema);
    auto bl_model = evaluation::train(bl_train, latent_labels(train_result.latents), {}, 1);
    auto bl_scores = evaluation::predict(bl_model, bl_test);
    std::vector<double> bs(bl_scores.data(), bl_scores.data() + bl_scores.size());
    double bl_auroc = evaluation::auroc(bs, latent_labels(test_result.latents));
    CHECK(oracle_auroc > bl_auroc);
    MESSAGE("latent oracle AUROC " << oracle_auroc << " vs BL AUROC " << bl_auroc);
}

TEST_CASE("synth: spec validation rejects nonsense") {
    SynthSpec bad;
    bad.n_variables = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    SynthSpec bad2;
    bad2.target_prevalence = 0.7;
    CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
    SynthSpec bad3;
    bad3.rate_max = 0.01;
    CHECK_THROWS_AS(bad3.validate(), std::invalid_argument);
}

TEST_CASE("synth: config round-trip") {
    auto cfg = ConfigFile::parse_string(
        "[synth]\nn_patients = 500\nn_variables = 6\nhorizon = 24\nsparse_factor = 2.0\nseed = 99\n");
    auto spec = SynthSpec::from_config(cfg);
    CHECK(spec.n_patients == 500);
    CHECK(spec.n_variables == 6);
    CHECK(spec.horizon == 24.0);
    CHECK(spec.sparse_factor == 2.0);
    CHECK(spec.seed == 99);
    CHECK(spec.rate_min == 0.15);  // untouched default
}
