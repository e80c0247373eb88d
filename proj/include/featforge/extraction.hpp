#pragma once

#include "featforge/cohort.hpp"
#include "featforge/featscript.hpp"
#include "featforge/generation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace featforge::extraction {

struct ColumnInfo {
    std::string name;
    std::string provenance;  // "program:<id>" | "baseline:<var>:<stat>" | "static:<name>[=<token>]"

    bool operator==(const ColumnInfo&) const = default;
};

// N x d design matrix with an explicit missing mask. Masked cells hold NaN
// in `values` and 1 in `mask`; the mask covers exactly the NA and errored
// cells.
struct FeatureMatrix {
    std::vector<std::string> patient_ids;  // row order
    std::vector<ColumnInfo> columns;
    Eigen::MatrixXd values;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;
    std::vector<std::int64_t> error_counts;  // runtime errors per column

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    int column_index(const std::string& name) const;  // -1 when absent
    int column_index_by_provenance(const std::string& provenance) const;
};

// Exact equality: identical ids, columns, error counts, masks, and values on
// unmasked cells.
bool matrices_equal(const FeatureMatrix& a, const FeatureMatrix& b);

struct ExtractionReport {
    struct ColumnStats {
        double non_missing_fraction = 0.0;
        double error_fraction = 0.0;
        bool constant = false;
    };
    std::vector<ColumnStats> per_column;  // parallel to matrix columns
    double wall_seconds = 0.0;            // nondeterministic; kept out of persisted artifacts
};

// Executes every valid registry program over every patient. Runtime errors
// become masked cells with a per-column tally; they gate nothing here
// (unlike smoke testing) so rare pathological records do not lose a
// program's signal on the rest.
std::pair<FeatureMatrix, ExtractionReport> extract(const cohort::Cohort& cohort,
                                                   const pipeline::FeatureRegistry& registry,
                                                   const featscript::EvalBudget& budget = {},
                                                   int n_workers = 1);

// Four summary columns (mean, std, min, max) per schema variable; masked
// where the patient never observed the variable.
FeatureMatrix baseline_features(const cohort::Cohort& cohort, const cohort::Schema& schema);
FeatureMatrix baseline_features(const cohort::Cohort& cohort);

// Static covariates pass through as plain columns: numeric statics as-is,
// categorical ones one-hot over the training-split token vocabulary.
struct StaticVocabulary {
    std::vector<std::string> numeric_names;
    std::map<std::string, std::vector<std::string>> categorical_tokens;  // name -> sorted tokens
};

StaticVocabulary build_static_vocabulary(const cohort::Cohort& train);
FeatureMatrix static_features(const cohort::Cohort& cohort, const StaticVocabulary& vocabulary);

// Column-wise concatenation; requires identical patient row order. Name
// collisions are resolved by provenance-suffixing and logged.
FeatureMatrix concat(const std::vector<const FeatureMatrix*>& matrices);

// Delimiter-separated matrix with an "NA" token for masked cells plus a
// sidecar provenance manifest; import(export(Z)) == Z.
void export_matrix(const FeatureMatrix& matrix, const std::string& path);
FeatureMatrix import_matrix(const std::string& path);

ExtractionReport summarize(const FeatureMatrix& matrix);

}  // namespace featforge::extraction
