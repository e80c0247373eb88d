#pragma once

#include "featforge/extraction.hpp"
#include "featforge/generation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace featforge::evaluation {

// L2-regularized logistic regression over preprocessed features. The
// spec'd preprocessing: train-split median imputation, train-split
// standardization, and one appended missingness indicator per column that
// has any masked training cell. Everything is fitted on training rows only.
struct PredictorSpec {
    double l2_strength = 1.0;
    int max_iterations = 100;
    double tolerance = 1e-8;
};

struct Model {
    std::vector<extraction::ColumnInfo> columns;  // expected input columns, by provenance
    Eigen::VectorXd impute_medians;
    Eigen::VectorXd standardize_mean;
    Eigen::VectorXd standardize_scale;
    std::vector<int> indicator_columns;  // input columns that carry an indicator feature
    Eigen::VectorXd weights;             // over [standardized inputs ; indicators]
    double intercept = 0.0;
    double final_loss = 0.0;
    int iterations = 0;
    bool converged = false;
};

Model train(const extraction::FeatureMatrix& train_matrix, const std::vector<int>& labels,
            const PredictorSpec& spec, std::uint64_t seed);

// Scores in [0,1], one per row. Hard error naming missing/extra columns when
// the matrix does not match the training columns by provenance.
Eigen::VectorXd predict(const Model& model, const extraction::FeatureMatrix& matrix);

// Mann-Whitney AUROC with ties counted 1/2, computed exactly (integer
// numerator, one final division). Hard error when labels are single-class.
double auroc(std::span<const double> scores, std::span<const int> labels);

using ResampleObserver = std::function<void(const std::vector<int>& indices)>;

// Stratified bootstrap percentile interval: each resample draws |pos|
// positives and |neg| negatives with replacement, so class counts are
// preserved by construction. Per-resample derived seeds make the interval
// independent of worker count.
std::pair<double, double> bootstrap_ci(std::span<const double> scores, std::span<const int> labels,
                                       int n_boot, std::uint64_t seed, int n_workers = 1,
                                       const ResampleObserver& observer = nullptr);

// Plug-in mutual information (natural log) between an equal-frequency
// discretized column and the binary label; masked cells get a dedicated bin.
double mutual_information(std::span<const double> column, std::span<const std::uint8_t> mask,
                          std::span<const int> labels, int n_bins = 10);

double mutual_information_column(const extraction::FeatureMatrix& matrix, int column,
                                 const std::vector<int>& labels, int n_bins = 10);

// Best-of-B ablation: per prompt group, keep the single program whose column
// has the highest training-split MI; ties break by registry order.
pipeline::FeatureRegistry select_best_of_b(const pipeline::FeatureRegistry& registry,
                                           const extraction::FeatureMatrix& train_matrix,
                                           const std::vector<int>& labels, int n_bins = 10);

struct EvalReport {
    std::string method;
    double auroc_value = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    int n_boot = 0;
    std::uint64_t seed = 0;
    int n_train = 0;
    int n_test = 0;
    double train_loss = 0.0;
    int train_iterations = 0;

    double half_width() const { return (ci_upper - ci_lower) / 2.0; }
};

struct MethodMatrices {
    std::string name;
    const extraction::FeatureMatrix* train;
    const extraction::FeatureMatrix* test;
};

// One report per method, every model trained on the identical split.
std::vector<EvalReport> evaluate_pipeline(const std::vector<MethodMatrices>& methods,
                                          const std::vector<int>& labels_train,
                                          const std::vector<int>& labels_test,
                                          const PredictorSpec& spec, int n_boot, std::uint64_t seed);

std::string render_report_csv(const std::vector<EvalReport>& reports);
std::string render_report_text(const std::vector<EvalReport>& reports);

}  // namespace featforge::evaluation
