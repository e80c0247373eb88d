#include "featforge/evaluation.hpp"

#include "featforge/hash.hpp"
#include "featforge/log.hpp"
#include "featforge/num.hpp"
#include "featforge/rng.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace featforge::evaluation {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Imputed + standardized design with indicator columns appended, using the
// model's train-fitted statistics.
Eigen::MatrixXd design_matrix(const Model& model, const extraction::FeatureMatrix& matrix) {
    const Eigen::Index n = matrix.rows();
    const Eigen::Index d = matrix.cols();
    const Eigen::Index k = static_cast<Eigen::Index>(model.indicator_columns.size());
    Eigen::MatrixXd X(n, d + k);
    for (Eigen::Index c = 0; c < d; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
            double v = matrix.mask(r, c) ? model.impute_medians(c) : matrix.values(r, c);
            X(r, c) = (v - model.standardize_mean(c)) / model.standardize_scale(c);
        }
    }
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::Index src = model.indicator_columns[static_cast<std::size_t>(j)];
        for (Eigen::Index r = 0; r < n; ++r) X(r, d + j) = matrix.mask(r, src) ? 1.0 : 0.0;
    }
    return X;
}

}  // namespace

Model train(const extraction::FeatureMatrix& train_matrix, const std::vector<int>& labels,
            const PredictorSpec& spec, std::uint64_t seed) {
    (void)seed;  // zero-initialized Newton iterations are already deterministic
    const Eigen::Index n = train_matrix.rows();
    const Eigen::Index d = train_matrix.cols();
    if (static_cast<std::size_t>(n) != labels.size())
        throw std::invalid_argument("train: label count does not match matrix rows");
    int positives = std::accumulate(labels.begin(), labels.end(), 0);
    if (positives == 0 || positives == static_cast<int>(labels.size()))
        throw std::invalid_argument("train: both classes must be present");

    Model model;
    model.columns = train_matrix.columns;
    model.impute_medians.resize(d);
    model.standardize_mean.resize(d);
    model.standardize_scale.resize(d);

    for (Eigen::Index c = 0; c < d; ++c) {
        std::vector<double> present;
        present.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index r = 0; r < n; ++r)
            if (!train_matrix.mask(r, c)) present.push_back(train_matrix.values(r, c));
        if (present.empty()) {
            model.impute_medians(c) = 0.0;
        } else {
            std::sort(present.begin(), present.end());
            model.impute_medians(c) = quantile_sorted(present, 0.5);
        }
        if (present.size() < static_cast<std::size_t>(n)) model.indicator_columns.push_back(static_cast<int>(c));
    }
    // means/stds over the imputed training column
    for (Eigen::Index c = 0; c < d; ++c) {
        double total = 0;
        for (Eigen::Index r = 0; r < n; ++r)
            total += train_matrix.mask(r, c) ? model.impute_medians(c) : train_matrix.values(r, c);
        double mean = total / static_cast<double>(n);
        double ss = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            double v = train_matrix.mask(r, c) ? model.impute_medians(c) : train_matrix.values(r, c);
            ss += (v - mean) * (v - mean);
        }
        double stddev = std::sqrt(ss / static_cast<double>(n));
        model.standardize_mean(c) = mean;
        model.standardize_scale(c) = stddev == 0.0 ? 1.0 : stddev;
    }

    Eigen::MatrixXd X = design_matrix(model, train_matrix);
    const Eigen::Index p = X.cols();
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) y(r) = labels[static_cast<std::size_t>(r)];

    // Newton iterations on the penalized log-loss; intercept unpenalized.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);  // [weights ; intercept]
    Eigen::MatrixXd A(n, p + 1);
    A.leftCols(p) = X;
    A.col(p).setOnes();
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, spec.l2_strength);
    penalty(p) = 0.0;

    model.converged = false;
    int iter = 0;
    for (; iter < spec.max_iterations; ++iter) {
        Eigen::VectorXd z = A * theta;
        Eigen::VectorXd prob = z.unaryExpr([](double v) { return sigmoid(v); });
        Eigen::VectorXd grad = A.transpose() * (prob - y) + penalty.cwiseProduct(theta);
        if (grad.lpNorm<Eigen::Infinity>() < spec.tolerance) {
            model.converged = true;
            break;
        }
        Eigen::VectorXd w = (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10);
        Eigen::MatrixXd H = A.transpose() * w.asDiagonal() * A;
        H.diagonal() += penalty;
        theta -= H.ldlt().solve(grad);
    }
    model.iterations = iter;
    if (!model.converged)
        log_warn("train: did not converge in " + std::to_string(spec.max_iterations) + " iterations");

    Eigen::VectorXd z = A * theta;
    double loss = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
        double prob = std::clamp(sigmoid(z(r)), 1e-12, 1.0 - 1e-12);
        loss -= y(r) * std::log(prob) + (1.0 - y(r)) * std::log(1.0 - prob);
    }
    loss += 0.5 * spec.l2_strength * theta.head(p).squaredNorm();
    model.final_loss = loss;
    model.weights = theta.head(p);
    model.intercept = theta(p);
    return model;
}

Eigen::VectorXd predict(const Model& model, const extraction::FeatureMatrix& matrix) {
    if (matrix.columns != model.columns) {
        std::set<std::string> expected, got;
        for (const auto& c : model.columns) expected.insert(c.provenance);
        for (const auto& c : matrix.columns) got.insert(c.provenance);
        std::string missing, extra;
        for (const auto& p : expected)
            if (!got.count(p)) missing += (missing.empty() ? "" : ", ") + p;
        for (const auto& p : got)
            if (!expected.count(p)) extra += (extra.empty() ? "" : ", ") + p;
        if (missing.empty() && extra.empty())
            throw std::runtime_error("predict: column order differs from training columns");
        throw std::runtime_error("predict: column mismatch; missing: [" + missing + "], extra: [" +
                                 extra + "]");
    }
    Eigen::MatrixXd X = design_matrix(model, matrix);
    Eigen::VectorXd z = (X * model.weights).array() + model.intercept;
    return z.unaryExpr([](double v) { return sigmoid(v); });
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auroc: size mismatch");
    const std::size_t n = scores.size();
    std::int64_t n_pos = 0;
    for (int y : labels) n_pos += y ? 1 : 0;
    std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auroc: both classes must be present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // 2 * rank-sum of positives, exact in integers (tie-averaged ranks are
    // half-integers, so doubling keeps everything integral)
    std::int64_t twice_rank_sum = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        // 1-based ranks i+1 .. j; doubled average is (i+1) + j
        std::int64_t doubled_avg_rank = static_cast<std::int64_t>(i + 1) + static_cast<std::int64_t>(j);
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) twice_rank_sum += doubled_avg_rank;
        i = j;
    }
    std::int64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    return static_cast<double>(twice_u) / static_cast<double>(2 * n_pos * n_neg);
}

std::pair<double, double> bootstrap_ci(std::span<const double> scores, std::span<const int> labels,
                                       int n_boot, std::uint64_t seed, int n_workers,
                                       const ResampleObserver& observer) {
    if (n_boot < 1) throw std::invalid_argument("bootstrap_ci: n_boot must be >= 1");
    std::vector<int> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(static_cast<int>(i));
    if (pos.empty() || neg.empty())
        throw std::invalid_argument("bootstrap_ci: both classes must be present");

    std::vector<double> stats(static_cast<std::size_t>(n_boot));
    auto run_resample = [&](int b) {
        Rng rng(mix_hash(seed, static_cast<std::uint64_t>(b) + 1));
        std::vector<int> indices;
        indices.reserve(labels.size());
        for (std::size_t k = 0; k < pos.size(); ++k) indices.push_back(pos[rng.below(pos.size())]);
        for (std::size_t k = 0; k < neg.size(); ++k) indices.push_back(neg[rng.below(neg.size())]);
        if (observer) observer(indices);
        std::vector<double> s(indices.size());
        std::vector<int> y(indices.size());
        for (std::size_t k = 0; k < indices.size(); ++k) {
            s[k] = scores[static_cast<std::size_t>(indices[k])];
            y[k] = labels[static_cast<std::size_t>(indices[k])];
        }
        stats[static_cast<std::size_t>(b)] = auroc(s, y);
    };

    int workers = std::max(1, std::min(n_workers, n_boot));
    if (workers == 1 || observer) {  // observers see resamples in order
        for (int b = 0; b < n_boot; ++b) run_resample(b);
    } else {
        std::atomic<int> next{0};
        auto work = [&] {
            while (true) {
                int b = next.fetch_add(1);
                if (b >= n_boot) break;
                run_resample(b);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::sort(stats.begin(), stats.end());
    return {quantile_sorted(stats, 0.025), quantile_sorted(stats, 0.975)};
}

double mutual_information(std::span<const double> column, std::span<const std::uint8_t> mask,
                          std::span<const int> labels, int n_bins) {
    if (n_bins < 2) throw std::invalid_argument("mutual_information: n_bins must be >= 2");
    if (column.size() != labels.size() || (!mask.empty() && mask.size() != column.size()))
        throw std::invalid_argument("mutual_information: size mismatch");
    const std::size_t n = column.size();
    if (n == 0) return 0.0;

    auto masked = [&](std::size_t i) { return !mask.empty() && mask[i] != 0; };

    std::vector<double> present;
    present.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!masked(i)) present.push_back(column[i]);
    std::sort(present.begin(), present.end());

    std::vector<double> edges;  // equal-frequency bin edges
    if (!present.empty()) {
        for (int j = 1; j < n_bins; ++j)
            edges.push_back(quantile_sorted(present, static_cast<double>(j) / n_bins));
    }
    auto bin_of = [&](std::size_t i) -> int {
        if (masked(i)) return n_bins;  // dedicated bin for missing cells
        double v = column[i];
        return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
    };

    std::vector<std::array<double, 2>> joint(static_cast<std::size_t>(n_bins) + 1, {0.0, 0.0});
    double label_counts[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        int y = labels[i] ? 1 : 0;
        joint[static_cast<std::size_t>(bin_of(i))][y] += 1.0;
        label_counts[y] += 1.0;
    }

    const double total = static_cast<double>(n);
    double mi = 0.0;
    for (const auto& cell : joint) {
        double row_total = cell[0] + cell[1];
        if (row_total == 0.0) continue;
        for (int y = 0; y < 2; ++y) {
            if (cell[y] == 0.0 || label_counts[y] == 0.0) continue;
            double p_xy = cell[y] / total;
            double p_x = row_total / total;
            double p_y = label_counts[y] / total;
            mi += p_xy * std::log(p_xy / (p_x * p_y));
        }
    }
    return std::max(mi, 0.0);
}

double mutual_information_column(const extraction::FeatureMatrix& matrix, int column,
                                 const std::vector<int>& labels, int n_bins) {
    const Eigen::Index c = column;
    std::vector<double> values(static_cast<std::size_t>(matrix.rows()));
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(matrix.rows()));
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        values[static_cast<std::size_t>(r)] = matrix.mask(r, c) ? 0.0 : matrix.values(r, c);
        mask[static_cast<std::size_t>(r)] = matrix.mask(r, c);
    }
    return mutual_information(values, mask, labels, n_bins);
}

pipeline::FeatureRegistry select_best_of_b(const pipeline::FeatureRegistry& registry,
                                           const extraction::FeatureMatrix& train_matrix,
                                           const std::vector<int>& labels, int n_bins) {
    // group valid programs by prompt, preserving registry order
    std::vector<std::string> group_order;
    std::map<std::string, std::vector<const pipeline::FeatureProgram*>> groups;
    for (const auto* p : registry.valid_programs()) {
        auto [it, inserted] = groups.try_emplace(p->prompt_hash);
        if (inserted) group_order.push_back(p->prompt_hash);
        it->second.push_back(p);
    }

    std::set<std::string> keep;
    for (const auto& key : group_order) {
        const pipeline::FeatureProgram* best = nullptr;
        double best_mi = -1.0;
        for (const auto* p : groups[key]) {
            int col = train_matrix.column_index_by_provenance("program:" + p->id);
            if (col < 0)
                throw std::runtime_error("select_best_of_b: matrix has no column for program " + p->id);
            double mi = mutual_information_column(train_matrix, col, labels, n_bins);
            if (mi > best_mi) {  // strict: ties keep the earlier registry entry
                best_mi = mi;
                best = p;
            }
        }
        if (best) keep.insert(best->id);
    }

    pipeline::FeatureRegistry out;
    out.manifest = registry.manifest;
    std::int64_t dropped = 0;
    for (const auto& p : registry.programs) {
        if (p.status != pipeline::ProgramStatus::valid) {
            out.programs.push_back(p);
            continue;
        }
        if (keep.count(p.id)) out.programs.push_back(p);
        else ++dropped;
    }
    out.manifest.counters["best_of_b_groups"] = static_cast<std::int64_t>(group_order.size());
    out.manifest.counters["best_of_b_dropped"] = dropped;
    return out;
}

std::vector<EvalReport> evaluate_pipeline(const std::vector<MethodMatrices>& methods,
                                          const std::vector<int>& labels_train,
                                          const std::vector<int>& labels_test,
                                          const PredictorSpec& spec, int n_boot, std::uint64_t seed) {
    if (methods.empty()) return {};
    for (const auto& m : methods) {
        if (m.train->patient_ids != methods.front().train->patient_ids ||
            m.test->patient_ids != methods.front().test->patient_ids)
            throw std::runtime_error("evaluate_pipeline: methods must share the same split and row order");
    }
    std::vector<EvalReport> reports;
    for (const auto& method : methods) {
        Model model = train(*method.train, labels_train, spec, seed);
        Eigen::VectorXd scores = predict(model, *method.test);
        std::vector<double> s(scores.data(), scores.data() + scores.size());
        double point = auroc(s, labels_test);
        auto [lower, upper] = bootstrap_ci(s, labels_test, n_boot, seed);
        EvalReport report;
        report.method = method.name;
        report.auroc_value = point;
        report.ci_lower = lower;
        report.ci_upper = upper;
        report.n_boot = n_boot;
        report.seed = seed;
        report.n_train = static_cast<int>(labels_train.size());
        report.n_test = static_cast<int>(labels_test.size());
        report.train_loss = model.final_loss;
        report.train_iterations = model.iterations;
        reports.push_back(report);
        log_info("stage=evaluate method=" + method.name + " auroc=" + format_double(point) +
                 " half_width=" + format_double(report.half_width()));
    }
    return reports;
}

std::string render_report_csv(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "method,auroc,ci_lower,ci_upper,half_width,n_train,n_test,n_boot,seed\n";
    for (const auto& r : reports) {
        out << r.method << "," << format_double(r.auroc_value) << "," << format_double(r.ci_lower) << ","
            << format_double(r.ci_upper) << "," << format_double(r.half_width()) << "," << r.n_train
            << "," << r.n_test << "," << r.n_boot << "," << r.seed << "\n";
    }
    return out.str();
}

std::string render_report_text(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    for (const auto& r : reports) {
        out << r.method << ": AUROC " << format_double(r.auroc_value) << " (95% CI "
            << format_double(r.ci_lower) << " .. " << format_double(r.ci_upper) << ", half-width "
            << format_double(r.half_width()) << "), n_train=" << r.n_train << ", n_test=" << r.n_test
            << "\n";
    }
    return out.str();
}

}  // namespace featforge::evaluation
