#include "featforge/extraction.hpp"

#include "featforge/csv.hpp"
#include "featforge/hash.hpp"
#include "featforge/log.hpp"
#include "featforge/num.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

namespace featforge::extraction {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

int FeatureMatrix::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return static_cast<int>(i);
    return -1;
}

int FeatureMatrix::column_index_by_provenance(const std::string& provenance) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].provenance == provenance) return static_cast<int>(i);
    return -1;
}

bool matrices_equal(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.patient_ids != b.patient_ids || a.columns != b.columns || a.error_counts != b.error_counts)
        return false;
    if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) return false;
    for (Eigen::Index r = 0; r < a.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.values.cols(); ++c) {
            if (a.mask(r, c) != b.mask(r, c)) return false;
            if (!a.mask(r, c) && a.values(r, c) != b.values(r, c)) return false;
        }
    }
    return true;
}

namespace {

FeatureMatrix make_matrix(const cohort::Cohort& cohort, std::vector<ColumnInfo> columns) {
    FeatureMatrix m;
    for (const auto& rec : cohort.records) m.patient_ids.push_back(rec.patient_id);
    m.columns = std::move(columns);
    const Eigen::Index n = static_cast<Eigen::Index>(m.patient_ids.size());
    const Eigen::Index d = static_cast<Eigen::Index>(m.columns.size());
    m.values = Eigen::MatrixXd::Constant(n, d, kNaN);
    m.mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, d, 1);
    m.error_counts.assign(m.columns.size(), 0);
    return m;
}

void set_cell(FeatureMatrix& m, Eigen::Index row, Eigen::Index col, double value) {
    m.values(row, col) = value;
    m.mask(row, col) = 0;
}

}  // namespace

std::pair<FeatureMatrix, ExtractionReport> extract(const cohort::Cohort& cohort,
                                                   const pipeline::FeatureRegistry& registry,
                                                   const featscript::EvalBudget& budget, int n_workers) {
    auto started = std::chrono::steady_clock::now();
    auto valid = registry.valid_programs();

    std::vector<ColumnInfo> columns;
    std::vector<featscript::Program> programs;
    columns.reserve(valid.size());
    programs.reserve(valid.size());
    for (const auto* p : valid) {
        auto parsed = featscript::parse(p->source_canonical);
        if (!parsed.ok())
            throw std::runtime_error("extract: registry program " + p->id +
                                     " does not parse: " + parsed.error->message);
        programs.push_back(std::move(*parsed.program));
        columns.push_back({"f_" + p->id, "program:" + p->id});
    }

    FeatureMatrix matrix = make_matrix(cohort, std::move(columns));
    std::vector<std::atomic<std::int64_t>> errors(programs.size());
    for (auto& e : errors) e.store(0);

    const Eigen::Index n_rows = matrix.rows();
    // Rows are independent; output does not depend on worker count or
    // scheduling because each (row, column) cell is written exactly once.
    int workers = std::max(1, std::min<int>(n_workers, static_cast<int>(n_rows)));
    std::atomic<Eigen::Index> next_row{0};
    auto work = [&] {
        while (true) {
            Eigen::Index row = next_row.fetch_add(1);
            if (row >= n_rows) break;
            const auto& record = cohort.records[static_cast<std::size_t>(row)];
            for (std::size_t f = 0; f < programs.size(); ++f) {
                auto outcome = featscript::evaluate(programs[f], record, budget);
                if (outcome.is_scalar())
                    set_cell(matrix, row, static_cast<Eigen::Index>(f), outcome.value);
                else if (outcome.is_error())
                    errors[f].fetch_add(1);
                // NA and errors both stay masked
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (std::size_t f = 0; f < programs.size(); ++f)
        matrix.error_counts[f] = errors[f].load();

    ExtractionReport report = summarize(matrix);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(matrix), std::move(report)};
}

FeatureMatrix baseline_features(const cohort::Cohort& cohort, const cohort::Schema& schema) {
    static const char* kStats[] = {"mean", "std", "min", "max"};
    std::vector<ColumnInfo> columns;
    for (const auto& meta : schema.variables)
        for (const char* stat : kStats)
            columns.push_back({meta.name + "_" + stat, "baseline:" + meta.name + ":" + stat});

    FeatureMatrix matrix = make_matrix(cohort, std::move(columns));
    for (Eigen::Index row = 0; row < matrix.rows(); ++row) {
        const auto& record = cohort.records[static_cast<std::size_t>(row)];
        Eigen::Index col = 0;
        for (const auto& meta : schema.variables) {
            const auto* series = record.events.find(meta.name);
            if (!series || series->empty()) {
                col += 4;
                continue;
            }
            double total = 0, lo = series->front().value, hi = lo;
            for (const auto& obs : *series) {
                total += obs.value;
                lo = std::min(lo, obs.value);
                hi = std::max(hi, obs.value);
            }
            const double n = static_cast<double>(series->size());
            double mean = total / n;
            double ss = 0;
            for (const auto& obs : *series) ss += (obs.value - mean) * (obs.value - mean);
            set_cell(matrix, row, col + 0, mean);
            set_cell(matrix, row, col + 1, std::sqrt(ss / n));  // population std
            set_cell(matrix, row, col + 2, lo);
            set_cell(matrix, row, col + 3, hi);
            col += 4;
        }
    }
    return matrix;
}

FeatureMatrix baseline_features(const cohort::Cohort& cohort) {
    return baseline_features(cohort, cohort.schema);
}

StaticVocabulary build_static_vocabulary(const cohort::Cohort& train) {
    StaticVocabulary vocab;
    for (const auto& name : train.schema.static_covariate_names) {
        bool any = false;
        bool all_numeric = true;
        std::set<std::string> tokens;
        for (const auto& rec : train.records) {
            auto it = rec.statics.find(name);
            if (it == rec.statics.end()) continue;
            any = true;
            if (!std::holds_alternative<double>(it->second)) all_numeric = false;
            tokens.insert(cohort::format_static(it->second));
        }
        if (any && all_numeric) {
            vocab.numeric_names.push_back(name);
        } else if (any) {
            vocab.categorical_tokens[name] = {tokens.begin(), tokens.end()};
        }
        // statics never observed in train contribute no columns
    }
    return vocab;
}

FeatureMatrix static_features(const cohort::Cohort& cohort, const StaticVocabulary& vocabulary) {
    std::vector<ColumnInfo> columns;
    for (const auto& name : vocabulary.numeric_names)
        columns.push_back({"static_" + name, "static:" + name});
    for (const auto& [name, tokens] : vocabulary.categorical_tokens)
        for (const auto& token : tokens)
            columns.push_back({"static_" + name + "=" + token, "static:" + name + "=" + token});

    FeatureMatrix matrix = make_matrix(cohort, std::move(columns));
    for (Eigen::Index row = 0; row < matrix.rows(); ++row) {
        const auto& record = cohort.records[static_cast<std::size_t>(row)];
        Eigen::Index col = 0;
        for (const auto& name : vocabulary.numeric_names) {
            auto it = record.statics.find(name);
            if (it != record.statics.end() && std::holds_alternative<double>(it->second))
                set_cell(matrix, row, col, std::get<double>(it->second));
            ++col;  // missing or non-numeric stays masked
        }
        for (const auto& [name, tokens] : vocabulary.categorical_tokens) {
            auto it = record.statics.find(name);
            if (it == record.statics.end()) {
                col += static_cast<Eigen::Index>(tokens.size());  // missing: masked across the group
                continue;
            }
            std::string value = cohort::format_static(it->second);
            for (const auto& token : tokens) {
                set_cell(matrix, row, col, value == token ? 1.0 : 0.0);
                ++col;  // unseen token: all zeros
            }
        }
    }
    return matrix;
}

FeatureMatrix concat(const std::vector<const FeatureMatrix*>& matrices) {
    if (matrices.empty()) throw std::invalid_argument("concat: no matrices");
    const auto& ids = matrices.front()->patient_ids;
    Eigen::Index total_cols = 0;
    for (const auto* m : matrices) {
        if (m->patient_ids != ids)
            throw std::runtime_error("concat: patient row order mismatch between inputs");
        total_cols += m->cols();
    }

    FeatureMatrix out;
    out.patient_ids = ids;
    const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
    out.values.resize(n, total_cols);
    out.mask.resize(n, total_cols);
    out.error_counts.reserve(static_cast<std::size_t>(total_cols));

    std::set<std::string> used;
    Eigen::Index at = 0;
    for (const auto* m : matrices) {
        for (Eigen::Index c = 0; c < m->cols(); ++c) {
            ColumnInfo info = m->columns[static_cast<std::size_t>(c)];
            if (!used.insert(info.name).second) {
                std::string suffixed = info.name + "__" + hash_hex(info.provenance).substr(0, 8);
                int bump = 2;
                while (!used.insert(suffixed).second)
                    suffixed = info.name + "__" + hash_hex(info.provenance).substr(0, 8) + "_" +
                               std::to_string(bump++);
                log_info("concat: column name collision on '" + info.name + "', renamed to '" +
                         suffixed + "'");
                info.name = suffixed;
            }
            out.columns.push_back(info);
            out.values.col(at) = m->values.col(c);
            out.mask.col(at) = m->mask.col(c);
            out.error_counts.push_back(m->error_counts[static_cast<std::size_t>(c)]);
            ++at;
        }
    }
    return out;
}

void export_matrix(const FeatureMatrix& matrix, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    std::vector<std::string> header = {"patient_id"};
    for (const auto& col : matrix.columns) header.push_back(col.name);
    out << csv_join(header) << "\n";
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        std::vector<std::string> row = {matrix.patient_ids[static_cast<std::size_t>(r)]};
        for (Eigen::Index c = 0; c < matrix.cols(); ++c)
            row.push_back(matrix.mask(r, c) ? "NA" : format_double(matrix.values(r, c)));
        out << csv_join(row) << "\n";
    }

    json columns = json::array();
    for (std::size_t i = 0; i < matrix.columns.size(); ++i)
        columns.push_back({{"name", matrix.columns[i].name},
                           {"provenance", matrix.columns[i].provenance},
                           {"error_count", matrix.error_counts[i]}});
    std::ofstream side(path + ".provenance.json", std::ios::binary);
    side << json{{"columns", columns}}.dump(2) << "\n";
}

FeatureMatrix import_matrix(const std::string& path) {
    CsvTable table = read_csv_file(path);
    if (table.header.empty() || table.header[0] != "patient_id")
        throw std::runtime_error(path + ": first column must be patient_id");

    FeatureMatrix matrix;
    const std::size_t d = table.header.size() - 1;
    for (std::size_t c = 0; c < d; ++c) matrix.columns.push_back({table.header[c + 1], table.header[c + 1]});
    matrix.error_counts.assign(d, 0);

    const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
    matrix.values.resize(n, static_cast<Eigen::Index>(d));
    matrix.mask.resize(n, static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        matrix.patient_ids.push_back(table.rows[r][0]);
        for (std::size_t c = 0; c < d; ++c) {
            const std::string& cell = table.rows[r][c + 1];
            if (cell == "NA") {
                matrix.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = kNaN;
                matrix.mask(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = 1;
                continue;
            }
            auto value = parse_double(cell);
            if (!value || !std::isfinite(*value))
                throw std::runtime_error(path + ": line " + std::to_string(table.row_lines[r]) +
                                         ": bad cell '" + cell + "'");
            matrix.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *value;
            matrix.mask(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = 0;
        }
    }

    std::ifstream side(path + ".provenance.json");
    if (side) {
        json manifest = json::parse(side);
        const auto& cols = manifest.at("columns");
        if (cols.size() != matrix.columns.size())
            throw std::runtime_error(path + ": provenance manifest lists " + std::to_string(cols.size()) +
                                     " columns, matrix has " + std::to_string(matrix.columns.size()));
        for (std::size_t i = 0; i < matrix.columns.size(); ++i) {
            if (cols[i].at("name").get<std::string>() != matrix.columns[i].name)
                throw std::runtime_error(path + ": provenance manifest column order mismatch at " +
                                         std::to_string(i));
            matrix.columns[i].provenance = cols[i].at("provenance").get<std::string>();
            matrix.error_counts[i] = cols[i].value("error_count", 0);
        }
    } else {
        log_warn(path + ": no provenance sidecar; using column names as provenance");
    }
    return matrix;
}

ExtractionReport summarize(const FeatureMatrix& matrix) {
    ExtractionReport report;
    const double n = static_cast<double>(matrix.rows());
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
        ExtractionReport::ColumnStats stats;
        Eigen::Index present = 0;
        double first_value = 0;
        bool saw_value = false;
        bool constant = true;
        for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
            if (matrix.mask(r, c)) continue;
            ++present;
            if (!saw_value) {
                first_value = matrix.values(r, c);
                saw_value = true;
            } else if (matrix.values(r, c) != first_value) {
                constant = false;
            }
        }
        stats.non_missing_fraction = n > 0 ? static_cast<double>(present) / n : 0.0;
        stats.error_fraction =
            n > 0 ? static_cast<double>(matrix.error_counts[static_cast<std::size_t>(c)]) / n : 0.0;
        stats.constant = saw_value && constant;
        report.per_column.push_back(stats);
    }
    return report;
}

}  // namespace featforge::extraction
