#include "featforge/cohort.hpp"

#include "featforge/csv.hpp"
#include "featforge/log.hpp"
#include "featforge/num.hpp"
#include "featforge/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace featforge::cohort {

namespace fs = std::filesystem;
using nlohmann::json;

const EventSeries::Column* EventSeries::find(const std::string& variable) const {
    auto it = columns_.find(variable);
    return it == columns_.end() ? nullptr : &it->second;
}

EventSeries::Column& EventSeries::column(const std::string& variable) { return columns_[variable]; }

void EventSeries::drop_empty_columns() {
    for (auto it = columns_.begin(); it != columns_.end();) {
        if (it->second.empty()) it = columns_.erase(it);
        else ++it;
    }
}

std::vector<std::string> EventSeries::variable_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& [name, col] : columns_)
        if (!col.empty()) names.push_back(name);
    return names;
}

std::size_t EventSeries::total_observations() const {
    std::size_t n = 0;
    for (const auto& [name, col] : columns_) n += col.size();
    return n;
}

const VariableMeta* Schema::find(const std::string& name) const {
    for (const auto& v : variables)
        if (v.name == name) return &v;
    return nullptr;
}

std::vector<std::string> Schema::variable_names() const {
    std::vector<std::string> names;
    names.reserve(variables.size());
    for (const auto& v : variables) names.push_back(v.name);
    return names;
}

int Cohort::label_of(const std::string& patient_id) const {
    auto it = labels.find(patient_id);
    if (it == labels.end()) throw std::runtime_error("no label for patient " + patient_id);
    return it->second;
}

double Cohort::prevalence() const {
    if (records.empty()) return 0.0;
    double pos = 0;
    for (const auto& r : records) pos += label_of(r.patient_id);
    return pos / static_cast<double>(records.size());
}

const PatientRecord* Cohort::find_record(const std::string& patient_id) const {
    auto it = std::lower_bound(records.begin(), records.end(), patient_id,
                               [](const PatientRecord& r, const std::string& id) { return r.patient_id < id; });
    if (it == records.end() || it->patient_id != patient_id) return nullptr;
    return &*it;
}

std::vector<int> Cohort::label_vector() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(label_of(r.patient_id));
    return out;
}

std::string format_static(const StaticValue& v) {
    if (std::holds_alternative<double>(v)) return format_double(std::get<double>(v));
    return std::get<std::string>(v);
}

namespace {

StaticValue parse_static(const std::string& text) {
    auto num = parse_double(text);
    if (num && std::isfinite(*num)) return *num;
    return text;
}

std::map<std::string, int> read_labels(const std::string& labels_path) {
    CsvTable table = read_csv_file(labels_path);
    if (table.header.size() != 2 || table.header[0] != "patient_id" || table.header[1] != "label")
        throw std::runtime_error(labels_path + ": expected header patient_id,label");
    std::map<std::string, int> labels;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        long line = table.row_lines[i];
        if (row[0].empty())
            throw std::runtime_error(labels_path + ": empty patient_id at line " + std::to_string(line));
        if (row[1] != "0" && row[1] != "1")
            throw std::runtime_error(labels_path + ": label must be 0 or 1 at line " + std::to_string(line));
        if (labels.count(row[0]))
            throw std::runtime_error(labels_path + ": duplicate patient_id '" + row[0] + "' at line " +
                                     std::to_string(line));
        labels[row[0]] = row[1] == "1" ? 1 : 0;
    }
    return labels;
}

}  // namespace

Cohort ingest(const std::string& events_path, const std::string& statics_path,
              const std::string& labels_path, double horizon, IngestReport* report) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("ingest: horizon must be a positive finite number");

    IngestReport local;
    Cohort cohort;
    auto labels = read_labels(labels_path);

    std::map<std::string, PatientRecord> by_id;
    for (const auto& [id, label] : labels) {
        PatientRecord r;
        r.patient_id = id;
        r.horizon = horizon;
        by_id.emplace(id, std::move(r));
    }

    // events
    std::set<std::string> unlabeled;
    CsvTable events = read_csv_file(events_path);
    if (!events.header.empty()) {
        std::vector<std::string> expected = {"patient_id", "time", "variable", "value"};
        if (events.header != expected)
            throw std::runtime_error(events_path + ": expected header patient_id,time,variable,value");
    }
    for (std::size_t i = 0; i < events.rows.size(); ++i) {
        const auto& row = events.rows[i];
        long line = events.row_lines[i];
        ++local.rows_read;
        const std::string& id = row[0];
        auto time = parse_double(row[1]);
        if (!time || !std::isfinite(*time))
            throw std::runtime_error(events_path + ": unparseable time at line " + std::to_string(line));
        if (*time < 0.0)
            throw std::runtime_error(events_path + ": negative time at line " + std::to_string(line));
        if (row[2].empty())
            throw std::runtime_error(events_path + ": empty variable name at line " + std::to_string(line));
        auto value = parse_double(row[3]);
        if (!value)
            throw std::runtime_error(events_path + ": unparseable value at line " + std::to_string(line));
        auto rec = by_id.find(id);
        if (rec == by_id.end()) {
            unlabeled.insert(id);
            continue;
        }
        if (*time > horizon) {
            ++local.rows_dropped_after_horizon;
            continue;
        }
        if (!std::isfinite(*value)) {
            ++local.rows_dropped_nonfinite;
            continue;
        }
        rec->second.events.column(row[2]).push_back({*time, *value});
    }
    if (!unlabeled.empty()) {
        std::string ids;
        for (const auto& id : unlabeled) ids += (ids.empty() ? "" : ", ") + id;
        throw std::runtime_error(events_path + ": missing label for patient(s): " + ids);
    }

    // per-variable sort + last-write-wins on duplicate timestamps
    for (auto& [id, rec] : by_id) {
        for (auto& [name, col] : rec.events.mutable_columns()) {
            std::stable_sort(col.begin(), col.end(),
                             [](const Observation& a, const Observation& b) { return a.time < b.time; });
            EventSeries::Column dedup;
            dedup.reserve(col.size());
            for (const auto& obs : col) {
                if (!dedup.empty() && dedup.back().time == obs.time) {
                    dedup.back().value = obs.value;  // last write wins
                    ++local.duplicate_overwrites;
                    log_warn("ingest: duplicate observation for patient " + id + ", variable " + name +
                             " at t=" + format_double(obs.time) + "; keeping the last value");
                } else {
                    dedup.push_back(obs);
                }
            }
            col = std::move(dedup);
        }
        rec.events.drop_empty_columns();
    }

    // statics
    if (!statics_path.empty()) {
        CsvTable statics = read_csv_file(statics_path);
        if (statics.header.empty() || statics.header[0] != "patient_id")
            throw std::runtime_error(statics_path + ": first header column must be patient_id");
        for (std::size_t i = 0; i < statics.rows.size(); ++i) {
            const auto& row = statics.rows[i];
            auto rec = by_id.find(row[0]);
            if (rec == by_id.end()) {
                log_warn(statics_path + ": ignoring statics for unknown patient " + row[0]);
                continue;
            }
            for (std::size_t c = 1; c < row.size(); ++c) {
                if (row[c].empty()) continue;  // missing static
                rec->second.statics[statics.header[c]] = parse_static(row[c]);
            }
        }
        for (std::size_t c = 1; c < statics.header.size(); ++c)
            cohort.schema.static_covariate_names.push_back(statics.header[c]);
    }

    cohort.labels = std::move(labels);
    cohort.records.reserve(by_id.size());
    for (auto& [id, rec] : by_id) cohort.records.push_back(std::move(rec));

    if (!cohort.records.empty()) {
        auto statics_names = cohort.schema.static_covariate_names;
        auto task = cohort.schema.task_description;
        cohort.schema = compute_schema(cohort);
        cohort.schema.static_covariate_names = std::move(statics_names);
        cohort.schema.task_description = std::move(task);
    }

    if (local.rows_dropped_after_horizon || local.rows_dropped_nonfinite)
        log_info("ingest: dropped " + std::to_string(local.rows_dropped_after_horizon) +
                 " rows past horizon, " + std::to_string(local.rows_dropped_nonfinite) + " non-finite rows");
    if (report) *report = local;
    return cohort;
}

PatientRecord restrict_record(const PatientRecord& record, const std::set<std::string>& names) {
    PatientRecord out;
    out.patient_id = record.patient_id;
    out.statics = record.statics;
    out.horizon = record.horizon;
    for (const auto& [name, col] : record.events.columns()) {
        if (!col.empty() && names.count(name)) out.events.column(name) = col;
    }
    return out;
}

Schema compute_schema(const Cohort& cohort) {
    if (cohort.records.empty()) throw std::invalid_argument("compute_schema: empty cohort");
    Schema schema;
    schema.static_covariate_names = cohort.schema.static_covariate_names;
    schema.task_description = cohort.schema.task_description;

    std::map<std::string, std::vector<double>> pooled;
    std::map<std::string, std::int64_t> coverage;
    for (const auto& rec : cohort.records) {
        for (const auto& [name, col] : rec.events.columns()) {
            if (col.empty()) {
                log_info("compute_schema: variable '" + name + "' has 0 observations in a record; excluded");
                continue;
            }
            auto& values = pooled[name];
            for (const auto& obs : col) values.push_back(obs.value);
            ++coverage[name];
        }
    }

    for (auto& [name, values] : pooled) {
        std::sort(values.begin(), values.end());
        const double n = static_cast<double>(values.size());
        double sum = 0.0;
        for (double v : values) sum += v;
        double mean = sum / n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);

        VariableMeta meta;
        meta.name = name;
        meta.stats.observation_count = static_cast<std::int64_t>(values.size());
        meta.stats.patient_coverage_fraction =
            static_cast<double>(coverage[name]) / static_cast<double>(cohort.records.size());
        meta.stats.mean = mean;
        meta.stats.std_dev = std::sqrt(ss / n);
        meta.stats.min = values.front();
        meta.stats.max = values.back();
        meta.stats.p25 = quantile_sorted(values, 0.25);
        meta.stats.median = quantile_sorted(values, 0.5);
        meta.stats.p75 = quantile_sorted(values, 0.75);
        schema.variables.push_back(std::move(meta));
    }
    // std::map iteration already yields lexicographic order
    return schema;
}

std::pair<Cohort, Cohort> split_cohort(const Cohort& cohort, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split_cohort: test_fraction must be in (0,1)");

    std::vector<std::string> pos, neg;
    for (const auto& rec : cohort.records)
        (cohort.label_of(rec.patient_id) == 1 ? pos : neg).push_back(rec.patient_id);
    if (pos.size() < 2 || neg.size() < 2)
        throw std::runtime_error("split_cohort: each class needs at least 2 members (got " +
                                 std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) +
                                 " negative)");

    std::set<std::string> test_ids;
    Rng rng(seed);
    for (auto* cls : {&pos, &neg}) {
        long n_test = std::lround(static_cast<double>(cls->size()) * test_fraction);
        n_test = std::clamp<long>(n_test, 1, static_cast<long>(cls->size()) - 1);
        rng.shuffle(*cls);
        for (long i = 0; i < n_test; ++i) test_ids.insert((*cls)[i]);
    }

    Cohort train, test;
    for (const auto& rec : cohort.records) {
        Cohort& dst = test_ids.count(rec.patient_id) ? test : train;
        dst.records.push_back(rec);
        dst.labels[rec.patient_id] = cohort.label_of(rec.patient_id);
    }
    for (Cohort* part : {&train, &test}) {
        part->schema = compute_schema(*part);
        part->schema.static_covariate_names = cohort.schema.static_covariate_names;
        part->schema.task_description = cohort.schema.task_description;
        for (auto& meta : part->schema.variables) {
            if (const VariableMeta* orig = cohort.schema.find(meta.name)) meta.unit = orig->unit;
        }
    }
    return {std::move(train), std::move(test)};
}

namespace {

json schema_to_json(const Schema& schema, double horizon) {
    json vars = json::array();
    for (const auto& v : schema.variables) {
        vars.push_back({{"name", v.name},
                        {"unit", v.unit},
                        {"observation_count", v.stats.observation_count},
                        {"patient_coverage_fraction", v.stats.patient_coverage_fraction},
                        {"mean", v.stats.mean},
                        {"std", v.stats.std_dev},
                        {"min", v.stats.min},
                        {"p25", v.stats.p25},
                        {"median", v.stats.median},
                        {"p75", v.stats.p75},
                        {"max", v.stats.max}});
    }
    return json{{"horizon", horizon},
                {"task_description", schema.task_description},
                {"static_covariates", schema.static_covariate_names},
                {"variables", vars}};
}

}  // namespace

void export_cohort(const Cohort& cohort, const std::string& dir) {
    fs::create_directories(dir);
    double horizon = cohort.records.empty() ? 0.0 : cohort.records.front().horizon;

    {
        std::ofstream out(fs::path(dir) / "events.csv", std::ios::binary);
        out << "patient_id,time,variable,value\n";
        for (const auto& rec : cohort.records)
            for (const auto& [name, col] : rec.events.columns())
                for (const auto& obs : col)
                    out << csv_join({rec.patient_id, format_double(obs.time), name, format_double(obs.value)})
                        << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "statics.csv", std::ios::binary);
        std::vector<std::string> header = {"patient_id"};
        for (const auto& name : cohort.schema.static_covariate_names) header.push_back(name);
        out << csv_join(header) << "\n";
        for (const auto& rec : cohort.records) {
            std::vector<std::string> row = {rec.patient_id};
            for (const auto& name : cohort.schema.static_covariate_names) {
                auto it = rec.statics.find(name);
                row.push_back(it == rec.statics.end() ? "" : format_static(it->second));
            }
            out << csv_join(row) << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "labels.csv", std::ios::binary);
        out << "patient_id,label\n";
        for (const auto& rec : cohort.records)
            out << csv_join({rec.patient_id, std::to_string(cohort.label_of(rec.patient_id))}) << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "schema.json", std::ios::binary);
        out << schema_to_json(cohort.schema, horizon).dump(2) << "\n";
    }
}

Cohort load_cohort(const std::string& dir, IngestReport* report) {
    fs::path base(dir);
    std::ifstream in(base / "schema.json");
    if (!in) throw std::runtime_error("cannot open " + (base / "schema.json").string());
    json manifest = json::parse(in);
    double horizon = manifest.at("horizon").get<double>();

    std::string statics_path = (base / "statics.csv").string();
    if (!fs::exists(statics_path)) statics_path.clear();
    Cohort cohort = ingest((base / "events.csv").string(), statics_path, (base / "labels.csv").string(),
                           horizon, report);
    cohort.schema.task_description = manifest.value("task_description", "");
    // units are carried in the manifest, not the event log
    for (const auto& v : manifest.at("variables")) {
        std::string name = v.at("name").get<std::string>();
        std::string unit = v.value("unit", "");
        for (auto& meta : cohort.schema.variables)
            if (meta.name == name) meta.unit = unit;
    }
    return cohort;
}

}  // namespace featforge::cohort
