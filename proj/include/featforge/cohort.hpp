#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace featforge::cohort {

struct Observation {
    double time = 0.0;   // hours since record start, >= 0
    double value = 0.0;  // finite

    bool operator==(const Observation&) const = default;
};

// Static covariate value: numeric or categorical token.
using StaticValue = std::variant<double, std::string>;

// Per-variable sorted columns. Within a variable, times are strictly
// increasing after ingestion (duplicate timestamps resolve last-write-wins
// with a logged warning).
class EventSeries {
  public:
    using Column = std::vector<Observation>;

    // nullptr when the variable is absent; an empty column and an absent
    // variable are indistinguishable to queries.
    const Column* find(const std::string& variable) const;
    Column& column(const std::string& variable);
    void drop_empty_columns();

    const std::map<std::string, Column>& columns() const { return columns_; }
    std::map<std::string, Column>& mutable_columns() { return columns_; }
    std::vector<std::string> variable_names() const;
    std::size_t total_observations() const;

    bool operator==(const EventSeries&) const = default;

  private:
    std::map<std::string, Column> columns_;
};

struct PatientRecord {
    std::string patient_id;
    std::map<std::string, StaticValue> statics;
    EventSeries events;
    double horizon = 0.0;  // task observation window length, hours

    bool operator==(const PatientRecord&) const = default;
};

struct VariableStats {
    std::int64_t observation_count = 0;
    double patient_coverage_fraction = 0.0;
    double mean = 0.0;
    double std_dev = 0.0;  // population (divisor n)
    double min = 0.0;
    double p25 = 0.0;
    double median = 0.0;
    double p75 = 0.0;
    double max = 0.0;

    bool operator==(const VariableStats&) const = default;
};

struct VariableMeta {
    std::string name;
    std::string unit;  // may be empty
    VariableStats stats;

    bool operator==(const VariableMeta&) const = default;
};

struct Schema {
    std::vector<VariableMeta> variables;  // lexicographic by name
    std::vector<std::string> static_covariate_names;
    std::string task_description;

    const VariableMeta* find(const std::string& name) const;
    bool has_variable(const std::string& name) const { return find(name) != nullptr; }
    std::vector<std::string> variable_names() const;

    bool operator==(const Schema&) const = default;
};

struct Cohort {
    std::vector<PatientRecord> records;  // sorted by patient_id
    std::map<std::string, int> labels;   // patient_id -> {0,1}
    Schema schema;

    int label_of(const std::string& patient_id) const;
    double prevalence() const;
    const PatientRecord* find_record(const std::string& patient_id) const;
    std::vector<int> label_vector() const;  // in record order

    bool operator==(const Cohort&) const = default;
};

struct IngestReport {
    std::int64_t rows_read = 0;
    std::int64_t rows_dropped_after_horizon = 0;
    std::int64_t rows_dropped_nonfinite = 0;
    std::int64_t duplicate_overwrites = 0;
};

// Builds a cohort from an event log, optional statics file and a labels
// file. The labels file defines the patient universe. statics_path may be
// empty. Rows past the horizon and rows with non-finite values are dropped
// and counted in the report.
Cohort ingest(const std::string& events_path, const std::string& statics_path,
              const std::string& labels_path, double horizon, IngestReport* report = nullptr);

// Restriction of the record's events to variables in `names`; statics and
// horizon unchanged. Names absent from the record are ignored.
PatientRecord restrict_record(const PatientRecord& record, const std::set<std::string>& names);

// One VariableMeta per variable observed in >= 1 record, stats pooled over
// all observations of the given cohort. Call on the training split to keep
// the prompt-facing metadata free of test information.
Schema compute_schema(const Cohort& cohort);

// Label-stratified split: per-class test counts are round(class_size *
// test_fraction), clamped so both splits keep both classes. Deterministic
// for a fixed seed.
std::pair<Cohort, Cohort> split_cohort(const Cohort& cohort, double test_fraction, std::uint64_t seed);

// Cohort directory layout: events.csv, statics.csv, labels.csv, schema.json.
void export_cohort(const Cohort& cohort, const std::string& dir);
Cohort load_cohort(const std::string& dir, IngestReport* report = nullptr);

std::string format_static(const StaticValue& v);

}  // namespace featforge::cohort
