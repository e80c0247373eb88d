#pragma once

#include "featforge/cohort.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace featforge::toolkit {

using SeriesView = std::span<const cohort::Observation>;

// Query primitives over one record's irregular series. All are pure and
// treat an absent variable as one with no observations. Variable-name
// validity is a validation-time concern, never a runtime one.

// Full sorted series for the variable; empty if unobserved.
SeriesView get_all_measurements(const cohort::PatientRecord& record, const std::string& variable);

// Observations with t_start <= t <= t_end (both ends inclusive).
// Throws std::invalid_argument when t_start > t_end.
SeriesView get_in_window(const cohort::PatientRecord& record, const std::string& variable,
                         double t_start, double t_end);

// Value of the latest observation with time <= t; nullopt (NA) if none.
std::optional<double> last_value_before(const cohort::PatientRecord& record, const std::string& variable,
                                        double t);

// Number of observations; 0 for an unobserved variable.
double count_measurements(const cohort::PatientRecord& record, const std::string& variable);

// t minus the time of the latest observation with time <= t; nullopt if none.
std::optional<double> time_since_last(const cohort::PatientRecord& record, const std::string& variable,
                                      double t);

struct ToolDoc {
    std::string name;
    std::string signature;
    std::string semantics;
};

// Fixed registry of the five tools, in documentation order.
const std::vector<ToolDoc>& tool_docs();

// The documentation block injected verbatim into prompts. Univariate
// prompts expose only get_all_measurements; multivariate prompts expose
// the full set. This text is part of the reproducibility surface and is
// recorded in run manifests.
std::string render_tool_docs(bool univariate_only);

}  // namespace featforge::toolkit
