#include "featforge/toolkit.hpp"

#include <algorithm>
#include <stdexcept>

namespace featforge::toolkit {

using cohort::Observation;

namespace {

SeriesView empty_view() { return {}; }

bool time_less(const Observation& obs, double t) { return obs.time < t; }

}  // namespace

SeriesView get_all_measurements(const cohort::PatientRecord& record, const std::string& variable) {
    const auto* col = record.events.find(variable);
    if (!col) return empty_view();
    return SeriesView(col->data(), col->size());
}

SeriesView get_in_window(const cohort::PatientRecord& record, const std::string& variable,
                         double t_start, double t_end) {
    if (t_start > t_end)
        throw std::invalid_argument("get_in_window: t_start > t_end");
    SeriesView all = get_all_measurements(record, variable);
    auto first = std::lower_bound(all.begin(), all.end(), t_start, time_less);
    auto last = std::upper_bound(all.begin(), all.end(), t_end,
                                 [](double t, const Observation& obs) { return t < obs.time; });
    if (first >= last) return empty_view();
    return all.subspan(static_cast<std::size_t>(first - all.begin()),
                       static_cast<std::size_t>(last - first));
}

std::optional<double> last_value_before(const cohort::PatientRecord& record, const std::string& variable,
                                        double t) {
    SeriesView all = get_all_measurements(record, variable);
    auto it = std::upper_bound(all.begin(), all.end(), t,
                               [](double q, const Observation& obs) { return q < obs.time; });
    if (it == all.begin()) return std::nullopt;
    return (it - 1)->value;
}

double count_measurements(const cohort::PatientRecord& record, const std::string& variable) {
    return static_cast<double>(get_all_measurements(record, variable).size());
}

std::optional<double> time_since_last(const cohort::PatientRecord& record, const std::string& variable,
                                      double t) {
    SeriesView all = get_all_measurements(record, variable);
    auto it = std::upper_bound(all.begin(), all.end(), t,
                               [](double q, const Observation& obs) { return q < obs.time; });
    if (it == all.begin()) return std::nullopt;
    return t - (it - 1)->time;
}

const std::vector<ToolDoc>& tool_docs() {
    static const std::vector<ToolDoc> docs = {
        {"get_all_measurements", "get_all_measurements(variable) -> series",
         "All observations of the variable over the record window, as (time, value) pairs sorted by "
         "time in hours since record start; empty series if the variable was never observed."},
        {"get_in_window", "get_in_window(variable, t_start, t_end) -> series",
         "Observations with t_start <= time <= t_end, both bounds inclusive; runtime error if "
         "t_start > t_end."},
        {"last_value_before", "last_value_before(variable, t) -> scalar or NA",
         "Value of the latest observation with time <= t; NA if there is none."},
        {"count_measurements", "count_measurements(variable) -> scalar",
         "Number of observations of the variable in the record; 0 if never observed."},
        {"time_since_last", "time_since_last(variable, t) -> scalar or NA",
         "t minus the time of the latest observation with time <= t; NA if there is none."},
    };
    return docs;
}

std::string render_tool_docs(bool univariate_only) {
    std::string out;
    for (const auto& doc : tool_docs()) {
        if (univariate_only && doc.name != "get_all_measurements") continue;
        out += doc.signature;
        out += "\n    ";
        out += doc.semantics;
        out += "\n";
    }
    return out;
}

}  // namespace featforge::toolkit
