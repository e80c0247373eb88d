#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace featforge {

// Shortest decimal form that round-trips to the same double. All persisted
// numbers go through this so file round-trips are bit-exact.
std::string format_double(double value);

// Whole-string parse; rejects trailing garbage. Accepts "nan"/"inf" forms
// (callers that require finiteness check separately).
std::optional<double> parse_double(std::string_view text);

// Linearly interpolated quantile of an ascending-sorted range, p in [0,1].
// Index h = p * (n - 1), result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
double quantile_sorted(std::span<const double> sorted_values, double p);

}  // namespace featforge
