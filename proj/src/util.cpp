#include "featforge/hash.hpp"
#include "featforge/log.hpp"
#include "featforge/num.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>

namespace featforge {

std::string to_hex(std::uint64_t value) {
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[value & 0xf];
        value >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
    // trim surrounding whitespace
    std::size_t b = text.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::nullopt;
    std::size_t e = text.find_last_not_of(" \t\r\n");
    text = text.substr(b, e - b + 1);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && text.front() == '+') ++first;  // from_chars rejects leading '+'
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return value;
}

double quantile_sorted(std::span<const double> sorted_values, double p) {
    if (sorted_values.empty()) throw std::invalid_argument("quantile_sorted: empty range");
    p = std::clamp(p, 0.0, 1.0);
    const std::size_t n = sorted_values.size();
    if (n == 1) return sorted_values[0];
    double h = p * static_cast<double>(n - 1);
    std::size_t i = static_cast<std::size_t>(h);
    if (i >= n - 1) return sorted_values[n - 1];
    double frac = h - static_cast<double>(i);
    return sorted_values[i] + frac * (sorted_values[i + 1] - sorted_values[i]);
}

namespace {
std::mutex g_log_mutex;
LogLevel g_log_level = LogLevel::info;
std::function<void(LogLevel, const std::string&)> g_log_sink;

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::debug: return "DEBUG";
        case LogLevel::info: return "INFO";
        case LogLevel::warn: return "WARN";
        case LogLevel::error: return "ERROR";
    }
    return "?";
}
}  // namespace

void set_log_level(LogLevel level) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    g_log_level = level;
}

void set_log_sink(std::function<void(LogLevel, const std::string&)> sink) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    g_log_sink = std::move(sink);
}

void log_message(LogLevel level, const std::string& message) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    if (g_log_sink) {
        g_log_sink(level, message);
        return;
    }
    if (static_cast<int>(level) < static_cast<int>(g_log_level)) return;
    std::fprintf(stderr, "[%s] %s\n", level_tag(level), message.c_str());
}

}  // namespace featforge
