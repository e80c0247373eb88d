#include "featforge/config.hpp"

#include "featforge/num.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace featforge {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    std::string current;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": malformed section header");
            current = trim(t.substr(1, t.size() - 2));
            if (current.empty())
                throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": empty section name");
            if (!cfg.find_section(current)) cfg.sections_.push_back({current, {}});
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": expected key = value");
        if (current.empty())
            throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": key outside any [section]");
        cfg.set(current, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

const ConfigFile::Section* ConfigFile::find_section(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name == name) return &s;
    return nullptr;
}

const std::string* ConfigFile::find_value(const std::string& section, const std::string& key) const {
    const Section* s = find_section(section);
    if (!s) return nullptr;
    for (const auto& [k, v] : s->entries)
        if (k == key) return &v;
    return nullptr;
}

bool ConfigFile::has_section(const std::string& name) const { return find_section(name) != nullptr; }

bool ConfigFile::has_key(const std::string& section, const std::string& key) const {
    return find_value(section, key) != nullptr;
}

void ConfigFile::require_section(const std::string& name) const {
    if (!has_section(name)) throw std::runtime_error("config: missing required section [" + name + "]");
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   std::optional<std::string> fallback) const {
    const std::string* v = find_value(section, key);
    if (v) return *v;
    if (fallback) return *fallback;
    throw std::runtime_error("config: missing key '" + key + "' in section [" + section + "]");
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              std::optional<double> fallback) const {
    const std::string* v = find_value(section, key);
    if (!v) {
        if (fallback) return *fallback;
        throw std::runtime_error("config: missing key '" + key + "' in section [" + section + "]");
    }
    auto parsed = parse_double(*v);
    if (!parsed)
        throw std::runtime_error("config: key '" + key + "' in [" + section + "] is not a number: " + *v);
    return *parsed;
}

long long ConfigFile::get_int(const std::string& section, const std::string& key,
                              std::optional<long long> fallback) const {
    const std::string* v = find_value(section, key);
    if (!v) {
        if (fallback) return *fallback;
        throw std::runtime_error("config: missing key '" + key + "' in section [" + section + "]");
    }
    try {
        std::size_t pos = 0;
        long long out = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' in [" + section + "] is not an integer: " + *v);
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          std::optional<bool> fallback) const {
    const std::string* v = find_value(section, key);
    if (!v) {
        if (fallback) return *fallback;
        throw std::runtime_error("config: missing key '" + key + "' in section [" + section + "]");
    }
    std::string lower = *v;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") return true;
    if (lower == "false" || lower == "0" || lower == "no" || lower == "off") return false;
    throw std::runtime_error("config: key '" + key + "' in [" + section + "] is not a boolean: " + *v);
}

void ConfigFile::set(const std::string& section, const std::string& key, const std::string& value) {
    for (auto& s : sections_) {
        if (s.name != section) continue;
        for (auto& [k, v] : s.entries) {
            if (k == key) {
                v = value;
                return;
            }
        }
        s.entries.emplace_back(key, value);
        return;
    }
    sections_.push_back({section, {{key, value}}});
}

std::string ConfigFile::to_string() const {
    std::ostringstream out;
    for (const auto& s : sections_) {
        out << "[" << s.name << "]\n";
        for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
        out << "\n";
    }
    return out.str();
}

}  // namespace featforge
