#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace featforge {

// Flat typed key-value configuration with [section] headers and '#' comments.
// Sections mirror module names so run manifests stay diffable.
class ConfigFile {
  public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has_section(const std::string& name) const;
    bool has_key(const std::string& section, const std::string& key) const;

    // Throws std::runtime_error naming the missing section.
    void require_section(const std::string& name) const;

    std::string get_string(const std::string& section, const std::string& key,
                           std::optional<std::string> fallback = std::nullopt) const;
    double get_double(const std::string& section, const std::string& key,
                      std::optional<double> fallback = std::nullopt) const;
    long long get_int(const std::string& section, const std::string& key,
                      std::optional<long long> fallback = std::nullopt) const;
    bool get_bool(const std::string& section, const std::string& key,
                  std::optional<bool> fallback = std::nullopt) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    // Canonical serialized form (sections and keys in first-seen order).
    std::string to_string() const;

  private:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };
    std::vector<Section> sections_;

    const Section* find_section(const std::string& name) const;
    const std::string* find_value(const std::string& section, const std::string& key) const;
};

}  // namespace featforge
