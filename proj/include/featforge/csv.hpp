#pragma once

#include <string>
#include <vector>

namespace featforge {

// RFC-4180-style delimiter-separated text: double-quoted fields may contain
// commas, quotes (doubled) and newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // physical line number (1-based) where each row starts, for error messages
    std::vector<long> row_lines;
};

CsvTable read_csv_file(const std::string& path);
CsvTable read_csv_string(const std::string& text, const std::string& origin = "<string>");

std::string csv_escape(const std::string& field);
std::string csv_join(const std::vector<std::string>& fields);

}  // namespace featforge
