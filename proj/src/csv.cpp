#include "featforge/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace featforge {

namespace {

struct Parser {
    const std::string& text;
    const std::string& origin;
    std::size_t pos = 0;
    long line = 1;

    bool eof() const { return pos >= text.size(); }

    // Reads one record; returns false at end of input.
    bool next_record(std::vector<std::string>& fields, long& start_line) {
        fields.clear();
        // skip blank lines between records
        while (!eof() && (text[pos] == '\n' || text[pos] == '\r')) {
            if (text[pos] == '\n') ++line;
            ++pos;
        }
        if (eof()) return false;
        start_line = line;
        std::string field;
        bool in_quotes = false;
        while (true) {
            if (eof()) {
                if (in_quotes)
                    throw std::runtime_error(origin + ": unterminated quoted field starting near line " +
                                             std::to_string(start_line));
                fields.push_back(field);
                return true;
            }
            char c = text[pos];
            if (in_quotes) {
                if (c == '"') {
                    if (pos + 1 < text.size() && text[pos + 1] == '"') {
                        field.push_back('"');
                        pos += 2;
                    } else {
                        in_quotes = false;
                        ++pos;
                    }
                } else {
                    if (c == '\n') ++line;
                    field.push_back(c);
                    ++pos;
                }
                continue;
            }
            switch (c) {
                case '"':
                    if (field.empty()) {
                        in_quotes = true;
                        ++pos;
                    } else {
                        field.push_back(c);
                        ++pos;
                    }
                    break;
                case ',':
                    fields.push_back(field);
                    field.clear();
                    ++pos;
                    break;
                case '\r':
                    ++pos;
                    break;
                case '\n':
                    ++line;
                    ++pos;
                    fields.push_back(field);
                    return true;
                default:
                    field.push_back(c);
                    ++pos;
                    break;
            }
        }
    }
};

CsvTable parse(const std::string& text, const std::string& origin) {
    CsvTable table;
    Parser p{text, origin};
    std::vector<std::string> fields;
    long start_line = 0;
    if (!p.next_record(fields, start_line)) return table;
    table.header = fields;
    while (p.next_record(fields, start_line)) {
        if (fields.size() != table.header.size())
            throw std::runtime_error(origin + ": line " + std::to_string(start_line) + ": expected " +
                                     std::to_string(table.header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
        table.rows.push_back(fields);
        table.row_lines.push_back(start_line);
    }
    return table;
}

}  // namespace

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

CsvTable read_csv_string(const std::string& text, const std::string& origin) {
    return parse(text, origin);
}

std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_escape(fields[i]);
    }
    return out;
}

}  // namespace featforge
