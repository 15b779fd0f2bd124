#include "ccpsim/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ccpsim/errors.hpp"

namespace ccpsim {

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> splitLine(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t start = 0;
        while (start < field.size() && field[start] == ' ') ++start;
        fields.push_back(field.substr(start));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

} // namespace

CsvTable readCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("[CFG-MISSING-FILE]", "cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto fields = splitLine(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != table.header.size())
                throw ConfigError("[CFG-SCHEMA]", "'" + path + "': row has " + std::to_string(fields.size()) +
                                                      " fields, header has " + std::to_string(table.header.size()));
            table.rows.push_back(std::move(fields));
        }
    }
    if (first) throw ConfigError("[CFG-SCHEMA]", "'" + path + "' is empty");
    return table;
}

void requireColumns(const CsvTable& table, const std::vector<std::string>& names, const std::string& path) {
    for (const auto& name : names)
        if (table.column(name) < 0)
            throw ConfigError("[CFG-SCHEMA]", "'" + path + "' is missing column '" + name + "'");
}

double parseDouble(const std::string& text, const std::string& context) {
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
        throw ConfigError("[CFG-SCHEMA]", context + ": '" + text + "' is not a number");
    return value;
}

long long parseInt(const std::string& text, const std::string& context) {
    char* end = nullptr;
    const long long value = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0')
        throw ConfigError("[CFG-SCHEMA]", context + ": '" + text + "' is not an integer");
    return value;
}

std::string formatDouble(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

} // namespace ccpsim
