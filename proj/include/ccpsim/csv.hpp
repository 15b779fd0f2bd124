#pragma once

#include <string>
#include <vector>

namespace ccpsim {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};

CsvTable readCsv(const std::string& path);

/// Requires the named columns to exist; throws [CFG-SCHEMA] otherwise.
void requireColumns(const CsvTable& table, const std::vector<std::string>& names, const std::string& path);

double parseDouble(const std::string& text, const std::string& context);
long long parseInt(const std::string& text, const std::string& context);

std::string formatDouble(double value); // round-trip safe

} // namespace ccpsim
