#include "qhe/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qhe/errors.hpp"

namespace qhe {

std::string format_double(double value) {
    char buf[40];
    // %.17g always round-trips; prefer the shorter %.15g when it does too.
    std::snprintf(buf, sizeof(buf), "%.15g", value);
    if (std::strtod(buf, nullptr) == value) return buf;
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file '" + path + "'");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file '" + path + "'");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double value = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) {
                std::ostringstream msg;
                msg << "non-numeric cell '" << cell << "' at " << path << ":" << line_no;
                throw DataError(msg.str());
            }
            row.push_back(value);
        }
        if (row.size() != table.header.size()) {
            std::ostringstream msg;
            msg << "row with " << row.size() << " cells under a " << table.header.size()
                << "-column header at " << path << ":" << line_no;
            throw DataError(msg.str());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write CSV file '" + path + "'");
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
        }
    }
}

} // namespace qhe
