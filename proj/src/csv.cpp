#include "xduct/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "xduct/errors.hpp"

namespace xduct {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        // trim surrounding whitespace
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return fields;
}

} // namespace

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

std::vector<double> CsvTable::col(const std::string& name) const {
    const int idx = column(name);
    if (idx < 0) {
        throw validation_error("csv: missing column '" + name + "'");
    }
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back(row[static_cast<size_t>(idx)]);
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream is(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = split(line);
        if (table.header.empty()) {
            table.header = fields;
            continue;
        }
        if (fields.size() != table.header.size()) {
            std::ostringstream os;
            os << "csv: line " << lineno << " has " << fields.size() << " fields, expected "
               << table.header.size();
            throw validation_error(os.str());
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            try {
                size_t pos = 0;
                row.push_back(std::stod(f, &pos));
                if (pos != f.size()) {
                    throw std::invalid_argument(f);
                }
            } catch (const std::exception&) {
                std::ostringstream os;
                os << "csv: line " << lineno << ": cannot parse '" << f << "' as a number";
                throw validation_error(os.str());
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) {
        throw validation_error("csv: empty input");
    }
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw validation_error("csv: cannot open '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_csv(os.str());
}

std::string format_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i) {
        os << (i ? "," : "") << header[i];
    }
    os << "\n";
    char buf[64];
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
            os << (i ? "," : "") << buf;
        }
        os << "\n";
    }
    return os.str();
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw validation_error("csv: cannot write '" + path + "'");
    }
    out << format_csv(header, rows);
}

} // namespace xduct
