#ifndef XDUCT_CSV_HPP
#define XDUCT_CSV_HPP

#include <string>
#include <vector>

namespace xduct {

// Numeric CSV with a mandatory header row. Rows must all have the header's
// column count; fields must parse as doubles.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;  // -1 if absent
    std::vector<double> col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::string format_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows);

} // namespace xduct

#endif // XDUCT_CSV_HPP
