#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rgamlss::cli {

/// A parsed CSV file: header names plus string cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t n_rows() const { return rows.size(); }
    /// Column index, or -1 when absent.
    [[nodiscard]] int find(std::string_view name) const;
    /// Numeric column. Throws SchemaError naming the column and row on a
    /// missing or unparsable value.
    [[nodiscard]] std::vector<double> numeric(std::string_view name) const;
};

/// RFC 4180: comma separated, optional double quotes, "" escapes, CRLF or LF
/// line ends. The first record is the header.
CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

/// Quotes a field when it holds a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// Shortest round-trip representation of a double ("nan", "inf" and "-inf" for
/// non-finite values).
std::string format_double(double x);

/// Writes one record; fields are escaped.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace rgamlss::cli
