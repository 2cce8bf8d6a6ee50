#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace tdev {

// Minimal comma-separated table: header row plus string cells. Quoting is
// not supported; cell values must not contain commas or newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by header name; throws std::invalid_argument if absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

// Reads the whole file; requires a header row. Throws std::runtime_error
// when the file cannot be opened.
CsvTable read_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void write_row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
};

}  // namespace tdev
