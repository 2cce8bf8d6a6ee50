#include "tdev/csv.hpp"

#include <stdexcept>

namespace tdev {

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::invalid_argument("missing column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
    for (const auto& h : header) {
        if (h == name) return true;
    }
    return false;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty, header row required");
    table.header = split_csv_line(line);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        table.rows.push_back(split_csv_line(line));
    }
    return table;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
}

void CsvWriter::write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

}  // namespace tdev
