#include "lesionunc/table.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "lesionunc/error.hpp"

namespace lunc {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_double(const std::string& cell, std::size_t row, const std::string& col) {
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), d);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        fail(ErrorCode::NonNumericCell,
             "row " + std::to_string(row) + ", column '" + col + "': '" + cell + "'");
    return d;
}

std::int64_t parse_int(const std::string& cell, std::size_t row) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        fail(ErrorCode::NonNumericCell, "row " + std::to_string(row) + ", column 'lesion_id': '" + cell + "'");
    return v;
}

void check_identifier(const std::string& s) {
    if (s.empty()) fail(ErrorCode::InvalidArgument, "empty identifier cell");
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            fail(ErrorCode::InvalidArgument, "identifier contains unsupported character: '" + s + "'");
}

} // namespace

int FeatureTable::col_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> FeatureTable::column(const std::string& name) const {
    const int c = col_index(name);
    if (c < 0) fail(ErrorCode::InvalidArgument, "no such column: " + name);
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, static_cast<std::size_t>(c));
    return out;
}

void FeatureTable::add_row(const std::string& patient, std::int64_t lesion, const std::vector<double>& row) {
    if (row.size() != columns.size())
        fail(ErrorCode::InvalidArgument, "row width " + std::to_string(row.size()) +
                                             " != column count " + std::to_string(columns.size()));
    patient_ids.push_back(patient);
    lesion_ids.push_back(lesion);
    values.insert(values.end(), row.begin(), row.end());
}

std::string format_double(double x) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

FeatureTable read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::IoFailure, "empty table file: " + path);

    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "patient_id" || header[1] != "lesion_id")
        fail(ErrorCode::InvalidArgument, "header must start with patient_id,lesion_id: " + path);

    FeatureTable t;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 2; i < header.size(); ++i) {
        if (!seen.insert(header[i]).second)
            fail(ErrorCode::DuplicateColumn, "'" + header[i] + "' appears twice in " + path);
        t.columns.push_back(header[i]);
    }

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        ++row;
        if (cells.size() != header.size())
            fail(ErrorCode::RaggedRow, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                           " cells under " + std::to_string(header.size()) + "-column header");
        t.patient_ids.push_back(cells[0]);
        t.lesion_ids.push_back(parse_int(cells[1], row));
        for (std::size_t c = 2; c < cells.size(); ++c)
            t.values.push_back(parse_double(cells[c], row, header[c]));
    }
    return t;
}

void write_table(const FeatureTable& t, const std::string& path) {
    if (t.values.size() != t.rows() * t.cols())
        fail(ErrorCode::InvalidArgument, "table value buffer inconsistent with dimensions");

    std::ostringstream out;
    out << "patient_id,lesion_id";
    std::unordered_set<std::string> seen;
    for (const auto& c : t.columns) {
        if (!seen.insert(c).second) fail(ErrorCode::DuplicateColumn, "'" + c + "'");
        out << ',' << c;
    }
    out << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        check_identifier(t.patient_ids[r]);
        out << t.patient_ids[r] << ',' << t.lesion_ids[r];
        for (std::size_t c = 0; c < t.cols(); ++c) {
            const double x = t.at(r, c);
            if (!std::isfinite(x))
                fail(ErrorCode::NonFinite, "non-finite value at row " + std::to_string(r + 1) +
                                               ", column '" + t.columns[c] + "'");
            out << ',' << format_double(x);
        }
        out << '\n';
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::IoFailure, "cannot open for writing: " + path);
    const std::string s = out.str();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) fail(ErrorCode::IoFailure, "write failed: " + path);
}

} // namespace lunc
