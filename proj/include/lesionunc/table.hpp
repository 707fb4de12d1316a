#ifndef LESIONUNC_TABLE_HPP
#define LESIONUNC_TABLE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace lunc {

// Per-lesion numeric table backing the regression. CSV layout:
// patient_id,lesion_id,<feature columns...>[,lsu][,iou_adj]
// "lsu" and "iou_adj" are ordinary named columns; builders keep them last.
struct FeatureTable {
    std::vector<std::string> columns;      // names of numeric columns
    std::vector<std::string> patient_ids;  // one per row
    std::vector<std::int64_t> lesion_ids;  // one per row
    std::vector<double> values;            // rows x columns, row-major

    std::size_t rows() const { return patient_ids.size(); }
    std::size_t cols() const { return columns.size(); }

    double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * columns.size() + c]; }

    // -1 when absent
    int col_index(const std::string& name) const;
    bool has_column(const std::string& name) const { return col_index(name) >= 0; }
    std::vector<double> column(const std::string& name) const;

    void add_row(const std::string& patient, std::int64_t lesion, const std::vector<double>& row);
};

FeatureTable read_table(const std::string& path);
void write_table(const FeatureTable& t, const std::string& path);

// shortest representation that parses back to the same double
std::string format_double(double x);

} // namespace lunc

#endif
