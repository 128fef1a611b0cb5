#pragma once

#include <string>
#include <vector>

namespace addtrend {

struct CsvTable {
    std::vector<std::string> header;            // empty when the file had none
    std::vector<std::vector<double>> columns;   // column-major
    int rows() const { return columns.empty() ? 0 : static_cast<int>(columns[0].size()); }
    int cols() const { return static_cast<int>(columns.size()); }
};

// Reads a rectangular CSV of decimal-point reals.  Throws ParseError with
// the offending line number on malformed input.
CsvTable read_csv(const std::string& path, bool has_header);

// Regression layout: first column response, remaining columns inputs.
struct RegressionData {
    std::vector<double> y;
    std::vector<std::vector<double>> x;  // d columns
};

RegressionData read_regression_csv(const std::string& path, bool has_header);

}  // namespace addtrend
