#include "addtrend/csv.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "addtrend/errors.hpp"

namespace addtrend {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_real(const std::string& field, long line_no) {
    const std::string t = trim(field);
    if (t.empty()) throw ParseError(line_no, "empty field");
    const char* begin = t.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + t.size())
        throw ParseError(line_no, "not a decimal-point real: '" + t + "'");
    return v;
}

}  // namespace

CsvTable read_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);

    CsvTable table;
    std::string line;
    long line_no = 0;
    bool expect_header = has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (expect_header) {
            for (auto& f : fields) table.header.push_back(trim(f));
            table.columns.resize(fields.size());
            expect_header = false;
            continue;
        }
        if (table.columns.empty()) table.columns.resize(fields.size());
        if (fields.size() != table.columns.size())
            throw ParseError(line_no, "expected " + std::to_string(table.columns.size()) +
                                          " fields, got " + std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c)
            table.columns[c].push_back(parse_real(fields[c], line_no));
    }
    if (table.rows() == 0) throw Error("no data rows in " + path);
    return table;
}

RegressionData read_regression_csv(const std::string& path, bool has_header) {
    CsvTable table = read_csv(path, has_header);
    if (table.cols() < 2)
        throw Error(path + ": need a response column plus at least one input column");
    RegressionData out;
    out.y = std::move(table.columns[0]);
    out.x.assign(table.columns.begin() + 1, table.columns.end());
    return out;
}

}  // namespace addtrend
