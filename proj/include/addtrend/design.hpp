#pragma once

#include <span>
#include <vector>

namespace addtrend {

// Input matrix with per-column sort permutations.  Immutable after
// construction; safe to share across concurrent readers.
class SortedDesign {
public:
    // raw[j] is the j-th input column (original row order).  Throws
    // DuplicateInputs if a column has ties, NonFinite on NaN/inf.
    explicit SortedDesign(std::vector<std::vector<double>> raw);

    int n() const { return n_; }
    int d() const { return d_; }

    const std::vector<double>& column(int j) const { return columns_[j]; }
    // Strictly increasing values of column j.
    const std::vector<double>& sorted(int j) const { return sorted_[j]; }
    // rank(j)[i] = sorted position of original row i.
    const std::vector<int>& rank(int j) const { return rank_[j]; }
    // order(j)[r] = original row at sorted position r.
    const std::vector<int>& order(int j) const { return order_[j]; }

    // Apply S_j: reorder an original-order vector into sorted order.
    std::vector<double> to_sorted(int j, std::span<const double> v) const;
    // Apply S_j^T: map a sorted-order vector back to original order.
    std::vector<double> from_sorted(int j, std::span<const double> v) const;

    // Design restricted to a subset of rows (used by cross-validation folds).
    SortedDesign subset(std::span<const int> rows) const;

private:
    int n_ = 0, d_ = 0;
    std::vector<std::vector<double>> columns_;
    std::vector<std::vector<double>> sorted_;
    std::vector<std::vector<int>> rank_;
    std::vector<std::vector<int>> order_;
};

inline SortedDesign build_design(std::vector<std::vector<double>> raw) {
    return SortedDesign(std::move(raw));
}

struct CenteredResponse {
    std::vector<double> y;
    double ybar = 0.0;
    std::vector<double> centered;
};

CenteredResponse center_response(std::span<const double> y);

}  // namespace addtrend
