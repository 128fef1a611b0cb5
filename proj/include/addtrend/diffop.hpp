#pragma once

#include <span>
#include <vector>

#include "addtrend/banded.hpp"

namespace addtrend {

// The discrete difference operator D^(X,k+1) over strictly increasing
// abscissae x, built by the weighted recursion
//   D^(X,1)   = first differences,
//   D^(X,m+1) = D^(X,1) * diag(m / (x[i+m] - x[i])) * D^(X,m),
// stored as a banded matrix: row i covers columns i..i+k+1.  Applying it
// to a vector of samples of a degree-<=k polynomial gives zero.
class BandedDiffOp {
public:
    BandedDiffOp(std::span<const double> x, int k);

    int order() const { return k_; }
    int input_dim() const { return n_; }
    int rows() const { return n_ - k_ - 1; }
    int bandwidth() const { return k_ + 2; }
    const std::vector<double>& knots() const { return knots_; }

    // Entry (i, i + c), c = 0..k+1.
    double entry(int i, int c) const {
        return band_[static_cast<std::size_t>(i) * (k_ + 2) + c];
    }

    void apply(std::span<const double> v, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> v) const;

    void apply_transpose(std::span<const double> u, std::span<double> out) const;
    std::vector<double> apply_transpose(std::span<const double> u) const;

    // D D^T: (n-k-1) x (n-k-1), half-bandwidth k+1.
    SymBanded gram() const;
    // D^T D: n x n, half-bandwidth k+1.
    SymBanded gram_transpose() const;

private:
    int k_, n_;
    std::vector<double> knots_;
    std::vector<double> band_;  // rows() x (k+2), row-major
};

}  // namespace addtrend
