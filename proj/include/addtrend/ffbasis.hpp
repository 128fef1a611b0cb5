#pragma once

#include <span>
#include <vector>

#include "addtrend/design.hpp"

namespace addtrend {

// Falling factorial basis of order k over strictly increasing knots
// t^1 < ... < t^n (the sorted inputs of one dimension):
//   h_i(t)     = prod_{l<i} (t - t^l),                  i = 1..k+1
//   h_{i+k+1}(t) = prod_{l=1..k} (t - t^{i+l}) 1{t > t^{i+k}},  i = 1..n-k-1
// (empty product = 1, so h_1 = 1; indices 0-based in the API).
class FFBasis {
public:
    FFBasis(std::vector<double> knots, int k);

    int k() const { return k_; }
    int n() const { return static_cast<int>(knots_.size()); }
    const std::vector<double>& knots() const { return knots_; }

    // Basis function i (0-based, 0 <= i < n) evaluated at t.  The step
    // indicator uses the strict inequality, so evaluation is left-closed.
    double eval(int i, double t) const;

private:
    int k_;
    std::vector<double> knots_;
};

// Block coefficients of a fitted vector in the falling factorial basis:
// the k+1 polynomial coefficients a and the n-k-1 knot coefficients
// b = D^(X,k+1) theta / k!.
struct FFCoefficients {
    FFBasis basis;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<int> nonzero_b;  // indices with b != 0, ascending

    // sum_i alpha_i h_i(t); O(k + #nonzero b left of t).
    double predict(double t) const;

    // Knot indices under the same thresholding rule as UnivariateFit.
    std::vector<int> knot_indices(double tol) const;
};

// Recovers the basis coefficients of theta (sorted order) in O(n k) time:
// b from the banded difference operator, a from the divided-difference
// recurrences on the first k+1 knots.
FFCoefficients coefficients_from_theta(std::span<const double> theta_sorted,
                                       const FFBasis& basis);

struct PtildeRank {
    bool full_rank = false;
    double smin = 0.0;
    double smax = 0.0;
    double cond = 1.0;
};

// Computable part of the uniqueness condition: whether the centered
// concatenation of per-dimension pure-polynomial blocks (intercepts removed)
// has full column rank, judged at smin > 1e-10 smax.
PtildeRank check_ptilde_rank(const SortedDesign& design, int k);

}  // namespace addtrend
