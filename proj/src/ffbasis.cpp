#include "addtrend/ffbasis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "addtrend/diffop.hpp"
#include "addtrend/errors.hpp"

namespace addtrend {

FFBasis::FFBasis(std::vector<double> knots, int k) : k_(k), knots_(std::move(knots)) {
    if (k_ < 0) throw ShapeMismatch("order k must be >= 0");
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
        if (!(knots_[i] < knots_[i + 1])) throw NotIncreasing();
}

double FFBasis::eval(int i, double t) const {
    if (i < 0 || i >= n()) throw IndexOutOfRange("basis index " + std::to_string(i));
    double p = 1.0;
    if (i <= k_) {
        for (int l = 0; l < i; ++l) p *= t - knots_[l];
        return p;
    }
    const int m = i - k_ - 1;  // knot-producing index, 0-based
    if (!(t > knots_[m + k_])) return 0.0;
    for (int l = 1; l <= k_; ++l) p *= t - knots_[m + l];
    return p;
}

double FFCoefficients::predict(double t) const {
    const int k = basis.k();
    const auto& kn = basis.knots();
    // polynomial block, Newton-style evaluation
    double p = a[static_cast<std::size_t>(k)];
    for (int l = k - 1; l >= 0; --l) p = p * (t - kn[l]) + a[l];
    // knot block: only terms whose indicator 1{t > kn[m+k]} is on
    for (int m : nonzero_b) {
        if (!(t > kn[m + k])) break;
        double h = b[m];
        for (int l = 1; l <= k; ++l) h *= t - kn[m + l];
        p += h;
    }
    return p;
}

std::vector<int> FFCoefficients::knot_indices(double tol) const {
    std::vector<int> out;
    for (int m = 0; m < static_cast<int>(b.size()); ++m)
        if (std::fabs(b[m]) > tol) out.push_back(m);
    return out;
}

FFCoefficients coefficients_from_theta(std::span<const double> theta_sorted,
                                       const FFBasis& basis) {
    const int n = basis.n();
    const int k = basis.k();
    if (static_cast<int>(theta_sorted.size()) != n)
        throw ShapeMismatch("coefficients_from_theta: length mismatch");
    if (n < k + 2) throw TooShort(n, k);
    const auto& x = basis.knots();

    FFCoefficients out{basis, {}, {}, {}};

    // Knot block: b = D^(X,k+1) theta / k!
    BandedDiffOp D(x, k);
    out.b = D.apply(theta_sorted);
    double kfact = 1.0;
    for (int l = 2; l <= k; ++l) kfact *= l;
    for (auto& v : out.b) v /= kfact;
    for (int m = 0; m < static_cast<int>(out.b.size()); ++m)
        if (out.b[m] != 0.0) out.nonzero_b.push_back(m);

    // Polynomial block: a_l is the (l-1)-st divided difference of theta on
    // the first l knots, i.e. [D^(X,l-1) theta]_1 / ((l-2)! (x^l - x^1)).
    // Computed by running the operator recursion on the leading entries.
    out.a.assign(static_cast<std::size_t>(k + 1), 0.0);
    out.a[0] = theta_sorted[0];
    std::vector<double> level(static_cast<std::size_t>(k), 0.0);
    for (int i = 0; i < k; ++i) level[i] = theta_sorted[i + 1] - theta_sorted[i];
    double fact = 1.0;  // (l-2)! for l = m+1 below
    for (int m = 1; m <= k; ++m) {
        // level holds the leading entries of D^(X,m) theta
        out.a[m] = level[0] / (fact * (x[m] - x[0]));
        if (m == k) break;
        for (int i = 0; i + m + 1 <= k; ++i) {
            const double wi = m / (x[i + m] - x[i]);
            const double wi1 = m / (x[i + 1 + m] - x[i + 1]);
            level[i] = wi1 * level[i + 1] - wi * level[i];
        }
        fact *= m;
    }
    return out;
}

PtildeRank check_ptilde_rank(const SortedDesign& design, int k) {
    const int n = design.n();
    const int d = design.d();
    if (n <= k * d)
        throw TooFewSamples("need n > k*d for the rank diagnostic (n=" +
                            std::to_string(n) + ", k*d=" + std::to_string(k * d) + ")");
    PtildeRank out;
    if (k == 0) {
        // no non-intercept polynomial columns; trivially full rank
        out.full_rank = true;
        out.smin = out.smax = out.cond = 1.0;
        return out;
    }

    Eigen::MatrixXd P(n, k * d);
    for (int j = 0; j < d; ++j) {
        const auto& col = design.column(j);
        const auto& kn = design.sorted(j);
        for (int i = 0; i < n; ++i) {
            double p = 1.0;
            for (int l = 0; l < k; ++l) {
                p *= col[i] - kn[l];
                P(i, j * k + l) = p;  // h_{l+2} evaluations (intercept dropped)
            }
        }
    }
    // center columns (multiply by M = I - 11^T/n)
    P.rowwise() -= P.colwise().mean();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    const auto& s = svd.singularValues();
    out.smax = s(0);
    out.smin = s(s.size() - 1);
    out.full_rank = out.smin > 1e-10 * out.smax;
    out.cond = out.smin > 0.0 ? out.smax / out.smin
                              : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace addtrend
