#include "addtrend/diffop.hpp"

#include <algorithm>
#include <cmath>

#include "addtrend/errors.hpp"

namespace addtrend {

BandedDiffOp::BandedDiffOp(std::span<const double> x, int k)
    : k_(k), n_(static_cast<int>(x.size())), knots_(x.begin(), x.end()) {
    if (k_ < 0) throw ShapeMismatch("order k must be >= 0");
    if (n_ < k_ + 2) throw TooShort(n_, k_);
    for (int i = 0; i + 1 < n_; ++i)
        if (!(knots_[i] < knots_[i + 1])) throw NotIncreasing();

    // Level m holds D^(X,m): (n-m) rows, m+1 entries per row (cols i..i+m).
    std::vector<double> cur(static_cast<std::size_t>(n_ - 1) * 2);
    for (int i = 0; i < n_ - 1; ++i) {
        cur[2 * i] = -1.0;
        cur[2 * i + 1] = 1.0;
    }
    for (int m = 1; m <= k_; ++m) {
        const int rows_m = n_ - m;          // rows of D^(X,m)
        const int w = m + 1;                // entries per row of D^(X,m)
        std::vector<double> next(static_cast<std::size_t>(rows_m - 1) * (w + 1), 0.0);
        for (int i = 0; i + 1 < rows_m; ++i) {
            const double wi = m / (knots_[i + m] - knots_[i]);
            const double wi1 = m / (knots_[i + 1 + m] - knots_[i + 1]);
            double* dst = &next[static_cast<std::size_t>(i) * (w + 1)];
            const double* ri = &cur[static_cast<std::size_t>(i) * w];
            const double* ri1 = &cur[static_cast<std::size_t>(i + 1) * w];
            for (int c = 0; c < w; ++c) dst[c] -= wi * ri[c];
            for (int c = 0; c < w; ++c) dst[c + 1] += wi1 * ri1[c];
        }
        cur = std::move(next);
    }
    band_ = std::move(cur);
}

void BandedDiffOp::apply(std::span<const double> v, std::span<double> out) const {
    if (static_cast<int>(v.size()) != n_) throw ShapeMismatch("apply: length mismatch");
    const int m = rows();
    const int w = bandwidth();
    for (int i = 0; i < m; ++i) {
        const double* row = &band_[static_cast<std::size_t>(i) * w];
        double acc = 0.0;
        for (int c = 0; c < w; ++c) acc += row[c] * v[i + c];
        out[i] = acc;
    }
}

std::vector<double> BandedDiffOp::apply(std::span<const double> v) const {
    std::vector<double> out(static_cast<std::size_t>(rows()));
    apply(v, out);
    return out;
}

void BandedDiffOp::apply_transpose(std::span<const double> u, std::span<double> out) const {
    if (static_cast<int>(u.size()) != rows())
        throw ShapeMismatch("apply_transpose: length mismatch");
    const int m = rows();
    const int w = bandwidth();
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < m; ++i) {
        const double* row = &band_[static_cast<std::size_t>(i) * w];
        const double ui = u[i];
        for (int c = 0; c < w; ++c) out[i + c] += row[c] * ui;
    }
}

std::vector<double> BandedDiffOp::apply_transpose(std::span<const double> u) const {
    std::vector<double> out(static_cast<std::size_t>(n_));
    apply_transpose(u, out);
    return out;
}

SymBanded BandedDiffOp::gram() const {
    const int m = rows();
    const int w = bandwidth();
    SymBanded G(m, k_ + 1);
    for (int i = 0; i < m; ++i) {
        const double* ri = &band_[static_cast<std::size_t>(i) * w];
        for (int j = std::max(0, i - k_ - 1); j <= i; ++j) {
            const double* rj = &band_[static_cast<std::size_t>(j) * w];
            // overlap columns: [i, j + w)
            double acc = 0.0;
            for (int c = i; c < j + w; ++c) acc += ri[c - i] * rj[c - j];
            G.at(i, j) = acc;
        }
    }
    return G;
}

SymBanded BandedDiffOp::gram_transpose() const {
    const int m = rows();
    const int w = bandwidth();
    SymBanded G(n_, k_ + 1);
    for (int i = 0; i < m; ++i) {
        const double* row = &band_[static_cast<std::size_t>(i) * w];
        for (int a = 0; a < w; ++a)
            for (int b = 0; b <= a; ++b)
                G.at(i + a, i + b) += row[a] * row[b];
    }
    return G;
}

}  // namespace addtrend
