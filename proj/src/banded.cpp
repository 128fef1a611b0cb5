#include "addtrend/banded.hpp"

#include <algorithm>
#include <cmath>

#include "addtrend/errors.hpp"

namespace addtrend {

SymBanded::SymBanded(int n, int hb)
    : n_(n), hb_(std::min(hb, n > 0 ? n - 1 : 0)),
      a_(static_cast<std::size_t>(hb_ + 1) * n_, 0.0) {}

double SymBanded::get(int i, int j) const {
    if (i < j) std::swap(i, j);
    if (i - j > hb_) return 0.0;
    return at(i, j);
}

void SymBanded::add_identity(double c) {
    for (int i = 0; i < n_; ++i) a_[i] += c;
}

void SymBanded::scale(double c) {
    for (auto& v : a_) v *= c;
}

std::vector<double> SymBanded::multiply(std::span<const double> v) const {
    std::vector<double> out(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        double acc = at(i, i) * v[i];
        const int lo = std::max(0, i - hb_);
        for (int j = lo; j < i; ++j) {
            acc += at(i, j) * v[j];
            out[j] += at(i, j) * v[i];
        }
        out[i] += acc;
    }
    return out;
}

BandedCholesky::BandedCholesky(const SymBanded& A)
    : n_(A.dim()), hb_(A.half_bandwidth()),
      l_(static_cast<std::size_t>(hb_ + 1) * n_, 0.0) {
    auto lref = [&](int i, int j) -> double& {
        return l_[static_cast<std::size_t>(i - j) * n_ + j];
    };
    for (int j = 0; j < n_; ++j) {
        double diag = A.at(j, j);
        const int lo = std::max(0, j - hb_);
        for (int k = lo; k < j; ++k) {
            const double ljk = lref(j, k);
            diag -= ljk * ljk;
        }
        if (!(diag > 0.0) || !std::isfinite(diag)) throw SingularGram();
        const double ljj = std::sqrt(diag);
        lref(j, j) = ljj;
        const int hi = std::min(n_ - 1, j + hb_);
        for (int i = j + 1; i <= hi; ++i) {
            double s = A.get(i, j);
            const int klo = std::max(0, i - hb_);
            for (int k = std::max(klo, lo); k < j; ++k) s -= lref(i, k) * lref(j, k);
            lref(i, j) = s / ljj;
        }
    }
}

void BandedCholesky::solve_in_place(std::span<double> b) const {
    // forward: L y = b
    for (int i = 0; i < n_; ++i) {
        double s = b[i];
        const int lo = std::max(0, i - hb_);
        for (int j = lo; j < i; ++j) s -= lat(i, j) * b[j];
        b[i] = s / lat(i, i);
    }
    // backward: L^T x = y
    for (int i = n_ - 1; i >= 0; --i) {
        double s = b[i];
        const int hi = std::min(n_ - 1, i + hb_);
        for (int j = i + 1; j <= hi; ++j) s -= lat(j, i) * b[j];
        b[i] = s / lat(i, i);
    }
}

std::vector<double> BandedCholesky::solve(std::span<const double> b) const {
    std::vector<double> x(b.begin(), b.end());
    solve_in_place(x);
    return x;
}

SymBanded BandedCholesky::inverse_band() const {
    // From L^T S = L^{-1}: S(i,j) = (delta_ij / L_ii - sum_{k>i} L(k,i) S(k,j)) / L_ii,
    // swept backward; every S entry referenced stays inside the band.
    SymBanded S(n_, hb_);
    for (int i = n_ - 1; i >= 0; --i) {
        const double lii = lat(i, i);
        const int hi = std::min(n_ - 1, i + hb_);
        for (int j = hi; j >= i; --j) {
            double s = (i == j) ? 1.0 / lii : 0.0;
            for (int k = i + 1; k <= hi; ++k) {
                const double skj = (k >= j) ? S.at(k, j) : S.at(j, k);
                s -= lat(k, i) * skj;
            }
            S.at(j, i) = s / lii;
        }
    }
    return S;
}

}  // namespace addtrend
