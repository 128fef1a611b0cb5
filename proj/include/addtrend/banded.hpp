#pragma once

#include <span>
#include <vector>

namespace addtrend {

// Symmetric banded matrix in lower storage: entry (i+d, i) for subdiagonal
// d = 0..hb lives at band(d)[i].  Used for the small SPD systems that back
// trend filtering solves (D D^T, I + rho D^T D, Reinsch systems).
class SymBanded {
public:
    SymBanded(int n, int hb);

    int dim() const { return n_; }
    int half_bandwidth() const { return hb_; }

    // i >= j and i - j <= hb.
    double& at(int i, int j) { return a_[static_cast<std::size_t>(i - j) * n_ + j]; }
    double at(int i, int j) const { return a_[static_cast<std::size_t>(i - j) * n_ + j]; }

    // General accessor, symmetric and zero outside the band.
    double get(int i, int j) const;

    void add_identity(double c);
    void scale(double c);

    std::vector<double> multiply(std::span<const double> v) const;

private:
    int n_, hb_;
    std::vector<double> a_;
};

// Cholesky factorization A = L L^T of an SPD banded matrix; L shares the
// bandwidth of A.  Throws SingularGram on a non-positive pivot.
class BandedCholesky {
public:
    explicit BandedCholesky(const SymBanded& A);

    int dim() const { return n_; }

    void solve_in_place(std::span<double> b) const;
    std::vector<double> solve(std::span<const double> b) const;

    // In-band entries of A^{-1} (Hutchinson-de Hoog backward recursion);
    // enough to evaluate traces of A^{-1} B for banded B.
    SymBanded inverse_band() const;

private:
    int n_, hb_;
    std::vector<double> l_;  // same layout as SymBanded

    double lat(int i, int j) const { return l_[static_cast<std::size_t>(i - j) * n_ + j]; }
};

}  // namespace addtrend
