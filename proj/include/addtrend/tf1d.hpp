#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "addtrend/banded.hpp"
#include "addtrend/diffop.hpp"

namespace addtrend {

struct TFSolverConfig {
    double rho = 0.0;          // ADMM step scale; 0 = auto (lambda clamped to [1e-4, 1e4])
    int max_iters = 20000;
    double abs_tol = 1e-8;
    double rel_tol = 1e-6;
    // Optimality is declared on the independently computed KKT certificate,
    // not on ADMM residuals.
    double cert_tol = 1e-8;
    double over_relax = 1.8;   // in (0, 2); 1 = plain ADMM
    bool adaptive_rho = true;  // residual balancing (factor 2 steps)
    // Threshold for declaring a nonzero of D theta a knot:
    // |.| > knot_tol_rel * max|D theta| with absolute floor knot_tol_abs.
    double knot_tol_rel = 1e-6;
    double knot_tol_abs = 1e-9;
    bool record_trace = false;  // keep per-iteration best criterion (debug)
};

// ADMM variables carried between solves for warm starting.
struct TFWarmState {
    std::vector<double> theta;
    std::vector<double> z;
    std::vector<double> u;  // scaled dual
    double rho = 0.0;
};

struct UnivariateFit {
    std::vector<double> theta;   // solution, in sorted-x order
    double lambda = 0.0;
    int k = 0;
    std::vector<double> dual_v;  // y - theta = D^T v
    std::vector<int> knots;      // indices with |(D theta)_l| above the knot threshold
    double criterion = 0.0;      // 0.5 ||y - theta||^2 + lambda ||D theta||_1
    double kkt_gap = 0.0;
    double knot_tol = 0.0;       // resolved threshold used for the knot set
    bool converged = true;
    int iters = 0;
    TFWarmState state;                 // for warm starts
    std::vector<double> trace;         // best-so-far criterion per iteration (if recorded)
};

struct KKTCertificate {
    std::vector<double> dual_v;
    double residual_inf = 0.0;   // ||r - D^T v||_inf
    double box_violation = 0.0;  // max(0, ||v||_inf - lambda)
    double sign_violation = 0.0; // max over knots of |v_l - lambda sign((D theta)_l)|
    double gap() const;
    std::vector<int> knots;
    double knot_tol = 0.0;
};

// Univariate trend filtering over fixed abscissae x and order k.  Holds the
// difference operator and caches banded Cholesky factors (one per rho); a
// solver instance is not meant to be shared across threads, but separate
// instances may solve concurrently.
class TF1DSolver {
public:
    TF1DSolver(std::vector<double> x, int k);

    const BandedDiffOp& op() const { return *D_; }
    int n() const { return n_; }
    int k() const { return k_; }

    UnivariateFit solve(std::span<const double> y, double lambda,
                        const TFSolverConfig& cfg = {},
                        const TFWarmState* warm = nullptr) const;

    // Certificate for an arbitrary candidate theta (see solve_kkt_certificate).
    KKTCertificate certificate(std::span<const double> theta, std::span<const double> y,
                               double lambda, double knot_tol_rel = 1e-6,
                               double knot_tol_abs = 1e-9) const;

    // Smallest lambda at which the solution is the degree-k polynomial fit:
    // || (D D^T)^{-1} D y ||_inf.
    double lambda_max(std::span<const double> y) const;

    double criterion(std::span<const double> theta, std::span<const double> y,
                     double lambda) const;

private:
    int n_, k_;
    bool degenerate_ = false;  // n <= k+1: penalty is vacuous
    std::unique_ptr<BandedDiffOp> D_;
    std::unique_ptr<SymBanded> gram_;        // D D^T
    std::unique_ptr<BandedCholesky> gram_chol_;
    std::unique_ptr<SymBanded> gramT_;       // D^T D
    // k >= 1 splits at one order lower: z = D^(X,k) theta, with the leading
    // weighted first-difference penalty handled exactly by a fused lasso
    // prox.  Bk_ is D^(X,k); wk_ the spacing weights k/(x_{l+k} - x_l).
    std::unique_ptr<BandedDiffOp> Bk_;
    std::vector<double> wk_;
    std::unique_ptr<SymBanded> gramTk_;      // Bk^T Bk
    mutable std::map<double, std::unique_ptr<BandedCholesky>> theta_chol_;

    const BandedCholesky& factor_for(double rho) const;
};

// One-shot convenience wrappers.
UnivariateFit tf_admm(std::span<const double> y, std::span<const double> x, int k,
                      double lambda, const TFSolverConfig& cfg = {},
                      const TFWarmState* warm = nullptr);

KKTCertificate solve_kkt_certificate(std::span<const double> theta,
                                     std::span<const double> y,
                                     std::span<const double> x, int k, double lambda);

double lambda_max(std::span<const double> y, std::span<const double> x, int k);

// Exact 1d fused lasso (k = 0 trend filtering) by dynamic programming.
std::vector<double> tf_dp_k0(std::span<const double> y, double lambda);

// Weighted variant: min sum_i a_i (t_i - b_i)^2 / 2 + lambda sum |t_{i+1} - t_i|
// with a_i > 0.  Backs the proximal step of the k >= 1 solver.
std::vector<double> weighted_fused_dp(std::span<const double> a, std::span<const double> b,
                                      double lambda);

}  // namespace addtrend
