#pragma once

#include <memory>
#include <span>
#include <vector>

#include "addtrend/design.hpp"

namespace addtrend {

// Natural cubic smoothing spline over fixed abscissae, Reinsch formulation:
// solving (I + lambda Q R^{-1} Q^T) theta = y via the banded SPD system
// (R + lambda Q^T Q) gamma = Q^T y, theta = y - lambda Q gamma, where gamma
// holds the interior second derivatives of the fitted spline.
class SmoothingSplineOp {
public:
    SmoothingSplineOp(std::vector<double> x, double lambda);

    int n() const { return n_; }
    double lambda() const { return lambda_; }
    const std::vector<double>& x() const { return x_; }

    // Fitted values at the abscissae, O(n).
    std::vector<double> smooth(std::span<const double> y) const;

    // Fitted values plus the interior second derivatives (for evaluation
    // away from the inputs).
    std::vector<double> smooth(std::span<const double> y,
                               std::vector<double>* gamma_out) const;

    // Effective df of the univariate smoother, tr((I + lambda K)^{-1}),
    // computed exactly from the in-band inverse of the Reinsch system.
    double trace() const;

    // Roughness theta^T K theta of an arbitrary vector over these abscissae.
    double roughness(std::span<const double> theta) const;

private:
    int n_;
    double lambda_;
    std::vector<double> x_, h_;  // gaps h[i] = x[i+1] - x[i]
    struct Impl;
    std::shared_ptr<const Impl> impl_;

    std::vector<double> qt_apply(std::span<const double> v) const;   // Q^T v
    std::vector<double> q_apply(std::span<const double> g) const;    // Q g
};

inline std::vector<double> smooth_spline(std::span<const double> y,
                                         const SmoothingSplineOp& op) {
    return op.smooth(y);
}

// Evaluates a fitted natural cubic spline (values theta at knots x, interior
// second derivatives gamma) anywhere; linear extension outside the range.
class NaturalSplineEval {
public:
    NaturalSplineEval(std::vector<double> x, std::vector<double> theta,
                      std::vector<double> gamma);
    double operator()(double t) const;

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& values() const { return theta_; }
    const std::vector<double>& second_derivs() const { return gamma_; }

private:
    std::vector<double> x_, theta_, gamma_;  // gamma padded with boundary zeros
};

struct AdditiveSplineConfig {
    int max_outer_iters = 100;
    double outer_tol = 1e-10;  // relative criterion change
    bool center_each_update = true;
    int df_reps = 40;          // Monte Carlo probes for the df estimate
    std::uint64_t df_seed = 2024;
    bool estimate_df = true;
};

struct AdditiveSplineFit {
    std::shared_ptr<const SortedDesign> design;
    std::vector<double> lambdas;
    double ybar = 0.0;
    std::vector<std::vector<double>> components;  // original row order
    std::vector<NaturalSplineEval> evaluators;    // per component, sorted knots
    double criterion = 0.0;
    double df = 0.0;    // Monte Carlo divergence estimate of df(sum theta_j)
    double df_se = 0.0;
    bool converged = false;
    int iters = 0;

    std::vector<double> fitted_sum() const;
    // ybar + sum_j f_j(x_j) at a new point.
    double predict(std::span<const double> x) const;
};

// Additive cubic smoothing splines by cyclic backfitting; the linear-smoother
// baseline for every comparison experiment.
AdditiveSplineFit backfit_splines(std::shared_ptr<const SortedDesign> design,
                                  std::span<const double> y,
                                  std::vector<double> lambdas,
                                  const AdditiveSplineConfig& cfg = {});

AdditiveSplineFit backfit_splines(const SortedDesign& design, std::span<const double> y,
                                  std::vector<double> lambdas,
                                  const AdditiveSplineConfig& cfg = {});

// Bisection on lambda so that the additive fit's Monte Carlo df matches a
// target (used to df-match the baseline against trend filtering).
double spline_lambda_for_df(const SortedDesign& design, double target_df,
                            const AdditiveSplineConfig& cfg = {},
                            double lo = 1e-12, double hi = 1e6);

// Log-spaced lambda grid whose endpoints hit the given univariate df targets
// (descending in lambda).
std::vector<double> spline_lambda_grid(const SortedDesign& design, int size,
                                       double df_hi_target, double df_lo_target);

}  // namespace addtrend
