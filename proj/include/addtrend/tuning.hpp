#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "addtrend/additive.hpp"
#include "addtrend/splinebase.hpp"

namespace addtrend {

enum class FitMethod { tf, spline };

struct CVConfig {
    int folds = 5;
    std::uint64_t seed = 1;
    bool one_se_rule = false;  // default: min rule
    BackfitConfig backfit;             // trend filtering fits
    AdditiveSplineConfig spline;       // spline fits (df estimation off inside CV)
};

struct CVResult {
    std::vector<double> lambda_grid;                 // descending
    std::vector<std::vector<double>> fold_errors;    // [grid][fold] mean squared errors
    std::vector<double> mean_error;
    std::vector<double> se_error;
    double selected_lambda = 0.0;
    int selected_index = -1;
    std::uint64_t seed = 0;
    std::vector<int> fold_of;  // fold assignment per row
};

// Default trend filtering grid: `size` log-spaced values from lambda_max
// down to lambda_max * min_ratio, descending.
std::vector<double> default_lambda_grid(const SortedDesign& design, std::span<const double> y,
                                        int k, int size = 50, double min_ratio = 1e-4);

// K-fold cross-validation of a single shared lambda.  Held-out rows are
// predicted through the basis extrapolation (trend filtering) or natural
// spline evaluation (splines); per-fold designs make leakage structurally
// impossible.  Deterministic given the seed.
CVResult cv_single_lambda(const SortedDesign& design, std::span<const double> y, int k,
                          std::span<const double> grid, const CVConfig& cfg,
                          FitMethod method = FitMethod::tf);

struct BackfitCVResult {
    std::vector<double> lambdas;  // selected per component
    AdditiveModel model;
    CVResult initial_cv;          // the single-lambda CV used for initialization
    double validation_score = 0.0;  // sum of selected univariate CV errors
    bool converged = false;       // the sweep procedure is a heuristic and may not settle
    int sweeps = 0;
};

struct BackfitCVConfig {
    CVConfig cv;
    int sweep_cap = 20;
    int grid_size = 50;
    double grid_min_ratio = 1e-4;
    double stabilize_tol = 1e-8;  // relative criterion change defining stabilization
};

// Per-component tuning heuristic: inside each backfitting sweep, pick each
// lambda_j by univariate CV on the current partial residual, then refit that
// component.  Initialized from the single-lambda CV solution.  When the
// procedure does not settle, the best iterate by validation score is
// returned with converged = false.
BackfitCVResult backfit_cv(const SortedDesign& design, std::span<const double> y, int k,
                           std::span<const double> initial_grid, const BackfitCVConfig& cfg);

// Writes (lambda, fold, error) rows.
void write_cv_trace_csv(const CVResult& result, const std::string& path);

}  // namespace addtrend
