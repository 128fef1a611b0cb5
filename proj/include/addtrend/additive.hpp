#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "addtrend/design.hpp"
#include "addtrend/tf1d.hpp"

namespace addtrend {

struct BackfitConfig {
    int max_outer_iters = 100;
    double outer_tol = 1e-9;      // relative criterion change
    double cert_tol = 1e-6;       // whole-model KKT gap required to declare convergence
    double rho = 1.0;             // augmentation scale of the parallel algorithm
    TFSolverConfig inner;
    bool center_each_update = true;
    bool randomize_order = false;           // cyclic update order shuffled per sweep
    std::uint64_t order_seed = 0;
    int threads = 1;                        // workers for the parallel algorithm
    std::function<void(int, double)> on_sweep;  // observer: (sweep, criterion)
    // optional early exit once the criterion reaches a known target
    // (used by convergence tracing)
    double stop_below = -std::numeric_limits<double>::infinity();
};

struct AdditiveModel {
    std::shared_ptr<const SortedDesign> design;
    int k = 0;
    std::vector<double> lambdas;               // one per component
    double ybar = 0.0;
    std::vector<std::vector<double>> components;  // theta_j, original row order
    std::vector<int> knot_counts;
    double criterion = 0.0;
    int df_estimate = 0;   // sum of knot counts + k d
    double kkt_gap = 0.0;  // whole-model certificate at return
    bool converged = false;
    int iters = 0;

    // ybar + sum_j theta_j, original row order.
    std::vector<double> fitted() const;
    // sum_j theta_j only.
    std::vector<double> fitted_sum() const;
};

struct AdditiveCertificate {
    double gap = 0.0;
    double residual_inf = 0.0;
    double box_violation = 0.0;
    double sign_violation = 0.0;
    std::vector<double> per_component_gap;
};

// Criterion of the additive problem at the model's components:
// 0.5 || y - ybar - sum theta_j ||^2 + sum_j lambda_j || D_j S_j theta_j ||_1.
double additive_criterion(const AdditiveModel& model, std::span<const double> y);

// Cyclic backfitting (block coordinate descent): component j is refit by
// univariate trend filtering on its partial residual, in turn, with inner
// warm starts, until the criterion stabilizes and the whole-model
// certificate passes.
AdditiveModel backfit_cyclic(std::shared_ptr<const SortedDesign> design,
                             std::span<const double> y, int k,
                             std::vector<double> lambdas, const BackfitConfig& cfg = {},
                             const std::vector<std::vector<double>>* init = nullptr);

// Parallel backfitting: consensus-ADMM on the dual whose d per-component
// trend filtering solves are independent within a sweep (executable on up
// to d workers; results do not depend on the worker count).  The scaled
// dual iterates are returned as the primal components.
AdditiveModel backfit_parallel(std::shared_ptr<const SortedDesign> design,
                               std::span<const double> y, int k,
                               std::vector<double> lambdas, const BackfitConfig& cfg = {},
                               const std::vector<std::vector<double>>* init = nullptr);

// Whole-model KKT certificate: u = y - ybar - sum theta_j must decompose as
// S_j^T D_j^T v_j with ||v_j||_inf <= lambda_j and matched signs on knots.
AdditiveCertificate certify_additive(const AdditiveModel& model, std::span<const double> y);

// Lemma-style unbiased df estimate: sum_j (#knots in theta_j) + k d.
int degrees_of_freedom(const AdditiveModel& model);

// max_j of the univariate lambda_max of the centered response over X_j;
// above this the backfit solution is knot-free in every component.
double additive_lambda_max(const SortedDesign& design, std::span<const double> y, int k);

// Convenience overloads taking the design by value.
AdditiveModel backfit_cyclic(const SortedDesign& design, std::span<const double> y, int k,
                             std::vector<double> lambdas, const BackfitConfig& cfg = {});
AdditiveModel backfit_parallel(const SortedDesign& design, std::span<const double> y, int k,
                               std::vector<double> lambdas, const BackfitConfig& cfg = {});

}  // namespace addtrend
