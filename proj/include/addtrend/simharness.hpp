#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "addtrend/additive.hpp"
#include "addtrend/splinebase.hpp"
#include "addtrend/tuning.hpp"

namespace addtrend {

enum class Scenario { motivating, doppler, homogeneous };

struct SimScenario {
    Scenario name = Scenario::motivating;
    int n = 300;
    int d = 3;            // fixed at 3 for the motivating scenario
    double snr = 0.0;     // 0: use sigma directly
    double sigma = 1.72;  // motivating-scenario default noise level
    std::uint64_t seed = 1;
    int k = 2;
};

// One generated data set: inputs, true component values, their sum, the
// noise level, and a response drawn at replication 0.  The inputs and truth
// are functions of (parameters, seed) alone; noise varies by replication.
struct ScenarioData {
    SimScenario scenario;
    std::vector<std::vector<double>> x;   // d columns
    std::vector<std::vector<double>> f0;  // centered component values, d columns
    std::vector<double> f0_sum;
    double sigma = 0.0;
    std::vector<double> y;  // f0_sum + noise(rep 0)

    // Response for an arbitrary replication (deterministic sub-seed).
    std::vector<double> response(int rep) const;
};

ScenarioData gen_motivating(int n, std::uint64_t seed, double sigma = 1.72,
                            double snr = 0.0);
ScenarioData gen_doppler(int n, int d, double snr, std::uint64_t seed);
ScenarioData gen_homogeneous(int n, int d, double snr, std::uint64_t seed);
ScenarioData generate(const SimScenario& scenario);

struct MSECurve {
    Scenario scenario;
    FitMethod method = FitMethod::tf;
    std::vector<double> grid;                       // descending lambda
    std::vector<std::vector<double>> mse;           // [grid][rep], ||fit - f0||_n^2
    std::vector<std::vector<std::vector<double>>> fits;  // [grid][rep] fitted sums
    std::vector<double> mean_mse, sd_mse;
    std::vector<double> df;  // Monte Carlo covariance df per grid point
    int reps = 0;

    int argmin_mean() const;
};

struct MSECurveConfig {
    BackfitConfig backfit;
    AdditiveSplineConfig spline;
    bool keep_fits = true;
};

// Fits the method across the grid for `reps` noise replications on a fixed
// (X, f0) and records per-replication MSE against the truth plus the Monte
// Carlo df, Cov(fit_i, y_i)/sigma^2 summed over i.
MSECurve mse_curve(const ScenarioData& data, FitMethod method, std::span<const double> grid,
                   int reps, const MSECurveConfig& cfg = {});

void write_tidy_csv(std::span<const MSECurve> curves, const std::string& path);

enum class BackfitAlgorithm { cyclic, parallel, naive_parallel };

struct ConvergenceTrace {
    BackfitAlgorithm algorithm;
    std::vector<double> criterion;  // per sweep
    double best_criterion = 0.0;
    // first sweep with criterion - best <= target (1 + |best|); -1 if never
    int sweeps_to_target = -1;
    // "ideal" accounting: one parallel sweep of d components costs 1/d of a
    // serial sweep
    double ideal_iterations_to_target = -1.0;
};

struct ConvergenceProblem {
    std::shared_ptr<const SortedDesign> design;
    std::vector<double> y;
    int k = 2;
    std::vector<double> lambdas;
};

// Runs the requested algorithms on one fixed problem, tracing criterion
// suboptimality per sweep against the best criterion found.  The naive
// variant (u0 = raw residual) is included as a negative control; it has no
// convergence guarantee and stalls on correlated designs.
std::vector<ConvergenceTrace> convergence_trace(const ConvergenceProblem& problem,
                                                std::span<const BackfitAlgorithm> algorithms,
                                                double target_subopt,
                                                const BackfitConfig& cfg = {},
                                                int max_sweeps = 2000);

const char* scenario_name(Scenario s);
const char* method_name(FitMethod m);

}  // namespace addtrend
