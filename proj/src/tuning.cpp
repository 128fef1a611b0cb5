#include "addtrend/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "addtrend/errors.hpp"
#include "addtrend/ffbasis.hpp"
#include "addtrend/model_io.hpp"
#include "addtrend/rng.hpp"

namespace addtrend {

namespace {

std::vector<int> assign_folds(int n, int K, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) fold[idx[r]] = r % K;
    return fold;
}

std::vector<double> log_spaced_desc(double top, double bottom, int size) {
    std::vector<double> grid(static_cast<std::size_t>(size));
    if (size == 1) {
        grid[0] = top;
        return grid;
    }
    const double lt = std::log(top), lb = std::log(bottom);
    for (int g = 0; g < size; ++g)
        grid[g] = std::exp(lt + (lb - lt) * static_cast<double>(g) / (size - 1));
    return grid;
}

void pick_selected(CVResult& res, bool one_se) {
    const int G = static_cast<int>(res.lambda_grid.size());
    int best = 0;
    for (int g = 1; g < G; ++g)
        if (res.mean_error[g] < res.mean_error[best]) best = g;
    if (one_se) {
        // largest lambda (lowest index: grid is descending) within one
        // standard error of the minimum
        const double cutoff = res.mean_error[best] + res.se_error[best];
        for (int g = 0; g <= best; ++g) {
            if (res.mean_error[g] <= cutoff) {
                best = g;
                break;
            }
        }
    }
    res.selected_index = best;
    res.selected_lambda = res.lambda_grid[best];
}

}  // namespace

std::vector<double> default_lambda_grid(const SortedDesign& design, std::span<const double> y,
                                        int k, int size, double min_ratio) {
    double lmax = additive_lambda_max(design, y, k);
    if (!(lmax > 0.0)) lmax = 1.0;
    return log_spaced_desc(lmax, lmax * min_ratio, size);
}

CVResult cv_single_lambda(const SortedDesign& design, std::span<const double> y, int k,
                          std::span<const double> grid, const CVConfig& cfg,
                          FitMethod method) {
    if (cfg.folds < 2) throw Error("cross-validation needs K >= 2");
    if (grid.empty()) throw Error("empty lambda grid");
    const int n = design.n();
    const int d = design.d();
    const int G = static_cast<int>(grid.size());

    CVResult res;
    res.lambda_grid.assign(grid.begin(), grid.end());
    res.seed = cfg.seed;
    res.fold_of = assign_folds(n, cfg.folds, cfg.seed);
    res.fold_errors.assign(static_cast<std::size_t>(G),
                           std::vector<double>(static_cast<std::size_t>(cfg.folds), 0.0));

    for (int f = 0; f < cfg.folds; ++f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i)
            (res.fold_of[i] == f ? test_rows : train_rows).push_back(i);
        if (static_cast<int>(train_rows.size()) < k + 2)
            throw FoldTooSmall(static_cast<int>(train_rows.size()), k);

        auto train_design =
            std::make_shared<SortedDesign>(design.subset(train_rows));
        std::vector<double> train_y, test_y;
        train_y.reserve(train_rows.size());
        for (int i : train_rows) train_y.push_back(y[i]);
        for (int i : test_rows) test_y.push_back(y[i]);
        std::vector<std::vector<double>> test_cols(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j)
            for (int i : test_rows) test_cols[j].push_back(design.column(j)[i]);

        if (method == FitMethod::tf) {
            std::vector<std::vector<double>> warm;
            for (int g = 0; g < G; ++g) {
                auto model = backfit_cyclic(train_design, train_y, k,
                                            {static_cast<double>(grid[g])}, cfg.backfit,
                                            warm.empty() ? nullptr : &warm);
                warm = model.components;
                auto pm = to_predictive(model);
                auto pred = pm.predict_rows(test_cols);
                double err = 0.0;
                for (std::size_t i = 0; i < pred.size(); ++i) {
                    const double e = pred[i] - test_y[i];
                    err += e * e;
                }
                res.fold_errors[g][f] = err / static_cast<double>(pred.size());
            }
        } else {
            AdditiveSplineConfig scfg = cfg.spline;
            scfg.estimate_df = false;
            for (int g = 0; g < G; ++g) {
                auto fit = backfit_splines(train_design, train_y,
                                           {static_cast<double>(grid[g])}, scfg);
                double err = 0.0;
                for (std::size_t i = 0; i < test_y.size(); ++i) {
                    std::vector<double> row(static_cast<std::size_t>(d));
                    for (int j = 0; j < d; ++j) row[j] = test_cols[j][i];
                    const double e = fit.predict(row) - test_y[i];
                    err += e * e;
                }
                res.fold_errors[g][f] = err / static_cast<double>(test_y.size());
            }
        }
    }

    res.mean_error.resize(static_cast<std::size_t>(G));
    res.se_error.resize(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) {
        double mean = 0.0;
        for (double e : res.fold_errors[g]) mean += e;
        mean /= cfg.folds;
        double var = 0.0;
        for (double e : res.fold_errors[g]) var += (e - mean) * (e - mean);
        var /= std::max(1, cfg.folds - 1);
        res.mean_error[g] = mean;
        res.se_error[g] = std::sqrt(var / cfg.folds);
    }
    pick_selected(res, cfg.one_se_rule);
    return res;
}

namespace {

// Univariate K-fold CV of trend filtering on (x, r); returns the selected
// lambda and its mean CV error.  Held-out prediction goes through the
// falling factorial extrapolation.
std::pair<double, double> cv_univariate_tf(std::span<const double> x,
                                           std::span<const double> r, int k,
                                           std::span<const double> grid, int K,
                                           std::uint64_t seed,
                                           const TFSolverConfig& inner) {
    const int n = static_cast<int>(x.size());
    auto fold_of = assign_folds(n, K, seed);
    const int G = static_cast<int>(grid.size());
    std::vector<double> err(static_cast<std::size_t>(G), 0.0);

    for (int f = 0; f < K; ++f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i) (fold_of[i] == f ? test_rows : train_rows).push_back(i);
        if (static_cast<int>(train_rows.size()) < k + 2)
            throw FoldTooSmall(static_cast<int>(train_rows.size()), k);
        std::vector<double> xt, rt;
        for (int i : train_rows) xt.push_back(x[i]);
        for (int i : train_rows) rt.push_back(r[i]);
        std::vector<int> ord(train_rows.size());
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return xt[a] < xt[b]; });
        std::vector<double> xs, rs;
        xs.reserve(ord.size());
        rs.reserve(ord.size());
        for (int i : ord) {
            xs.push_back(xt[i]);
            rs.push_back(rt[i]);
        }
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            if (!(xs[i] < xs[i + 1])) throw DuplicateInputs(0);

        TF1DSolver solver(xs, k);
        FFBasis basis(xs, k);
        TFWarmState warm;
        for (int g = 0; g < G; ++g) {
            auto fit = solver.solve(rs, grid[g], inner, warm.rho > 0.0 ? &warm : nullptr);
            warm = fit.state;
            auto coef = coefficients_from_theta(fit.theta, basis);
            double e = 0.0;
            for (int i : test_rows) {
                const double diff = coef.predict(x[i]) - r[i];
                e += diff * diff;
            }
            err[g] += e / static_cast<double>(test_rows.size());
        }
    }
    int best = 0;
    for (int g = 1; g < G; ++g)
        if (err[g] < err[best]) best = g;
    return {grid[best], err[best] / K};
}

}  // namespace

BackfitCVResult backfit_cv(const SortedDesign& design, std::span<const double> y, int k,
                           std::span<const double> initial_grid, const BackfitCVConfig& cfg) {
    const int n = design.n();
    const int d = design.d();
    auto design_ptr = std::make_shared<SortedDesign>(design);

    BackfitCVResult out;
    out.initial_cv = cv_single_lambda(design, y, k, initial_grid, cfg.cv, FitMethod::tf);
    const double lambda0 = out.initial_cv.selected_lambda;
    out.model = backfit_cyclic(design_ptr, y, k, {lambda0}, cfg.cv.backfit);
    out.lambdas.assign(static_cast<std::size_t>(d), lambda0);

    auto cr = center_response(y);
    auto comps = out.model.components;
    std::vector<std::unique_ptr<TF1DSolver>> solvers;
    for (int j = 0; j < d; ++j)
        solvers.push_back(std::make_unique<TF1DSolver>(design.sorted(j), k));
    std::vector<TFWarmState> warm(static_cast<std::size_t>(d));

    double best_score = std::numeric_limits<double>::infinity();
    std::vector<double> best_lambdas = out.lambdas;
    auto best_comps = comps;
    double prev_crit = std::numeric_limits<double>::infinity();
    auto prev_lambdas = out.lambdas;

    int sweep = 0;
    for (sweep = 1; sweep <= cfg.sweep_cap; ++sweep) {
        double score = 0.0;
        for (int j = 0; j < d; ++j) {
            std::vector<double> partial(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                partial[i] = cr.centered[i];
                for (int l = 0; l < d; ++l)
                    if (l != j) partial[i] -= comps[l][i];
            }
            // per-component grid from the current partial residual
            auto ps = design.to_sorted(j, partial);
            double lmax = solvers[j]->lambda_max(ps);
            if (!(lmax > 0.0)) lmax = 1.0;
            auto grid = log_spaced_desc(lmax, lmax * cfg.grid_min_ratio, cfg.grid_size);
            auto [lam, err] = cv_univariate_tf(design.column(j), partial, k, grid,
                                               cfg.cv.folds, Rng::derive(cfg.cv.seed, j),
                                               cfg.cv.backfit.inner);
            score += err;
            out.lambdas[j] = lam;
            auto fit = solvers[j]->solve(ps, lam, cfg.cv.backfit.inner,
                                         warm[j].rho > 0.0 ? &warm[j] : nullptr);
            auto theta_sorted = fit.theta;
            const double m = std::accumulate(theta_sorted.begin(), theta_sorted.end(), 0.0) /
                             static_cast<double>(n);
            for (auto& v : theta_sorted) v -= m;
            comps[j] = design.from_sorted(j, theta_sorted);
            warm[j] = std::move(fit.state);
        }
        if (score < best_score) {
            best_score = score;
            best_lambdas = out.lambdas;
            best_comps = comps;
        }
        // stabilization: lambda vector unchanged and criterion settled
        double crit = 0.0;
        {
            std::vector<double> resid = cr.centered;
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < n; ++i) resid[i] -= comps[j][i];
            for (double v : resid) crit += v * v;
            crit *= 0.5;
            for (int j = 0; j < d; ++j) {
                auto ts = design.to_sorted(j, comps[j]);
                auto dt = solvers[j]->op().apply(ts);
                double s = 0.0;
                for (double v : dt) s += std::fabs(v);
                crit += out.lambdas[j] * s;
            }
        }
        double lam_change = 0.0;
        for (int j = 0; j < d; ++j)
            lam_change = std::max(lam_change, std::fabs(out.lambdas[j] - prev_lambdas[j]) /
                                                  std::max(1e-300, prev_lambdas[j]));
        if (lam_change <= 1e-3 &&
            std::fabs(prev_crit - crit) <= cfg.stabilize_tol * (1.0 + std::fabs(crit))) {
            out.converged = true;
            break;
        }
        prev_lambdas = out.lambdas;
        prev_crit = crit;
    }
    out.sweeps = std::min(sweep, cfg.sweep_cap);
    if (!out.converged) {
        out.lambdas = best_lambdas;
        comps = best_comps;
    }
    out.validation_score = best_score;
    // final refit at the selected vector for a certified model
    out.model = backfit_cyclic(design_ptr, y, k, out.lambdas, cfg.cv.backfit, &comps);
    return out;
}

void write_cv_trace_csv(const CVResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "lambda,fold,error\n";
    char buf[64];
    for (std::size_t g = 0; g < result.lambda_grid.size(); ++g)
        for (std::size_t f = 0; f < result.fold_errors[g].size(); ++f) {
            std::snprintf(buf, sizeof(buf), "%.17g,%zu,%.17g\n", result.lambda_grid[g], f,
                          result.fold_errors[g][f]);
            out << buf;
        }
}

}  // namespace addtrend
