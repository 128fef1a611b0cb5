#include "addtrend/splinebase.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "addtrend/banded.hpp"
#include "addtrend/errors.hpp"
#include "addtrend/rng.hpp"

namespace addtrend {

// R: (n-2)x(n-2) tridiagonal Gram of the natural spline second derivatives;
// Q: n x (n-2) second-difference map.  Both live only through their actions
// and the factored (R + lambda Q^T Q).
struct SmoothingSplineOp::Impl {
    SymBanded R{1, 0};
    std::unique_ptr<BandedCholesky> system;   // chol(R + lambda Q^T Q)
    std::unique_ptr<BandedCholesky> r_chol;   // chol(R), for roughness values
    double trace = 0.0;
};

SmoothingSplineOp::SmoothingSplineOp(std::vector<double> x, double lambda)
    : n_(static_cast<int>(x.size())), lambda_(lambda), x_(std::move(x)) {
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_))
        throw Error("smoothing spline lambda must be finite and >= 0");
    for (int i = 0; i + 1 < n_; ++i)
        if (!(x_[i] < x_[i + 1])) throw NotIncreasing();
    h_.resize(std::max(0, n_ - 1));
    for (int i = 0; i + 1 < n_; ++i) h_[i] = x_[i + 1] - x_[i];

    auto impl = std::make_shared<Impl>();
    const int m = n_ - 2;
    if (m > 0) {
        SymBanded R(m, 1);
        for (int i = 0; i < m; ++i) {
            R.at(i, i) = (h_[i] + h_[i + 1]) / 3.0;
            if (i + 1 < m) R.at(i + 1, i) = h_[i + 1] / 6.0;
        }
        impl->R = R;
        impl->r_chol = std::make_unique<BandedCholesky>(R);

        // Q column i has entries 1/h_i, -(1/h_i + 1/h_{i+1}), 1/h_{i+1} at
        // rows i, i+1, i+2; accumulate Q^T Q (half-bandwidth 2).
        auto qcol = [&](int i, int r) -> double {
            if (r == i) return 1.0 / h_[i];
            if (r == i + 1) return -1.0 / h_[i] - 1.0 / h_[i + 1];
            if (r == i + 2) return 1.0 / h_[i + 1];
            return 0.0;
        };
        SymBanded QtQ(m, 2);
        for (int i = 0; i < m; ++i)
            for (int j = std::max(0, i - 2); j <= i; ++j) {
                double s = 0.0;
                for (int r = i; r <= std::min(i + 2, j + 2); ++r) s += qcol(i, r) * qcol(j, r);
                QtQ.at(i, j) = s;
            }
        SymBanded A(m, 2);
        for (int i = 0; i < m; ++i)
            for (int j = std::max(0, i - 2); j <= i; ++j)
                A.at(i, j) = lambda_ * QtQ.at(i, j) + (i - j <= 1 ? R.at(i, j) : 0.0);
        impl->system = std::make_unique<BandedCholesky>(A);

        // tr((I + lambda K)^{-1}) = n - lambda tr((R + lambda Q^T Q)^{-1} Q^T Q)
        SymBanded inv = impl->system->inverse_band();
        double tr = 0.0;
        for (int i = 0; i < m; ++i) {
            tr += inv.at(i, i) * QtQ.at(i, i);
            for (int j = std::max(0, i - 2); j < i; ++j)
                tr += 2.0 * inv.at(i, j) * QtQ.at(i, j);
        }
        impl->trace = n_ - lambda_ * tr;
    } else {
        impl->trace = n_;
    }
    impl_ = std::move(impl);
}

std::vector<double> SmoothingSplineOp::qt_apply(std::span<const double> v) const {
    const int m = n_ - 2;
    std::vector<double> out(static_cast<std::size_t>(std::max(0, m)), 0.0);
    for (int i = 0; i < m; ++i)
        out[i] = v[i] / h_[i] - v[i + 1] * (1.0 / h_[i] + 1.0 / h_[i + 1]) +
                 v[i + 2] / h_[i + 1];
    return out;
}

std::vector<double> SmoothingSplineOp::q_apply(std::span<const double> g) const {
    const int m = n_ - 2;
    std::vector<double> out(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < m; ++i) {
        out[i] += g[i] / h_[i];
        out[i + 1] -= g[i] * (1.0 / h_[i] + 1.0 / h_[i + 1]);
        out[i + 2] += g[i] / h_[i + 1];
    }
    return out;
}

std::vector<double> SmoothingSplineOp::smooth(std::span<const double> y,
                                              std::vector<double>* gamma_out) const {
    if (static_cast<int>(y.size()) != n_) throw ShapeMismatch("smooth: length mismatch");
    std::vector<double> theta(y.begin(), y.end());
    const int m = n_ - 2;
    if (m <= 0 || lambda_ == 0.0) {
        if (gamma_out) {
            // interpolation: second derivatives of the natural interpolating
            // spline solve R gamma = Q^T y
            if (m > 0) {
                auto g = impl_->r_chol->solve(qt_apply(y));
                *gamma_out = std::move(g);
            } else {
                gamma_out->clear();
            }
        }
        return theta;
    }
    auto gamma = impl_->system->solve(qt_apply(y));
    auto qg = q_apply(gamma);
    for (int i = 0; i < n_; ++i) theta[i] -= lambda_ * qg[i];
    if (gamma_out) *gamma_out = std::move(gamma);
    return theta;
}

std::vector<double> SmoothingSplineOp::smooth(std::span<const double> y) const {
    return smooth(y, nullptr);
}

double SmoothingSplineOp::trace() const { return impl_->trace; }

double SmoothingSplineOp::roughness(std::span<const double> theta) const {
    const int m = n_ - 2;
    if (m <= 0) return 0.0;
    auto qt = qt_apply(theta);
    auto w = impl_->r_chol->solve(qt);
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += w[i] * qt[i];
    return s;
}

NaturalSplineEval::NaturalSplineEval(std::vector<double> x, std::vector<double> theta,
                                     std::vector<double> gamma)
    : x_(std::move(x)), theta_(std::move(theta)) {
    gamma_.assign(x_.size(), 0.0);
    if (gamma.size() + 2 == x_.size()) {
        for (std::size_t i = 0; i < gamma.size(); ++i) gamma_[i + 1] = gamma[i];
    } else if (gamma.size() == x_.size()) {
        gamma_ = std::move(gamma);
    } else if (!gamma.empty()) {
        throw ShapeMismatch("second derivative vector has wrong length");
    }
}

double NaturalSplineEval::operator()(double t) const {
    const int n = static_cast<int>(x_.size());
    if (n == 1) return theta_[0];
    if (n == 2) {
        const double slope = (theta_[1] - theta_[0]) / (x_[1] - x_[0]);
        return theta_[0] + slope * (t - x_[0]);
    }
    if (t <= x_[0]) {
        const double h = x_[1] - x_[0];
        const double slope = (theta_[1] - theta_[0]) / h - h / 6.0 * (2.0 * gamma_[0] + gamma_[1]);
        return theta_[0] + slope * (t - x_[0]);
    }
    if (t >= x_[n - 1]) {
        const double h = x_[n - 1] - x_[n - 2];
        const double slope = (theta_[n - 1] - theta_[n - 2]) / h +
                             h / 6.0 * (gamma_[n - 2] + 2.0 * gamma_[n - 1]);
        return theta_[n - 1] + slope * (t - x_[n - 1]);
    }
    const int i =
        static_cast<int>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return a * theta_[i] + b * theta_[i + 1] +
           ((a * a * a - a) * gamma_[i] + (b * b * b - b) * gamma_[i + 1]) * h * h / 6.0;
}

std::vector<double> AdditiveSplineFit::fitted_sum() const {
    std::vector<double> out(static_cast<std::size_t>(design->n()), 0.0);
    for (const auto& comp : components)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += comp[i];
    return out;
}

double AdditiveSplineFit::predict(std::span<const double> x) const {
    double v = ybar;
    for (std::size_t j = 0; j < evaluators.size(); ++j) v += evaluators[j](x[j]);
    return v;
}

namespace {

struct SplineWorkspace {
    std::shared_ptr<const SortedDesign> design;
    std::vector<SmoothingSplineOp> ops;

    SplineWorkspace(std::shared_ptr<const SortedDesign> des, std::span<const double> lambdas)
        : design(std::move(des)) {
        for (int j = 0; j < design->d(); ++j)
            ops.emplace_back(design->sorted(j), lambdas[j]);
    }
};

double spline_criterion(const SplineWorkspace& ws, std::span<const double> y_centered,
                        const std::vector<std::vector<double>>& comps,
                        std::span<const double> lambdas) {
    const int n = ws.design->n();
    const int d = ws.design->d();
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = y_centered[i];
        for (int j = 0; j < d; ++j) r -= comps[j][i];
        loss += r * r;
    }
    double pen = 0.0;
    for (int j = 0; j < d; ++j) {
        auto sorted_theta = ws.design->to_sorted(j, comps[j]);
        pen += lambdas[j] * ws.ops[j].roughness(sorted_theta);
    }
    return loss + pen;
}

// One full backfit on an arbitrary centered target; used both for the fit
// itself and for the Monte Carlo df probes (the smoother is linear).
std::vector<std::vector<double>> spline_backfit_components(
    const SplineWorkspace& ws, std::span<const double> target,
    std::span<const double> lambdas, const AdditiveSplineConfig& cfg, int* iters_out,
    bool* converged_out) {
    const int n = ws.design->n();
    const int d = ws.design->d();
    std::vector<std::vector<double>> comps(
        static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    std::vector<double> resid(target.begin(), target.end());
    double prev_crit = std::numeric_limits<double>::infinity();
    bool converged = false;
    int sweep = 0;
    for (sweep = 1; sweep <= cfg.max_outer_iters; ++sweep) {
        for (int j = 0; j < d; ++j) {
            std::vector<double> partial(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) partial[i] = resid[i] + comps[j][i];
            auto sorted_partial = ws.design->to_sorted(j, partial);
            auto theta_sorted = ws.ops[j].smooth(sorted_partial);
            if (cfg.center_each_update) {
                const double m = std::accumulate(theta_sorted.begin(), theta_sorted.end(), 0.0) /
                                 static_cast<double>(n);
                for (auto& v : theta_sorted) v -= m;
            }
            auto theta_new = ws.design->from_sorted(j, theta_sorted);
            for (int i = 0; i < n; ++i) resid[i] += comps[j][i] - theta_new[i];
            comps[j] = std::move(theta_new);
        }
        const double crit = spline_criterion(ws, target, comps, lambdas);
        if (std::fabs(prev_crit - crit) <= cfg.outer_tol * (1.0 + std::fabs(crit))) {
            converged = true;
            break;
        }
        prev_crit = crit;
    }
    if (iters_out) *iters_out = std::min(sweep, cfg.max_outer_iters);
    if (converged_out) *converged_out = converged;
    return comps;
}

}  // namespace

AdditiveSplineFit backfit_splines(std::shared_ptr<const SortedDesign> design,
                                  std::span<const double> y, std::vector<double> lambdas,
                                  const AdditiveSplineConfig& cfg) {
    const int d = design->d();
    const int n = design->n();
    if (static_cast<int>(lambdas.size()) == 1 && d > 1)
        lambdas.assign(static_cast<std::size_t>(d), lambdas[0]);
    if (static_cast<int>(lambdas.size()) != d)
        throw ShapeMismatch("lambdas length must match design dimension");

    auto cr = center_response(y);
    SplineWorkspace ws(design, lambdas);

    AdditiveSplineFit fit;
    fit.design = design;
    fit.lambdas = lambdas;
    fit.ybar = cr.ybar;
    fit.components = spline_backfit_components(ws, cr.centered, lambdas, cfg, &fit.iters,
                                               &fit.converged);
    fit.criterion = spline_criterion(ws, cr.centered, fit.components, lambdas);

    // per-component evaluators: refit second derivatives of each component
    for (int j = 0; j < d; ++j) {
        auto theta_sorted = design->to_sorted(j, fit.components[j]);
        SmoothingSplineOp interp(design->sorted(j), 0.0);
        std::vector<double> gamma;
        interp.smooth(theta_sorted, &gamma);
        fit.evaluators.emplace_back(design->sorted(j), std::move(theta_sorted),
                                    std::move(gamma));
    }

    // Monte Carlo divergence df of the map y -> sum theta_j(y); linearity
    // makes the estimate center-free.
    if (cfg.estimate_df && cfg.df_reps > 1) {
        Rng rng(cfg.df_seed);
        std::vector<double> per_rep(static_cast<std::size_t>(cfg.df_reps), 0.0);
        for (int r = 0; r < cfg.df_reps; ++r) {
            auto eps = rng.normals(n);
            auto comps = spline_backfit_components(ws, eps, lambdas, cfg, nullptr, nullptr);
            double t = 0.0;
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < n; ++i) t += comps[j][i] * eps[i];
            per_rep[r] = t;
        }
        double mean = std::accumulate(per_rep.begin(), per_rep.end(), 0.0) / cfg.df_reps;
        double var = 0.0;
        for (double v : per_rep) var += (v - mean) * (v - mean);
        var /= (cfg.df_reps - 1);
        fit.df = mean;
        fit.df_se = std::sqrt(var / cfg.df_reps);
    }
    return fit;
}

AdditiveSplineFit backfit_splines(const SortedDesign& design, std::span<const double> y,
                                  std::vector<double> lambdas,
                                  const AdditiveSplineConfig& cfg) {
    return backfit_splines(std::make_shared<SortedDesign>(design), y, std::move(lambdas), cfg);
}

double spline_lambda_for_df(const SortedDesign& design, double target_df,
                            const AdditiveSplineConfig& cfg, double lo, double hi) {
    auto df_at = [&](double lam) {
        SplineWorkspace ws(std::make_shared<SortedDesign>(design),
                           std::vector<double>(design.d(), lam));
        Rng rng(cfg.df_seed);
        const int n = design.n();
        double acc = 0.0;
        for (int r = 0; r < cfg.df_reps; ++r) {
            auto eps = rng.normals(n);
            auto comps = spline_backfit_components(
                ws, eps, std::vector<double>(design.d(), lam), cfg, nullptr, nullptr);
            for (int j = 0; j < design.d(); ++j)
                for (int i = 0; i < n; ++i) acc += comps[j][i] * eps[i];
        }
        return acc / cfg.df_reps;
    };
    // df decreases in lambda; bisect on log lambda
    double llo = std::log(lo), lhi = std::log(hi);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (llo + lhi);
        if (df_at(std::exp(mid)) > target_df)
            llo = mid;
        else
            lhi = mid;
    }
    return std::exp(0.5 * (llo + lhi));
}

std::vector<double> spline_lambda_grid(const SortedDesign& design, int size,
                                       double df_hi_target, double df_lo_target) {
    // Exact univariate traces drive the endpoints; bisection per endpoint.
    auto max_trace_at = [&](double lam) {
        double t = 0.0;
        for (int j = 0; j < design.d(); ++j) {
            SmoothingSplineOp op(design.sorted(j), lam);
            t = std::max(t, op.trace());
        }
        return t;
    };
    auto bisect = [&](double target) {
        double llo = std::log(1e-14), lhi = std::log(1e10);
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (llo + lhi);
            if (max_trace_at(std::exp(mid)) > target)
                llo = mid;
            else
                lhi = mid;
        }
        return 0.5 * (llo + lhi);
    };
    const double l_small = bisect(df_hi_target);  // small lambda, high df
    const double l_big = bisect(df_lo_target);    // large lambda, low df
    std::vector<double> grid(static_cast<std::size_t>(size));
    for (int g = 0; g < size; ++g) {
        const double f = size == 1 ? 0.0 : static_cast<double>(g) / (size - 1);
        grid[g] = std::exp(l_big + f * (l_small - l_big));  // descending lambda
    }
    return grid;
}

}  // namespace addtrend
