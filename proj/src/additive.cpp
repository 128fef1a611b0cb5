#include "addtrend/additive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "addtrend/errors.hpp"
#include "addtrend/parallel.hpp"
#include "addtrend/rng.hpp"

namespace addtrend {

namespace {

struct Workspace {
    std::shared_ptr<const SortedDesign> design;
    std::vector<double> y_centered;
    double ybar = 0.0;
    std::vector<std::unique_ptr<TF1DSolver>> solvers;  // one per component

    Workspace(std::shared_ptr<const SortedDesign> des, std::span<const double> y, int k)
        : design(std::move(des)) {
        auto cr = center_response(y);
        ybar = cr.ybar;
        y_centered = std::move(cr.centered);
        const int d = design->d();
        solvers.reserve(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j)
            solvers.push_back(std::make_unique<TF1DSolver>(design->sorted(j), k));
    }
};

double criterion_of(const Workspace& ws, const std::vector<std::vector<double>>& comps,
                    std::span<const double> lambdas) {
    const int n = ws.design->n();
    const int d = ws.design->d();
    std::vector<double> resid = ws.y_centered;
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < n; ++i) resid[i] -= comps[j][i];
    double loss = 0.0;
    for (double r : resid) loss += r * r;
    double pen = 0.0;
    for (int j = 0; j < d; ++j) {
        auto sorted_theta = ws.design->to_sorted(j, comps[j]);
        auto dt = ws.solvers[j]->op().apply(sorted_theta);
        double s = 0.0;
        for (double v : dt) s += std::fabs(v);
        pen += lambdas[j] * s;
    }
    return 0.5 * loss + pen;
}

void center_in_place(std::vector<double>& v) {
    double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (auto& x : v) x -= m;
}

AdditiveCertificate certify_impl(const Workspace& ws,
                                 const std::vector<std::vector<double>>& comps,
                                 std::span<const double> lambdas,
                                 const TFSolverConfig& inner) {
    const int n = ws.design->n();
    const int d = ws.design->d();
    std::vector<double> u = ws.y_centered;
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < n; ++i) u[i] -= comps[j][i];

    AdditiveCertificate cert;
    cert.per_component_gap.resize(static_cast<std::size_t>(d), 0.0);
    for (int j = 0; j < d; ++j) {
        // The stationarity condition for component j reads
        // u = S_j^T D_j^T v_j; certify it in the sorted coordinate system by
        // checking u_sorted against the fit (theta + u_sorted, theta).
        auto u_sorted = ws.design->to_sorted(j, u);
        auto theta_sorted = ws.design->to_sorted(j, comps[j]);
        std::vector<double> pseudo_y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pseudo_y[i] = theta_sorted[i] + u_sorted[i];
        auto c = ws.solvers[j]->certificate(theta_sorted, pseudo_y, lambdas[j],
                                            inner.knot_tol_rel, inner.knot_tol_abs);
        cert.residual_inf = std::max(cert.residual_inf, c.residual_inf);
        cert.box_violation = std::max(cert.box_violation, c.box_violation);
        cert.sign_violation = std::max(cert.sign_violation, c.sign_violation);
        cert.per_component_gap[j] = c.gap();
    }
    cert.gap = std::max({cert.residual_inf, cert.box_violation, cert.sign_violation});
    return cert;
}

AdditiveModel assemble(const Workspace& ws, std::vector<std::vector<double>> comps,
                       std::vector<double> lambdas, int k, const BackfitConfig& cfg,
                       int iters, bool converged, std::span<const double> y) {
    AdditiveModel model;
    model.design = ws.design;
    model.k = k;
    model.lambdas = std::move(lambdas);
    model.ybar = ws.ybar;
    model.components = std::move(comps);
    model.iters = iters;

    const int d = ws.design->d();
    model.knot_counts.resize(static_cast<std::size_t>(d), 0);
    for (int j = 0; j < d; ++j) {
        for (double v : model.components[j])
            if (!std::isfinite(v)) throw NonFinite("backfitting produced non-finite values");
        auto theta_sorted = ws.design->to_sorted(j, model.components[j]);
        auto dt = ws.solvers[j]->op().apply(theta_sorted);
        double tol = cfg.inner.knot_tol_abs;
        double mx = 0.0;
        for (double v : dt) mx = std::max(mx, std::fabs(v));
        tol = std::max(tol, cfg.inner.knot_tol_rel * mx);
        int cnt = 0;
        for (double v : dt)
            if (std::fabs(v) > tol) ++cnt;
        model.knot_counts[j] = cnt;
    }
    model.criterion = criterion_of(ws, model.components, model.lambdas);
    model.df_estimate =
        std::accumulate(model.knot_counts.begin(), model.knot_counts.end(), 0) + k * d;
    auto cert = certify_impl(ws, model.components, model.lambdas, cfg.inner);
    model.kkt_gap = cert.gap;
    model.converged = converged && cert.gap <= cfg.cert_tol;
    (void)y;
    return model;
}

std::vector<std::vector<double>> initial_components(const Workspace& ws,
                                                    const std::vector<std::vector<double>>* init) {
    const int n = ws.design->n();
    const int d = ws.design->d();
    if (init) {
        if (static_cast<int>(init->size()) != d ||
            (d > 0 && static_cast<int>((*init)[0].size()) != n))
            throw ShapeMismatch("initial components have wrong shape");
        return *init;
    }
    return std::vector<std::vector<double>>(
        static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

}  // namespace

std::vector<double> AdditiveModel::fitted_sum() const {
    std::vector<double> out(static_cast<std::size_t>(design->n()), 0.0);
    for (const auto& comp : components)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += comp[i];
    return out;
}

std::vector<double> AdditiveModel::fitted() const {
    auto out = fitted_sum();
    for (auto& v : out) v += ybar;
    return out;
}

double additive_criterion(const AdditiveModel& model, std::span<const double> y) {
    Workspace ws(model.design, y, model.k);
    return criterion_of(ws, model.components, model.lambdas);
}

AdditiveModel backfit_cyclic(std::shared_ptr<const SortedDesign> design,
                             std::span<const double> y, int k, std::vector<double> lambdas,
                             const BackfitConfig& cfg,
                             const std::vector<std::vector<double>>* init) {
    const int d = design->d();
    const int n = design->n();
    if (static_cast<int>(lambdas.size()) == 1 && d > 1)
        lambdas.assign(static_cast<std::size_t>(d), lambdas[0]);
    if (static_cast<int>(lambdas.size()) != d)
        throw ShapeMismatch("lambdas length must match design dimension");

    Workspace ws(design, y, k);
    auto comps = initial_components(ws, init);
    std::vector<TFWarmState> warm(static_cast<std::size_t>(d));
    std::vector<double> resid = ws.y_centered;
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < n; ++i) resid[i] -= comps[j][i];

    Rng order_rng(cfg.order_seed);
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);

    double prev_crit = std::numeric_limits<double>::infinity();
    bool stabilized = false;
    int sweep = 0;
    for (sweep = 1; sweep <= cfg.max_outer_iters; ++sweep) {
        if (cfg.randomize_order) order_rng.shuffle(order);
        for (int j : order) {
            // partial residual: r + theta_j
            std::vector<double> partial(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) partial[i] = resid[i] + comps[j][i];
            auto partial_sorted = design->to_sorted(j, partial);
            auto fit = ws.solvers[j]->solve(partial_sorted, lambdas[j], cfg.inner,
                                            warm[j].rho > 0.0 ? &warm[j] : nullptr);
            auto theta_sorted = fit.theta;
            if (cfg.center_each_update) center_in_place(theta_sorted);
            auto theta_new = design->from_sorted(j, theta_sorted);
            for (int i = 0; i < n; ++i) resid[i] += comps[j][i] - theta_new[i];
            comps[j] = std::move(theta_new);
            warm[j] = std::move(fit.state);
        }
        const double crit = criterion_of(ws, comps, lambdas);
        if (cfg.on_sweep) cfg.on_sweep(sweep, crit);
        if (crit <= cfg.stop_below) break;
        if (std::fabs(prev_crit - crit) <= cfg.outer_tol * (1.0 + std::fabs(crit))) {
            auto cert = certify_impl(ws, comps, lambdas, cfg.inner);
            if (cert.gap <= cfg.cert_tol) {
                stabilized = true;
                break;
            }
        }
        prev_crit = crit;
    }
    return assemble(ws, std::move(comps), std::move(lambdas), k, cfg,
                    std::min(sweep, cfg.max_outer_iters), stabilized, y);
}

AdditiveModel backfit_parallel(std::shared_ptr<const SortedDesign> design,
                               std::span<const double> y, int k, std::vector<double> lambdas,
                               const BackfitConfig& cfg,
                               const std::vector<std::vector<double>>* init) {
    const int d = design->d();
    const int n = design->n();
    if (static_cast<int>(lambdas.size()) == 1 && d > 1)
        lambdas.assign(static_cast<std::size_t>(d), lambdas[0]);
    if (static_cast<int>(lambdas.size()) != d)
        throw ShapeMismatch("lambdas length must match design dimension");
    if (!(cfg.rho > 0.0)) throw Error("parallel backfitting requires rho > 0");

    Workspace ws(design, y, k);
    const double rho = cfg.rho;
    auto comps = initial_components(ws, init);
    auto comps_prev = comps;  // theta^(t-2)
    std::vector<TFWarmState> warm(static_cast<std::size_t>(d));
    std::vector<double> u0(static_cast<std::size_t>(n), 0.0);

    double prev_crit = std::numeric_limits<double>::infinity();
    bool stabilized = false;
    int sweep = 0;
    for (sweep = 1; sweep <= cfg.max_outer_iters; ++sweep) {
        // Step 2a: u0 is a damped combination of the residual and its
        // previous value (not the raw residual, which is the divergent
        // naive scheme).
        std::vector<double> u0_next(static_cast<std::size_t>(n));
        const double c1 = 1.0 / (rho * d + 1.0);
        for (int i = 0; i < n; ++i) {
            double sum_cur = 0.0, sum_diff = 0.0;
            for (int j = 0; j < d; ++j) {
                sum_cur += comps[j][i];
                sum_diff += comps_prev[j][i] - comps[j][i];
            }
            const double residual = ws.y_centered[i] - sum_cur;
            u0_next[i] = c1 * residual + (rho * d) * c1 * (u0[i] + sum_diff / (rho * d));
        }
        u0.swap(u0_next);

        // Step 2b: d independent univariate solves, safe to run on up to d
        // workers; each writes only its own slot.
        comps_prev = comps;
        std::vector<std::vector<double>> comps_next(static_cast<std::size_t>(d));
        parallel_for(d, cfg.threads, [&](int j) {
            std::vector<double> input(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) input[i] = u0[i] + comps[j][i] / rho;
            auto input_sorted = design->to_sorted(j, input);
            auto fit = ws.solvers[j]->solve(input_sorted, lambdas[j], cfg.inner,
                                            warm[j].rho > 0.0 ? &warm[j] : nullptr);
            auto theta_sorted = fit.theta;
            for (auto& v : theta_sorted) v *= rho;
            if (cfg.center_each_update) center_in_place(theta_sorted);
            comps_next[j] = design->from_sorted(j, theta_sorted);
            warm[j] = std::move(fit.state);
        });
        comps = std::move(comps_next);

        const double crit = criterion_of(ws, comps, lambdas);
        if (cfg.on_sweep) cfg.on_sweep(sweep, crit);
        if (crit <= cfg.stop_below) break;
        if (std::fabs(prev_crit - crit) <= cfg.outer_tol * (1.0 + std::fabs(crit))) {
            auto cert = certify_impl(ws, comps, lambdas, cfg.inner);
            if (cert.gap <= cfg.cert_tol) {
                stabilized = true;
                break;
            }
        }
        prev_crit = crit;
    }
    return assemble(ws, std::move(comps), std::move(lambdas), k, cfg,
                    std::min(sweep, cfg.max_outer_iters), stabilized, y);
}

AdditiveCertificate certify_additive(const AdditiveModel& model, std::span<const double> y) {
    Workspace ws(model.design, y, model.k);
    TFSolverConfig inner;
    return certify_impl(ws, model.components, model.lambdas, inner);
}

int degrees_of_freedom(const AdditiveModel& model) {
    return model.df_estimate;
}

double additive_lambda_max(const SortedDesign& design, std::span<const double> y, int k) {
    auto cr = center_response(y);
    double lmax = 0.0;
    for (int j = 0; j < design.d(); ++j) {
        TF1DSolver solver(design.sorted(j), k);
        auto yc_sorted = design.to_sorted(j, cr.centered);
        lmax = std::max(lmax, solver.lambda_max(yc_sorted));
    }
    return lmax;
}

AdditiveModel backfit_cyclic(const SortedDesign& design, std::span<const double> y, int k,
                             std::vector<double> lambdas, const BackfitConfig& cfg) {
    return backfit_cyclic(std::make_shared<SortedDesign>(design), y, k, std::move(lambdas),
                          cfg);
}

AdditiveModel backfit_parallel(const SortedDesign& design, std::span<const double> y, int k,
                               std::vector<double> lambdas, const BackfitConfig& cfg) {
    return backfit_parallel(std::make_shared<SortedDesign>(design), y, k, std::move(lambdas),
                            cfg);
}

}  // namespace addtrend
