#include "addtrend/tf1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "addtrend/errors.hpp"

namespace addtrend {

namespace {

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

double two_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

std::vector<int> detect_knots(std::span<const double> dtheta, double rel, double abs_floor,
                              double* tol_out) {
    const double tol = std::max(abs_floor, rel * inf_norm(dtheta));
    if (tol_out) *tol_out = tol;
    std::vector<int> knots;
    for (int l = 0; l < static_cast<int>(dtheta.size()); ++l)
        if (std::fabs(dtheta[l]) > tol) knots.push_back(l);
    return knots;
}

}  // namespace

double KKTCertificate::gap() const {
    return std::max({residual_inf, box_violation, sign_violation});
}

namespace {

// Gram systems of high-order operators are badly conditioned; a couple of
// refinement passes keep the certificate residual near machine scale
// instead of cond(G) * eps.
std::vector<double> solve_refined(const SymBanded& G, const BandedCholesky& chol,
                                  std::span<const double> b) {
    auto v = chol.solve(b);
    for (int step = 0; step < 3; ++step) {
        auto Gv = G.multiply(v);
        std::vector<double> r(b.size());
        double rmax = 0.0, bmax = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            r[i] = b[i] - Gv[i];
            rmax = std::max(rmax, std::fabs(r[i]));
            bmax = std::max(bmax, std::fabs(b[i]));
        }
        if (rmax <= 1e-14 * (1.0 + bmax)) break;
        auto dv = chol.solve(r);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += dv[i];
    }
    return v;
}

}  // namespace

TF1DSolver::TF1DSolver(std::vector<double> x, int k)
    : n_(static_cast<int>(x.size())), k_(k) {
    if (n_ <= k_ + 1) {
        // Penalty has no rows; solves return the interpolant.
        degenerate_ = true;
        for (int i = 0; i + 1 < n_; ++i)
            if (!(x[i] < x[i + 1])) throw NotIncreasing();
        return;
    }
    D_ = std::make_unique<BandedDiffOp>(x, k_);
    gram_ = std::make_unique<SymBanded>(D_->gram());
    gram_chol_ = std::make_unique<BandedCholesky>(*gram_);
    gramT_ = std::make_unique<SymBanded>(D_->gram_transpose());
    if (k_ >= 1) {
        Bk_ = std::make_unique<BandedDiffOp>(x, k_ - 1);  // D^(X,k)
        wk_.resize(static_cast<std::size_t>(n_ - k_));
        for (int l = 0; l < n_ - k_; ++l) wk_[l] = k_ / (x[l + k_] - x[l]);
        gramTk_ = std::make_unique<SymBanded>(Bk_->gram_transpose());
    }
}

const BandedCholesky& TF1DSolver::factor_for(double rho) const {
    auto it = theta_chol_.find(rho);
    if (it != theta_chol_.end()) return *it->second;
    SymBanded A = k_ >= 1 ? *gramTk_ : *gramT_;
    A.scale(rho);
    A.add_identity(1.0);
    auto chol = std::make_unique<BandedCholesky>(A);
    if (theta_chol_.size() > 64) theta_chol_.clear();
    return *theta_chol_.emplace(rho, std::move(chol)).first->second;
}

double TF1DSolver::criterion(std::span<const double> theta, std::span<const double> y,
                             double lambda) const {
    double loss = 0.0;
    for (int i = 0; i < n_; ++i) {
        const double r = y[i] - theta[i];
        loss += r * r;
    }
    double pen = 0.0;
    if (!degenerate_) {
        auto dt = D_->apply(theta);
        for (double v : dt) pen += std::fabs(v);
    }
    return 0.5 * loss + lambda * pen;
}

KKTCertificate TF1DSolver::certificate(std::span<const double> theta,
                                       std::span<const double> y, double lambda,
                                       double knot_tol_rel, double knot_tol_abs) const {
    KKTCertificate cert;
    if (degenerate_) {
        for (int i = 0; i < n_; ++i)
            cert.residual_inf = std::max(cert.residual_inf, std::fabs(y[i] - theta[i]));
        return cert;
    }
    std::vector<double> resid(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) resid[i] = y[i] - theta[i];
    cert.dual_v = solve_refined(*gram_, *gram_chol_, D_->apply(resid));

    auto dtv = D_->apply_transpose(cert.dual_v);
    for (int i = 0; i < n_; ++i)
        cert.residual_inf = std::max(cert.residual_inf, std::fabs(resid[i] - dtv[i]));

    cert.box_violation = std::max(0.0, inf_norm(cert.dual_v) - lambda);

    const auto dtheta = D_->apply(theta);
    cert.knots = detect_knots(dtheta, knot_tol_rel, knot_tol_abs, &cert.knot_tol);
    for (int l : cert.knots) {
        const double s = dtheta[l] > 0.0 ? 1.0 : -1.0;
        cert.sign_violation =
            std::max(cert.sign_violation, std::fabs(cert.dual_v[l] - lambda * s));
    }
    return cert;
}

double TF1DSolver::lambda_max(std::span<const double> y) const {
    if (degenerate_) return 0.0;
    return inf_norm(solve_refined(*gram_, *gram_chol_, D_->apply(y)));
}

UnivariateFit TF1DSolver::solve(std::span<const double> y, double lambda,
                                const TFSolverConfig& cfg, const TFWarmState* warm) const {
    if (static_cast<int>(y.size()) != n_) throw ShapeMismatch("solve: response length");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error("lambda must be finite and >= 0");
    for (double v : y)
        if (!std::isfinite(v)) throw NonFinite();

    UnivariateFit fit;
    fit.lambda = lambda;
    fit.k = k_;

    if (degenerate_ || lambda == 0.0) {
        fit.theta.assign(y.begin(), y.end());
        if (!degenerate_) {
            fit.dual_v.assign(static_cast<std::size_t>(D_->rows()), 0.0);
            fit.knots = detect_knots(D_->apply(fit.theta), cfg.knot_tol_rel,
                                     cfg.knot_tol_abs, &fit.knot_tol);
        }
        fit.criterion = 0.0;
        fit.state.theta = fit.theta;
        return fit;
    }

    // At lambda >= lambda_max the solution is the projection onto the
    // polynomial null space of D, available in closed form from the same
    // Gram system that defines the threshold.
    {
        auto v0 = solve_refined(*gram_, *gram_chol_, D_->apply(y));
        double v0_inf = inf_norm(v0);
        if (lambda >= v0_inf) {
            // the solution is exactly the polynomial fit: knot-free by
            // construction, certified by v0 itself
            auto dtv = D_->apply_transpose(v0);
            fit.theta.resize(static_cast<std::size_t>(n_));
            for (int i = 0; i < n_; ++i) fit.theta[i] = y[i] - dtv[i];
            fit.dual_v = v0;
            fit.knots.clear();
            fit.knot_tol = cfg.knot_tol_abs;
            fit.kkt_gap = 0.0;
            fit.criterion = criterion(fit.theta, y, lambda);
            fit.converged = true;
            fit.state.theta = fit.theta;
            const double rho0 = cfg.rho > 0.0 ? cfg.rho : std::clamp(lambda, 1e-4, 1e4);
            fit.state.rho = rho0;
            if (k_ == 0) {
                fit.state.z = D_->apply(fit.theta);
                fit.state.u.resize(v0.size());
                for (std::size_t l = 0; l < v0.size(); ++l) fit.state.u[l] = v0[l] / rho0;
            } else {
                // dual of the split constraint: gamma = diag(w) D1^T v0
                fit.state.z = Bk_->apply(fit.theta);
                const int mk = n_ - k_;
                fit.state.u.assign(static_cast<std::size_t>(mk), 0.0);
                for (int l = 0; l < mk; ++l) {
                    double g = 0.0;
                    if (l < mk - 1) g -= v0[l];
                    if (l > 0) g += v0[l - 1];
                    fit.state.u[l] = wk_[l] * g / rho0;
                }
            }
            return fit;
        }
    }

    // ADMM. For k = 0 the splitting is z = D theta with a soft-threshold
    // prox.  For k >= 1 it is z = D^(X,k) theta, whose prox is an exact
    // weighted fused lasso (the leading D^(X,1) diag(w) factor of the
    // penalty), solved by dynamic programming each iteration.
    const BandedDiffOp& B = k_ >= 1 ? *Bk_ : *D_;
    const int m = B.rows();
    const SymBanded& gramT_split = k_ >= 1 ? *gramTk_ : *gramT_;

    // Keep rho small enough that the identity survives in I + rho B^T B.
    double gmax = 1.0;
    for (int i = 0; i < n_; ++i) gmax = std::max(gmax, gramT_split.at(i, i));
    const double rho_cap = std::max(1.0, 1e11 / gmax);
    // Anchor rho at the default policy on every solve (warm duals are
    // rescaled); letting adapted values leak across warm starts drifts rho
    // toward zero over a backfitting run.
    const double rho0 =
        std::min(cfg.rho > 0.0 ? cfg.rho : std::clamp(lambda, 1e-4, 1e4), rho_cap);
    const double rho_lo = std::max(1e-8, 1e-4 * rho0);
    const double rho_hi = std::min(rho_cap, 1e4 * rho0);
    double rho = rho0;
    const double alpha = cfg.over_relax;

    std::vector<double> theta, z, u;
    if (warm && static_cast<int>(warm->theta.size()) == n_ &&
        static_cast<int>(warm->z.size()) == m && warm->rho > 0.0) {
        theta = warm->theta;
        z = warm->z;
        u = warm->u;
        const double scale = warm->rho / rho;
        if (scale != 1.0)
            for (auto& v : u) v *= scale;
    } else {
        theta.assign(y.begin(), y.end());
        z = B.apply(theta);
        u.assign(static_cast<std::size_t>(m), 0.0);
    }

    std::vector<double> rhs(static_cast<std::size_t>(n_));
    std::vector<double> zmu(static_cast<std::size_t>(m));
    std::vector<double> btheta(static_cast<std::size_t>(m));
    std::vector<double> zdiff(static_cast<std::size_t>(m));
    std::vector<double> scratch(static_cast<std::size_t>(n_));
    std::vector<double> prox_a(static_cast<std::size_t>(m));
    std::vector<double> prox_b(static_cast<std::size_t>(m));

    // penalty ||D^(X,k+1) theta||_1 evaluated from the split image
    auto penalty_of = [&](const std::vector<double>& bth) {
        double pen = 0.0;
        if (k_ == 0) {
            for (double v : bth) pen += std::fabs(v);
        } else {
            for (int l = 0; l + 1 < m; ++l)
                pen += std::fabs(wk_[l + 1] * bth[l + 1] - wk_[l] * bth[l]);
        }
        return pen;
    };

    double best_crit = std::numeric_limits<double>::infinity();
    std::vector<double> best_theta;
    KKTCertificate cert;
    bool have_cert = false;
    int it = 0;

    for (it = 1; it <= cfg.max_iters; ++it) {
        // theta-update: (I + rho B^T B) theta = y + rho B^T (z - u)
        for (int l = 0; l < m; ++l) zmu[l] = z[l] - u[l];
        B.apply_transpose(zmu, rhs);
        for (int i = 0; i < n_; ++i) rhs[i] = y[i] + rho * rhs[i];
        factor_for(rho).solve_in_place(rhs);
        theta.swap(rhs);

        B.apply(theta, btheta);

        const double crit = [&] {
            double loss = 0.0;
            for (int i = 0; i < n_; ++i) {
                const double r = y[i] - theta[i];
                loss += r * r;
            }
            return 0.5 * loss + lambda * penalty_of(btheta);
        }();
        if (crit < best_crit) {
            best_crit = crit;
            best_theta = theta;
        }
        if (cfg.record_trace) fit.trace.push_back(best_crit);

        // z-update (exact prox), then the scaled dual
        double r_norm2 = 0.0, s_norm2 = 0.0, z_norm2 = 0.0, bt_norm2 = 0.0;
        if (k_ == 0) {
            const double thr = lambda / rho;
            for (int l = 0; l < m; ++l) {
                const double zl_old = z[l];
                const double w = alpha * btheta[l] + (1.0 - alpha) * zl_old;
                const double zl = soft_threshold(w + u[l], thr);
                u[l] += w - zl;
                z[l] = zl;
                zdiff[l] = zl - zl_old;
            }
        } else {
            // prox: min_z lambda || D1 diag(w) z ||_1 + rho/2 || z - c ||^2
            // with c = relax(B theta) + u; substitute zt = diag(w) z.
            for (int l = 0; l < m; ++l) {
                const double c = alpha * btheta[l] + (1.0 - alpha) * z[l] + u[l];
                prox_a[l] = rho / (wk_[l] * wk_[l]);
                prox_b[l] = wk_[l] * c;
            }
            auto zt = weighted_fused_dp(prox_a, prox_b, lambda);
            for (int l = 0; l < m; ++l) {
                const double zl_old = z[l];
                const double w = alpha * btheta[l] + (1.0 - alpha) * zl_old;
                const double zl = zt[l] / wk_[l];
                u[l] += w - zl;
                z[l] = zl;
                zdiff[l] = zl - zl_old;
            }
        }
        for (int l = 0; l < m; ++l) {
            const double pr = btheta[l] - z[l];
            r_norm2 += pr * pr;
            z_norm2 += z[l] * z[l];
            bt_norm2 += btheta[l] * btheta[l];
        }
        B.apply_transpose(zdiff, scratch);
        for (int i = 0; i < n_; ++i) s_norm2 += scratch[i] * scratch[i];

        const double r_norm = std::sqrt(r_norm2);
        const double s_norm = rho * std::sqrt(s_norm2);
        const double eps_pri = std::sqrt(static_cast<double>(m)) * cfg.abs_tol +
                               cfg.rel_tol * std::max(std::sqrt(bt_norm2), std::sqrt(z_norm2));
        B.apply_transpose(u, scratch);
        const double eps_dual = std::sqrt(static_cast<double>(n_)) * cfg.abs_tol +
                                cfg.rel_tol * rho * two_norm(scratch);

        const bool residuals_ok = r_norm <= eps_pri && s_norm <= eps_dual;
        if (residuals_ok || it % 50 == 0) {
            cert = certificate(theta, y, lambda, cfg.knot_tol_rel, cfg.knot_tol_abs);
            have_cert = true;
            if (cert.gap() <= cfg.cert_tol) {
                fit.converged = true;
                break;
            }
        }

        if (cfg.adaptive_rho && it % 25 == 0 && it <= 2000) {
            double new_rho = rho;
            if (r_norm > 10.0 * s_norm)
                new_rho = rho * 2.0;
            else if (s_norm > 10.0 * r_norm)
                new_rho = rho * 0.5;
            new_rho = std::clamp(new_rho, rho_lo, rho_hi);
            if (new_rho != rho) {
                const double scale = rho / new_rho;
                for (auto& v : u) v *= scale;
                rho = new_rho;
            }
        }
    }

    if (it > cfg.max_iters) {
        // Not converged: hand back the best iterate with diagnostics.
        fit.converged = false;
        it = cfg.max_iters;
        if (!best_theta.empty()) theta = best_theta;
        cert = certificate(theta, y, lambda, cfg.knot_tol_rel, cfg.knot_tol_abs);
        have_cert = true;
    }
    if (!have_cert)
        cert = certificate(theta, y, lambda, cfg.knot_tol_rel, cfg.knot_tol_abs);

    fit.iters = it;
    fit.theta = theta;
    fit.dual_v = std::move(cert.dual_v);
    fit.knots = std::move(cert.knots);
    fit.knot_tol = cert.knot_tol;
    fit.kkt_gap = std::max({cert.residual_inf, cert.box_violation, cert.sign_violation});
    fit.criterion = criterion(fit.theta, y, lambda);
    fit.state.theta = fit.theta;
    fit.state.z = std::move(z);
    fit.state.u = std::move(u);
    fit.state.rho = rho;
    return fit;
}

UnivariateFit tf_admm(std::span<const double> y, std::span<const double> x, int k,
                      double lambda, const TFSolverConfig& cfg, const TFWarmState* warm) {
    TF1DSolver solver(std::vector<double>(x.begin(), x.end()), k);
    return solver.solve(y, lambda, cfg, warm);
}

KKTCertificate solve_kkt_certificate(std::span<const double> theta,
                                     std::span<const double> y,
                                     std::span<const double> x, int k, double lambda) {
    for (double v : theta)
        if (!std::isfinite(v)) throw NonFinite();
    TF1DSolver solver(std::vector<double>(x.begin(), x.end()), k);
    return solver.certificate(theta, y, lambda);
}

double lambda_max(std::span<const double> y, std::span<const double> x, int k) {
    TF1DSolver solver(std::vector<double>(x.begin(), x.end()), k);
    return solver.lambda_max(y);
}

std::vector<double> weighted_fused_dp(std::span<const double> a, std::span<const double> b,
                                      double lambda) {
    // min_t sum_i a_i (t_i - b_i)^2 / 2 + lambda sum |t_{i+1} - t_i|,
    // same dynamic program as tf_dp_k0 with per-point quadratic weights.
    const int n = static_cast<int>(b.size());
    std::vector<double> theta(b.begin(), b.end());
    if (n <= 1 || lambda <= 0.0) return theta;

    const int cap = 2 * n + 4;
    std::vector<double> q(cap), da(cap), db(cap);
    std::vector<double> tneg(n - 1), tpos(n - 1);
    int l = n + 1, r = n + 1;

    double A0 = a[0], B0 = -a[0] * b[0];
    double A1 = A0, B1 = B0;

    for (int i = 0; i + 1 < n; ++i) {
        double A = A0, B = B0;
        int lo = l;
        while (lo < r && A * q[lo] + B < -lambda) {
            A += da[lo];
            B += db[lo];
            ++lo;
        }
        const double tm = (-lambda - B) / A;
        const double Am = A, Bm = B;

        A = A1;
        B = B1;
        int hi = r - 1;
        while (hi >= lo && A * q[hi] + B > lambda) {
            A -= da[hi];
            B -= db[hi];
            --hi;
        }
        const double tp = (lambda - B) / A;
        const double Ap = A, Bp = B;

        tneg[i] = tm;
        tpos[i] = tp;

        l = lo;
        r = hi + 1;
        --l;
        q[l] = tm;
        da[l] = Am;
        db[l] = Bm + lambda;
        q[r] = tp;
        da[r] = -Ap;
        db[r] = lambda - Bp;
        ++r;
        A0 = a[i + 1];
        B0 = -lambda - a[i + 1] * b[i + 1];
        A1 = a[i + 1];
        B1 = lambda - a[i + 1] * b[i + 1];
    }

    double A = A0, B = B0;
    int idx = l;
    while (idx < r && A * q[idx] + B < 0.0) {
        A += da[idx];
        B += db[idx];
        ++idx;
    }
    theta[n - 1] = -B / A;
    for (int i = n - 2; i >= 0; --i)
        theta[i] = std::clamp(theta[i + 1], tneg[i], tpos[i]);
    return theta;
}

std::vector<double> tf_dp_k0(std::span<const double> y, double lambda) {
    const int n = static_cast<int>(y.size());
    std::vector<double> theta(y.begin(), y.end());
    if (n <= 1 || lambda <= 0.0) return theta;

    // Forward pass over the piecewise-linear derivative of the Bellman
    // functions f_i.  The derivative is kept as a base line (A0, B0) on the
    // far left plus per-breakpoint linear increments; (A1, B1) is the
    // rightmost piece.  Clipping f_i at slope +-lambda gives the interval
    // [tneg_i, tpos_i] used by the backward pass.
    const int cap = 2 * n + 4;
    std::vector<double> q(cap), da(cap), db(cap);
    std::vector<double> tneg(n - 1), tpos(n - 1);
    int l = n + 1, r = n + 1;  // window [l, r)

    double A0 = 1.0, B0 = -y[0];
    double A1 = 1.0, B1 = -y[0];

    for (int i = 0; i + 1 < n; ++i) {
        // left crossing: g(t) = -lambda
        double A = A0, B = B0;
        int lo = l;
        while (lo < r && A * q[lo] + B < -lambda) {
            A += da[lo];
            B += db[lo];
            ++lo;
        }
        const double tm = (-lambda - B) / A;
        const double Am = A, Bm = B;

        // right crossing: g(t) = +lambda
        A = A1;
        B = B1;
        int hi = r - 1;
        while (hi >= lo && A * q[hi] + B > lambda) {
            A -= da[hi];
            B -= db[hi];
            --hi;
        }
        const double tp = (lambda - B) / A;
        const double Ap = A, Bp = B;

        tneg[i] = tm;
        tpos[i] = tp;

        // rebuild: constant -lambda | interior pieces | constant +lambda,
        // then add the next quadratic's derivative t - y[i+1]
        l = lo;
        r = hi + 1;
        --l;
        q[l] = tm;
        da[l] = Am;
        db[l] = Bm + lambda;
        q[r] = tp;
        da[r] = -Ap;
        db[r] = lambda - Bp;
        ++r;
        A0 = 1.0;
        B0 = -lambda - y[i + 1];
        A1 = 1.0;
        B1 = lambda - y[i + 1];
    }

    // minimize f_n: root of its derivative
    double A = A0, B = B0;
    int idx = l;
    while (idx < r && A * q[idx] + B < 0.0) {
        A += da[idx];
        B += db[idx];
        ++idx;
    }
    theta[n - 1] = -B / A;
    for (int i = n - 2; i >= 0; --i)
        theta[i] = std::clamp(theta[i + 1], tneg[i], tpos[i]);
    return theta;
}

}  // namespace addtrend
