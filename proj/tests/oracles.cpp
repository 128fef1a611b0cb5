#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "addtrend/errors.hpp"
#include "addtrend/ffbasis.hpp"
#include "addtrend/rng.hpp"

namespace addtrend::oracles {

namespace {

Eigen::MatrixXd to_eigen(const std::vector<std::vector<double>>& rows) {
    Eigen::MatrixXd M(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    return M;
}

std::vector<std::vector<double>> from_eigen(const Eigen::MatrixXd& M) {
    std::vector<std::vector<double>> out(M.rows(), std::vector<double>(M.cols()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) out[i][j] = M(i, j);
    return out;
}

Eigen::MatrixXd dense_diffop_eigen(std::span<const double> x, int k) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n - 1, n);
    for (int i = 0; i < n - 1; ++i) {
        D(i, i) = -1.0;
        D(i, i + 1) = 1.0;
    }
    for (int m = 1; m <= k; ++m) {
        const int rows_m = n - m;
        Eigen::MatrixXd D1 = Eigen::MatrixXd::Zero(rows_m - 1, rows_m);
        for (int i = 0; i < rows_m - 1; ++i) {
            D1(i, i) = -1.0;
            D1(i, i + 1) = 1.0;
        }
        Eigen::VectorXd w(rows_m);
        for (int i = 0; i < rows_m; ++i) w(i) = m / (x[i + m] - x[i]);
        D = D1 * w.asDiagonal() * D;
    }
    return D;
}

}  // namespace

std::vector<std::vector<double>> dense_diffop(std::span<const double> x, int k) {
    return from_eigen(dense_diffop_eigen(x, k));
}

std::vector<std::vector<double>> dense_ff_matrix(std::span<const double> knots, int k,
                                                 std::span<const double> points) {
    FFBasis basis(std::vector<double>(knots.begin(), knots.end()), k);
    std::vector<std::vector<double>> H(points.size(),
                                       std::vector<double>(knots.size(), 0.0));
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t l = 0; l < knots.size(); ++l)
            H[i][l] = basis.eval(static_cast<int>(l), points[i]);
    return H;
}

std::vector<double> dense_hinv_coefficients(std::span<const double> theta_sorted,
                                            std::span<const double> knots, int k) {
    auto H = to_eigen(dense_ff_matrix(knots, k, knots));  // rows at sorted knots
    Eigen::VectorXd theta(theta_sorted.size());
    for (std::size_t i = 0; i < theta_sorted.size(); ++i) theta(i) = theta_sorted[i];
    Eigen::VectorXd alpha = H.fullPivLu().solve(theta);
    return std::vector<double>(alpha.data(), alpha.data() + alpha.size());
}

std::vector<double> polyfit_ls(std::span<const double> x, std::span<const double> y, int k) {
    const int n = static_cast<int>(x.size());
    // shifted/scaled basis for conditioning
    double lo = *std::min_element(x.begin(), x.end());
    double hi = *std::max_element(x.begin(), x.end());
    const double mid = 0.5 * (lo + hi), half = std::max(0.5 * (hi - lo), 1e-12);
    Eigen::MatrixXd V(n, k + 1);
    for (int i = 0; i < n; ++i) {
        double t = (x[i] - mid) / half, p = 1.0;
        for (int j = 0; j <= k; ++j) {
            V(i, j) = p;
            p *= t;
        }
    }
    Eigen::VectorXd yy(n);
    for (int i = 0; i < n; ++i) yy(i) = y[i];
    Eigen::VectorXd fit = V * V.colPivHouseholderQr().solve(yy);
    return std::vector<double>(fit.data(), fit.data() + n);
}

std::vector<double> box_qp_tf(std::span<const double> y, std::span<const double> x, int k,
                              double lambda) {
    // Log-barrier interior point on the dual box QP
    //   min 1/2 v^T G v - c^T v  s.t.  |v_l| <= lambda,
    // with G = D D^T, c = D y; robust to the poor conditioning of higher
    // order operators.  theta = y - D^T v at the solution.
    const int n = static_cast<int>(y.size());
    if (n <= k + 1 || lambda == 0.0) return std::vector<double>(y.begin(), y.end());
    Eigen::MatrixXd D = dense_diffop_eigen(x, k);
    const int m = static_cast<int>(D.rows());
    Eigen::VectorXd yy(n);
    for (int i = 0; i < n; ++i) yy(i) = y[i];
    Eigen::MatrixXd G = D * D.transpose();
    Eigen::VectorXd c = D * yy;

    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    double t = 1.0;
    auto barrier_obj = [&](const Eigen::VectorXd& w) {
        double f = t * (0.5 * w.dot(G * w) - c.dot(w));
        for (int l = 0; l < m; ++l) {
            if (lambda - w(l) <= 0.0 || lambda + w(l) <= 0.0)
                return std::numeric_limits<double>::infinity();
            f -= std::log(lambda - w(l)) + std::log(lambda + w(l));
        }
        return f;
    };
    while (2.0 * m / t > 1e-13) {
        for (int newton = 0; newton < 100; ++newton) {
            Eigen::VectorXd gf = G * v - c;
            Eigen::VectorXd g(m), hd(m);
            for (int l = 0; l < m; ++l) {
                const double a = 1.0 / (lambda - v(l)), b = 1.0 / (lambda + v(l));
                g(l) = t * gf(l) + a - b;
                hd(l) = a * a + b * b;
            }
            Eigen::MatrixXd H = t * G;
            H.diagonal() += hd;
            Eigen::VectorXd step = H.ldlt().solve(-g);
            const double decrement = -g.dot(step);
            if (decrement * 0.5 < 1e-14) break;
            double s = 1.0;
            const double f0 = barrier_obj(v);
            while (s > 1e-14 && barrier_obj(v + s * step) > f0 + 0.25 * s * g.dot(step))
                s *= 0.5;
            v += s * step;
        }
        t *= 20.0;
    }
    Eigen::VectorXd theta = yy - D.transpose() * v;
    return std::vector<double>(theta.data(), theta.data() + n);
}

AdditiveOracleResult solve_additive(const SortedDesign& design, std::span<const double> y,
                                    int k, std::span<const double> lambdas, int max_iters,
                                    double tol) {
    const int n = design.n();
    const int d = design.d();
    std::vector<double> lam(lambdas.begin(), lambdas.end());
    if (static_cast<int>(lam.size()) == 1 && d > 1) lam.assign(d, lam[0]);

    auto cr = center_response(y);
    Eigen::VectorXd yc(n);
    for (int i = 0; i < n; ++i) yc(i) = cr.centered[i];

    // design matrix: per component, centered non-intercept basis columns
    const int pcols = n - 1;  // k polynomial + (n-k-1) knot columns
    Eigen::MatrixXd X(n, d * pcols);
    double kfact = 1.0;
    for (int l = 2; l <= k; ++l) kfact *= l;
    std::vector<double> w(static_cast<std::size_t>(d * pcols), 0.0);  // l1 weights
    for (int j = 0; j < d; ++j) {
        auto H = to_eigen(dense_ff_matrix(design.sorted(j), k, design.column(j)));
        Eigen::MatrixXd cols = H.rightCols(n - 1);
        cols.rowwise() -= cols.colwise().mean();  // M
        X.middleCols(j * pcols, pcols) = cols;
        for (int c = k; c < pcols; ++c) w[j * pcols + c] = lam[j] * kfact;
    }

    const double L = (X.transpose() * X).selfadjointView<Eigen::Lower>()
                         .eigenvalues().maxCoeff();
    Eigen::VectorXd z = Eigen::VectorXd::Zero(d * pcols);
    Eigen::VectorXd zprev = z, acc = z;
    double t_acc = 1.0;
    double resid_kkt = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd grad = X.transpose() * (X * acc - yc);
        Eigen::VectorXd znew = acc - grad / L;
        for (int c = 0; c < znew.size(); ++c) {
            const double t = w[c] / L;
            if (t > 0.0) {
                if (znew(c) > t)
                    znew(c) -= t;
                else if (znew(c) < -t)
                    znew(c) += t;
                else
                    znew(c) = 0.0;
            }
        }
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
        Eigen::VectorXd acc_new = znew + ((t_acc - 1.0) / t_new) * (znew - z);
        // adaptive restart
        if ((znew - z).dot(acc - znew) > 0.0) {
            acc_new = znew;
            t_acc = 1.0;
        } else {
            t_acc = t_new;
        }
        zprev = z;
        z = znew;
        acc = acc_new;

        if (it % 25 == 0) {
            Eigen::VectorXd g = X.transpose() * (X * z - yc);
            resid_kkt = 0.0;
            for (int c = 0; c < z.size(); ++c) {
                if (w[c] == 0.0)
                    resid_kkt = std::max(resid_kkt, std::fabs(g(c)));
                else if (z(c) != 0.0)
                    resid_kkt = std::max(resid_kkt,
                                         std::fabs(g(c) + w[c] * (z(c) > 0 ? 1.0 : -1.0)));
                else
                    resid_kkt = std::max(resid_kkt, std::max(0.0, std::fabs(g(c)) - w[c]));
            }
            if (resid_kkt < tol) break;
        }
    }

    AdditiveOracleResult out;
    out.kkt_residual = resid_kkt;
    out.components.resize(d);
    Eigen::VectorXd fitsum = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd comp = X.middleCols(j * pcols, pcols) * z.segment(j * pcols, pcols);
        out.components[j].assign(comp.data(), comp.data() + n);
        fitsum += comp;
    }
    double loss = (yc - fitsum).squaredNorm();
    double pen = 0.0;
    for (int c = 0; c < z.size(); ++c) pen += w[c] * std::fabs(z(c));
    out.criterion = 0.5 * loss + pen;
    return out;
}

MonteCarloDf df_montecarlo(
    const std::function<std::vector<double>(std::span<const double>)>& fit,
    std::span<const double> eta, double sigma, int reps, std::uint64_t seed) {
    const int n = static_cast<int>(eta.size());
    std::vector<double> per_rep(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(r)));
        std::vector<double> eps = rng.normals(n);
        std::vector<double> yr(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) yr[i] = eta[i] + sigma * eps[i];
        auto f = fit(yr);
        double t = 0.0;
        for (int i = 0; i < n; ++i) t += f[i] * eps[i];
        per_rep[r] = t / sigma;
    }
    MonteCarloDf out;
    for (double v : per_rep) out.df += v;
    out.df /= reps;
    double var = 0.0;
    for (double v : per_rep) var += (v - out.df) * (v - out.df);
    var /= std::max(1, reps - 1);
    out.se = std::sqrt(var / reps);
    return out;
}

namespace {

void dense_spline_system(std::span<const double> x, double lambda, Eigen::MatrixXd& A) {
    const int n = static_cast<int>(x.size());
    const int m = n - 2;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, m);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        const double h0 = x[i + 1] - x[i], h1 = x[i + 2] - x[i + 1];
        Q(i, i) = 1.0 / h0;
        Q(i + 1, i) = -1.0 / h0 - 1.0 / h1;
        Q(i + 2, i) = 1.0 / h1;
        R(i, i) = (h0 + h1) / 3.0;
        if (i + 1 < m) {
            R(i, i + 1) = h1 / 6.0;
            R(i + 1, i) = h1 / 6.0;
        }
    }
    Eigen::MatrixXd K = Q * R.ldlt().solve(Q.transpose());
    A = Eigen::MatrixXd::Identity(n, n) + lambda * K;
}

}  // namespace

std::vector<double> dense_smooth_spline(std::span<const double> x, std::span<const double> y,
                                        double lambda) {
    const int n = static_cast<int>(x.size());
    if (n < 3 || lambda == 0.0) return std::vector<double>(y.begin(), y.end());
    Eigen::MatrixXd A;
    dense_spline_system(x, lambda, A);
    Eigen::VectorXd yy(n);
    for (int i = 0; i < n; ++i) yy(i) = y[i];
    Eigen::VectorXd theta = A.ldlt().solve(yy);
    return std::vector<double>(theta.data(), theta.data() + n);
}

double dense_spline_trace(std::span<const double> x, double lambda) {
    const int n = static_cast<int>(x.size());
    if (n < 3 || lambda == 0.0) return n;
    Eigen::MatrixXd A;
    dense_spline_system(x, lambda, A);
    return A.inverse().trace();
}

std::vector<double> dense_spd_solve(const std::vector<std::vector<double>>& A,
                                    std::span<const double> b) {
    Eigen::MatrixXd M = to_eigen(A);
    Eigen::VectorXd bb(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) bb(i) = b[i];
    Eigen::VectorXd x = M.ldlt().solve(bb);
    return std::vector<double>(x.data(), x.data() + x.size());
}

}  // namespace addtrend::oracles
