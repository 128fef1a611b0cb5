#include "addtrend/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "addtrend/errors.hpp"
#include "addtrend/rng.hpp"

namespace addtrend {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Standardize g to empirical mean zero; unit_norm additionally scales to
// empirical norm (1/n sum f^2) = 1.
std::vector<double> standardize(std::vector<double> g, bool unit_norm) {
    const double n = static_cast<double>(g.size());
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / n;
    for (auto& v : g) v -= mean;
    if (unit_norm) {
        double norm2 = 0.0;
        for (double v : g) norm2 += v * v;
        norm2 /= n;
        const double a = 1.0 / std::sqrt(norm2);
        for (auto& v : g) v *= a;
    }
    return g;
}

double norm2_n(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s / static_cast<double>(v.size());
}

void finish_scenario(ScenarioData& data, double snr, double sigma) {
    const int n = static_cast<int>(data.x[0].size());
    data.f0_sum.assign(static_cast<std::size_t>(n), 0.0);
    for (const auto& f : data.f0)
        for (int i = 0; i < n; ++i) data.f0_sum[i] += f[i];
    data.sigma = snr > 0.0 ? std::sqrt(norm2_n(data.f0_sum) / snr) : sigma;
    data.y = data.response(0);
}

}  // namespace

std::vector<double> ScenarioData::response(int rep) const {
    Rng rng(Rng::derive(scenario.seed, 0x6E6F6973ULL + static_cast<std::uint64_t>(rep)));
    std::vector<double> out = f0_sum;
    for (auto& v : out) v += sigma * rng.normal();
    return out;
}

ScenarioData gen_motivating(int n, std::uint64_t seed, double sigma, double snr) {
    if (n < 10) throw Error("scenario needs n >= 10");
    ScenarioData data;
    data.scenario = {Scenario::motivating, n, 3, snr, sigma, seed, 2};
    Rng rng(Rng::derive(seed, 0x696E7075ULL));
    data.x.assign(3, std::vector<double>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j) data.x[j][i] = rng.uniform();

    auto f01 = [](double t) {
        const double m = std::min(t, 1.0 - t);
        return std::pow(m, 0.2) * std::sin(2.85 * kPi / (0.3 + m));
    };
    auto f02 = [](double t) { return std::exp(3.0 * t) * std::sin(4.0 * kPi * t); };
    auto f03 = [](double t) { return -(t - 0.5) * (t - 0.5); };

    data.f0.resize(3);
    for (int j = 0; j < 3; ++j) {
        std::vector<double> g(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double t = data.x[j][i];
            g[i] = j == 0 ? f01(t) : j == 1 ? f02(t) : f03(t);
        }
        data.f0[j] = standardize(std::move(g), /*unit_norm=*/false);
    }
    finish_scenario(data, snr, sigma);
    return data;
}

namespace {

ScenarioData gen_sinusoids(Scenario which, int n, int d, double snr, std::uint64_t seed) {
    if (n < 10) throw Error("scenario needs n >= 10");
    if (which == Scenario::doppler && (d < 1 || d > 10))
        throw Error("doppler scenario defines exponents for d in 1..10");
    ScenarioData data;
    data.scenario = {which, n, d, snr, 0.0, seed, 2};
    Rng rng(Rng::derive(seed, 0x696E7075ULL));

    // each dimension: an independent random permutation of (1/n, ..., 1)
    data.x.assign(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(n)));
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < n; ++i) data.x[j][i] = static_cast<double>(i + 1) / n;
        rng.shuffle(data.x[j]);
    }

    data.f0.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        std::vector<double> g(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double t = data.x[j][i];
            g[i] = which == Scenario::doppler
                       ? std::sin(2.0 * kPi / std::pow(t + 0.1, (j + 1) / 10.0))
                       : std::sin(10.0 * kPi * t);
        }
        data.f0[j] = standardize(std::move(g), /*unit_norm=*/true);
    }
    finish_scenario(data, snr, 0.0);
    return data;
}

}  // namespace

ScenarioData gen_doppler(int n, int d, double snr, std::uint64_t seed) {
    return gen_sinusoids(Scenario::doppler, n, d, snr, seed);
}

ScenarioData gen_homogeneous(int n, int d, double snr, std::uint64_t seed) {
    return gen_sinusoids(Scenario::homogeneous, n, d, snr, seed);
}

ScenarioData generate(const SimScenario& s) {
    switch (s.name) {
        case Scenario::motivating:
            return gen_motivating(s.n, s.seed, s.sigma, s.snr);
        case Scenario::doppler:
            return gen_doppler(s.n, s.d, s.snr, s.seed);
        case Scenario::homogeneous:
            return gen_homogeneous(s.n, s.d, s.snr, s.seed);
    }
    throw Error("unknown scenario");
}

int MSECurve::argmin_mean() const {
    int best = 0;
    for (int g = 1; g < static_cast<int>(mean_mse.size()); ++g)
        if (mean_mse[g] < mean_mse[best]) best = g;
    return best;
}

MSECurve mse_curve(const ScenarioData& data, FitMethod method, std::span<const double> grid,
                   int reps, const MSECurveConfig& cfg) {
    if (reps < 2) throw Error("mse_curve needs reps >= 2");
    const int n = static_cast<int>(data.f0_sum.size());
    const int G = static_cast<int>(grid.size());
    auto design = std::make_shared<SortedDesign>(SortedDesign(data.x));

    MSECurve curve;
    curve.scenario = data.scenario.name;
    curve.method = method;
    curve.grid.assign(grid.begin(), grid.end());
    curve.reps = reps;
    curve.mse.assign(static_cast<std::size_t>(G),
                     std::vector<double>(static_cast<std::size_t>(reps), 0.0));
    curve.fits.assign(static_cast<std::size_t>(G), {});
    std::vector<std::vector<double>> cov_acc(
        static_cast<std::size_t>(G), std::vector<double>(static_cast<std::size_t>(n), 0.0));

    for (int r = 0; r < reps; ++r) {
        auto y = data.response(r);
        std::vector<std::vector<double>> warm;
        for (int g = 0; g < G; ++g) {
            std::vector<double> fitsum;
            if (method == FitMethod::tf) {
                auto model =
                    backfit_cyclic(design, y, data.scenario.k, {curve.grid[g]}, cfg.backfit,
                                   warm.empty() ? nullptr : &warm);
                warm = model.components;
                fitsum = model.fitted_sum();
            } else {
                AdditiveSplineConfig scfg = cfg.spline;
                scfg.estimate_df = false;
                auto fit = backfit_splines(design, y, {curve.grid[g]}, scfg);
                fitsum = fit.fitted_sum();
            }
            double err = 0.0;
            for (int i = 0; i < n; ++i) {
                const double e = fitsum[i] - data.f0_sum[i];
                err += e * e;
            }
            curve.mse[g][r] = err / n;
            for (int i = 0; i < n; ++i)
                cov_acc[g][i] += fitsum[i] * (y[i] - data.f0_sum[i]);
            if (cfg.keep_fits) curve.fits[g].push_back(std::move(fitsum));
        }
    }

    curve.mean_mse.resize(static_cast<std::size_t>(G));
    curve.sd_mse.resize(static_cast<std::size_t>(G));
    curve.df.resize(static_cast<std::size_t>(G));
    const double sig2 = data.sigma * data.sigma;
    for (int g = 0; g < G; ++g) {
        double mean = std::accumulate(curve.mse[g].begin(), curve.mse[g].end(), 0.0) / reps;
        double var = 0.0;
        for (double v : curve.mse[g]) var += (v - mean) * (v - mean);
        var /= std::max(1, reps - 1);
        curve.mean_mse[g] = mean;
        curve.sd_mse[g] = std::sqrt(var);
        double df = 0.0;
        for (int i = 0; i < n; ++i) df += cov_acc[g][i];
        curve.df[g] = df / (reps * sig2);
    }
    return curve;
}

void write_tidy_csv(std::span<const MSECurve> curves, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "scenario,method,lambda,df,rep,mse\n";
    char buf[160];
    for (const auto& c : curves)
        for (std::size_t g = 0; g < c.grid.size(); ++g)
            for (int r = 0; r < c.reps; ++r) {
                std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%d,%.17g\n",
                              scenario_name(c.scenario), method_name(c.method), c.grid[g],
                              c.df[g], r, c.mse[g][r]);
                out << buf;
            }
}

std::vector<ConvergenceTrace> convergence_trace(const ConvergenceProblem& problem,
                                                std::span<const BackfitAlgorithm> algorithms,
                                                double target_subopt, const BackfitConfig& cfg,
                                                int max_sweeps) {
    const auto& design = *problem.design;
    const int d = design.d();
    const int n = design.n();
    std::vector<double> lambdas = problem.lambdas;
    if (static_cast<int>(lambdas.size()) == 1 && d > 1)
        lambdas.assign(static_cast<std::size_t>(d), lambdas[0]);

    auto run = [&](BackfitAlgorithm algo, int sweeps, std::vector<double>* trace,
                   double stop_below, double outer_tol) {
        BackfitConfig c = cfg;
        c.max_outer_iters = sweeps;
        c.outer_tol = outer_tol;
        c.stop_below = stop_below;
        c.on_sweep = [trace](int, double crit) {
            if (trace) trace->push_back(crit);
        };
        if (algo == BackfitAlgorithm::cyclic) {
            backfit_cyclic(problem.design, problem.y, problem.k, lambdas, c);
            return;
        }
        if (algo == BackfitAlgorithm::parallel) {
            backfit_parallel(problem.design, problem.y, problem.k, lambdas, c);
            return;
        }
        // naive parallel: component updates against stale partial residuals
        auto cr = center_response(problem.y);
        std::vector<std::unique_ptr<TF1DSolver>> solvers;
        for (int j = 0; j < d; ++j)
            solvers.push_back(std::make_unique<TF1DSolver>(design.sorted(j), problem.k));
        std::vector<std::vector<double>> comps(
            static_cast<std::size_t>(d),
            std::vector<double>(static_cast<std::size_t>(n), 0.0));
        std::vector<TFWarmState> warm(static_cast<std::size_t>(d));
        bool stop = false;
        for (int t = 0; t < sweeps && !stop; ++t) {
            std::vector<double> resid = cr.centered;
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < n; ++i) resid[i] -= comps[j][i];
            std::vector<std::vector<double>> next(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) {
                std::vector<double> input(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) input[i] = resid[i] + comps[j][i];
                auto is = design.to_sorted(j, input);
                auto fit = solvers[j]->solve(is, lambdas[j], c.inner,
                                             warm[j].rho > 0.0 ? &warm[j] : nullptr);
                auto ts = fit.theta;
                const double m =
                    std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(n);
                for (auto& v : ts) v -= m;
                next[j] = design.from_sorted(j, ts);
                warm[j] = std::move(fit.state);
            }
            comps = std::move(next);
            // criterion of the naive iterates
            double crit = 0.0;
            {
                std::vector<double> r2 = cr.centered;
                for (int j = 0; j < d; ++j)
                    for (int i = 0; i < n; ++i) r2[i] -= comps[j][i];
                for (double v : r2) crit += v * v;
                crit *= 0.5;
                for (int j = 0; j < d; ++j) {
                    auto ts = design.to_sorted(j, comps[j]);
                    auto dt = solvers[j]->op().apply(ts);
                    double s = 0.0;
                    for (double v : dt) s += std::fabs(v);
                    crit += lambdas[j] * s;
                }
            }
            if (trace) trace->push_back(crit);
            if (crit <= stop_below) stop = true;
        }
    };

    // best criterion: long runs of both convergent algorithms
    constexpr double kNoStop = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (auto algo : {BackfitAlgorithm::cyclic, BackfitAlgorithm::parallel}) {
        std::vector<double> tr;
        run(algo, max_sweeps, &tr, kNoStop, 1e-14);  // runs until deeply stabilized
        for (double v : tr) best = std::min(best, v);
    }

    std::vector<ConvergenceTrace> out;
    for (auto algo : algorithms) {
        ConvergenceTrace t;
        t.algorithm = algo;
        t.best_criterion = best;
        const double cutoff = best + target_subopt * (1.0 + std::fabs(best));
        run(algo, max_sweeps, &t.criterion,
            algo == BackfitAlgorithm::naive_parallel ? kNoStop : cutoff, 0.0);
        for (int s = 0; s < static_cast<int>(t.criterion.size()); ++s) {
            if (t.criterion[s] <= cutoff) {
                t.sweeps_to_target = s + 1;
                break;
            }
        }
        if (t.sweeps_to_target > 0 && algo == BackfitAlgorithm::parallel)
            t.ideal_iterations_to_target = static_cast<double>(t.sweeps_to_target) / d;
        else if (t.sweeps_to_target > 0)
            t.ideal_iterations_to_target = t.sweeps_to_target;
        out.push_back(std::move(t));
    }
    return out;
}

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::motivating: return "motivating";
        case Scenario::doppler: return "doppler";
        case Scenario::homogeneous: return "homogeneous";
    }
    return "?";
}

const char* method_name(FitMethod m) {
    return m == FitMethod::tf ? "tf" : "spline";
}

}  // namespace addtrend
