#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "addtrend/additive.hpp"
#include "addtrend/ffbasis.hpp"
#include "addtrend/model_io.hpp"
#include "addtrend/simharness.hpp"
#include "addtrend/splinebase.hpp"
#include "addtrend/tf1d.hpp"
#include "addtrend/tuning.hpp"

namespace py = pybind11;
using namespace addtrend;

namespace {

using Matrix = std::vector<std::vector<double>>;  // column-major: d columns

std::shared_ptr<SortedDesign> make_design(const Matrix& columns) {
    return std::make_shared<SortedDesign>(columns);
}

py::dict fit_dict(const UnivariateFit& fit) {
    py::dict d;
    d["theta"] = fit.theta;
    d["lambda"] = fit.lambda;
    d["k"] = fit.k;
    d["dual_v"] = fit.dual_v;
    d["knots"] = fit.knots;
    d["criterion"] = fit.criterion;
    d["kkt_gap"] = fit.kkt_gap;
    d["converged"] = fit.converged;
    d["iters"] = fit.iters;
    return d;
}

AdditiveModel fit_additive_impl(const Matrix& x, const std::vector<double>& y, int k,
                                std::vector<double> lambdas, const std::string& algorithm,
                                int max_outer, double cert_tol, int threads) {
    auto design = make_design(x);
    BackfitConfig cfg;
    cfg.max_outer_iters = max_outer;
    cfg.cert_tol = cert_tol;
    cfg.threads = threads;
    if (algorithm == "parallel")
        return backfit_parallel(design, y, k, std::move(lambdas), cfg);
    return backfit_cyclic(design, y, k, std::move(lambdas), cfg);
}

}  // namespace

PYBIND11_MODULE(_addtrend, m) {
    m.doc() = "additive trend filtering: piecewise polynomial additive models with "
              "total variation penalties";

    py::register_exception<Error>(m, "AddtrendError");

    m.def("tf_dp_k0", &tf_dp_k0, py::arg("y"), py::arg("lam"),
          "exact 1d fused lasso (k = 0 trend filtering) by dynamic programming");

    m.def(
        "tf_admm",
        [](const std::vector<double>& y, const std::vector<double>& x, int k, double lam) {
            return fit_dict(tf_admm(y, x, k, lam));
        },
        py::arg("y"), py::arg("x"), py::arg("k"), py::arg("lam"),
        "univariate trend filtering with a KKT certificate");

    m.def("lambda_max",
          [](const std::vector<double>& y, const std::vector<double>& x, int k) {
              return lambda_max(y, x, k);
          },
          py::arg("y"), py::arg("x"), py::arg("k"));

    py::class_<PredictiveModel>(m, "PredictiveModel")
        .def_readonly("k", &PredictiveModel::k)
        .def_readonly("d", &PredictiveModel::d)
        .def_readonly("ybar", &PredictiveModel::ybar)
        .def_readonly("lambdas", &PredictiveModel::lambdas)
        .def("predict_row",
             [](const PredictiveModel& pm, const std::vector<double>& x) {
                 return pm.predict(x);
             })
        .def("predict", &PredictiveModel::predict_rows, py::arg("columns"),
             "predict at new inputs given as d columns");

    py::class_<AdditiveModel>(m, "AdditiveModel")
        .def_readonly("k", &AdditiveModel::k)
        .def_readonly("lambdas", &AdditiveModel::lambdas)
        .def_readonly("ybar", &AdditiveModel::ybar)
        .def_readonly("components", &AdditiveModel::components)
        .def_readonly("knot_counts", &AdditiveModel::knot_counts)
        .def_readonly("criterion", &AdditiveModel::criterion)
        .def_readonly("df_estimate", &AdditiveModel::df_estimate)
        .def_readonly("kkt_gap", &AdditiveModel::kkt_gap)
        .def_readonly("converged", &AdditiveModel::converged)
        .def_readonly("iters", &AdditiveModel::iters)
        .def("fitted", &AdditiveModel::fitted)
        .def("to_predictive", [](const AdditiveModel& model) { return to_predictive(model); });

    m.def("fit_additive", &fit_additive_impl, py::arg("x"), py::arg("y"), py::arg("k"),
          py::arg("lambdas"), py::arg("algorithm") = "cyclic", py::arg("max_outer") = 100,
          py::arg("cert_tol") = 1e-6, py::arg("threads") = 1,
          "fit additive trend filtering by cyclic or parallel backfitting; x is a list "
          "of d input columns");

    m.def(
        "certify",
        [](const AdditiveModel& model, const std::vector<double>& y) {
            auto cert = certify_additive(model, y);
            py::dict d;
            d["gap"] = cert.gap;
            d["residual_inf"] = cert.residual_inf;
            d["box_violation"] = cert.box_violation;
            d["sign_violation"] = cert.sign_violation;
            d["per_component_gap"] = cert.per_component_gap;
            return d;
        },
        py::arg("model"), py::arg("y"), "whole-model KKT certificate");

    m.def(
        "fit_additive_splines",
        [](const Matrix& x, const std::vector<double>& y, std::vector<double> lambdas,
           bool estimate_df) {
            AdditiveSplineConfig cfg;
            cfg.estimate_df = estimate_df;
            auto fit = backfit_splines(make_design(x), y, std::move(lambdas), cfg);
            py::dict d;
            d["components"] = fit.components;
            d["ybar"] = fit.ybar;
            d["criterion"] = fit.criterion;
            d["df"] = fit.df;
            d["converged"] = fit.converged;
            return d;
        },
        py::arg("x"), py::arg("y"), py::arg("lambdas"), py::arg("estimate_df") = false,
        "additive cubic smoothing splines (the linear-smoother baseline)");

    m.def(
        "cv_single_lambda",
        [](const Matrix& x, const std::vector<double>& y, int k,
           const std::vector<double>& grid, int folds, std::uint64_t seed,
           const std::string& method) {
            SortedDesign design(x);
            CVConfig cfg;
            cfg.folds = folds;
            cfg.seed = seed;
            auto res = cv_single_lambda(design, y, k, grid, cfg,
                                        method == "spline" ? FitMethod::spline
                                                           : FitMethod::tf);
            py::dict d;
            d["lambda_grid"] = res.lambda_grid;
            d["mean_error"] = res.mean_error;
            d["se_error"] = res.se_error;
            d["selected_lambda"] = res.selected_lambda;
            d["selected_index"] = res.selected_index;
            return d;
        },
        py::arg("x"), py::arg("y"), py::arg("k"), py::arg("grid"), py::arg("folds") = 5,
        py::arg("seed") = 1, py::arg("method") = "tf");

    m.def(
        "default_lambda_grid",
        [](const Matrix& x, const std::vector<double>& y, int k, int size,
           double min_ratio) {
            SortedDesign design(x);
            return default_lambda_grid(design, y, k, size, min_ratio);
        },
        py::arg("x"), py::arg("y"), py::arg("k"), py::arg("size") = 50,
        py::arg("min_ratio") = 1e-4);

    m.def(
        "check_ptilde_rank",
        [](const Matrix& x, int k) {
            SortedDesign design(x);
            auto r = check_ptilde_rank(design, k);
            py::dict d;
            d["full_rank"] = r.full_rank;
            d["smin"] = r.smin;
            d["smax"] = r.smax;
            d["cond"] = r.cond;
            return d;
        },
        py::arg("x"), py::arg("k"));

    m.def(
        "gen_scenario",
        [](const std::string& name, int n, int d, double snr, double sigma,
           std::uint64_t seed) {
            SimScenario sc;
            sc.n = n;
            sc.d = d;
            sc.snr = snr;
            sc.sigma = sigma;
            sc.seed = seed;
            if (name == "motivating")
                sc.name = Scenario::motivating;
            else if (name == "doppler")
                sc.name = Scenario::doppler;
            else if (name == "homogeneous")
                sc.name = Scenario::homogeneous;
            else
                throw Error("unknown scenario " + name);
            auto data = generate(sc);
            py::dict out;
            out["x"] = data.x;
            out["f0"] = data.f0;
            out["f0_sum"] = data.f0_sum;
            out["sigma"] = data.sigma;
            out["y"] = data.y;
            return out;
        },
        py::arg("name"), py::arg("n"), py::arg("d") = 3, py::arg("snr") = 0.0,
        py::arg("sigma") = 1.72, py::arg("seed") = 1,
        "simulation designs: motivating, doppler, homogeneous");

    m.def("read_model", &read_model, py::arg("path"));
    m.def("write_model", &write_model, py::arg("model"), py::arg("path"));
}
