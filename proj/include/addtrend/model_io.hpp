#pragma once

#include <string>
#include <vector>

#include "addtrend/additive.hpp"
#include "addtrend/ffbasis.hpp"

namespace addtrend {

// Self-contained predictive form of a fitted additive model: the response
// mean plus one set of falling-factorial coefficients per component.
// Enough to predict anywhere without the training data.
struct PredictiveModel {
    int k = 0;
    int d = 0;
    double ybar = 0.0;
    std::vector<double> lambdas;
    std::vector<FFCoefficients> components;

    double predict(std::span<const double> x) const;
    std::vector<double> predict_rows(const std::vector<std::vector<double>>& columns) const;
};

PredictiveModel to_predictive(const AdditiveModel& model);

// Versioned plain-text serialization (17 significant digits; values
// round-trip exactly).  Lines starting with '#' are comments.
void write_model(const PredictiveModel& model, const std::string& path);
PredictiveModel read_model(const std::string& path);

// Coefficient export: CSV with columns
// component, block {poly|knot}, index, coefficient, knot location (empty
// for the polynomial block).
void write_coefficients_csv(const PredictiveModel& model, const std::string& path);

}  // namespace addtrend
