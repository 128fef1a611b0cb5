#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "addtrend/additive.hpp"
#include "addtrend/errors.hpp"
#include "addtrend/model_io.hpp"
#include "test_util.hpp"

using namespace addtrend;

namespace {

AdditiveModel small_model(Rng& rng) {
    const int n = 40;
    auto cols = testutil::random_columns(n, 2, rng);
    auto design = std::make_shared<SortedDesign>(cols);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i)
        y[i] = std::sin(5.0 * cols[0][i]) + cols[1][i] + 0.3 * rng.normal();
    const double lam = 0.1 * additive_lambda_max(*design, y, 1);
    return backfit_cyclic(design, y, 1, {lam});
}

}  // namespace

TEST_CASE("model round trip preserves every bit") {
    Rng rng(501);
    auto model = small_model(rng);
    auto pm = to_predictive(model);
    const std::string path = "model_test.txt";
    write_model(pm, path);
    auto loaded = read_model(path);
    CHECK(loaded.k == pm.k);
    CHECK(loaded.d == pm.d);
    CHECK(loaded.ybar == pm.ybar);
    CHECK(loaded.lambdas == pm.lambdas);
    for (int j = 0; j < pm.d; ++j) {
        CHECK(loaded.components[j].basis.knots() == pm.components[j].basis.knots());
        CHECK(loaded.components[j].a == pm.components[j].a);
        CHECK(loaded.components[j].b == pm.components[j].b);
    }
    // predictions identical at arbitrary points
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)};
        CHECK(pm.predict(x) == loaded.predict(x));
    }
    std::remove(path.c_str());
}

TEST_CASE("predictive model reproduces fitted values at training rows") {
    Rng rng(503);
    auto model = small_model(rng);
    auto pm = to_predictive(model);
    auto fitted = model.fitted();
    const auto& design = *model.design;
    for (int i = 0; i < design.n(); ++i) {
        std::vector<double> x{design.column(0)[i], design.column(1)[i]};
        CHECK(pm.predict(x) ==
              doctest::Approx(fitted[i]).epsilon(1e-8).scale(1.0 + std::fabs(fitted[i])));
    }
}

TEST_CASE("malformed model files raise parse errors") {
    const std::string path = "model_bad.txt";
    {
        std::ofstream out(path);
        out << "something-else 1\n";
    }
    CHECK_THROWS_AS(read_model(path), ParseError);
    {
        std::ofstream out(path);
        out << "addtrend-model 99\n";
    }
    CHECK_THROWS_AS(read_model(path), ParseError);
    CHECK_THROWS_AS(read_model("no_such_file_anywhere.txt"), Error);
    std::remove(path.c_str());
}

TEST_CASE("coefficient export lists both blocks with knot locations") {
    Rng rng(509);
    auto model = small_model(rng);
    auto pm = to_predictive(model);
    const std::string path = "coeffs_test.csv";
    write_coefficients_csv(pm, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "component,block,index,coefficient,knot");
    int poly = 0, knot = 0;
    while (std::getline(in, line)) {
        if (line.find(",poly,") != std::string::npos) {
            ++poly;
            CHECK(line.back() == ',');  // empty knot location
        }
        if (line.find(",knot,") != std::string::npos) ++knot;
    }
    CHECK(poly == 2 * 2);            // (k+1) per component
    CHECK(knot == 2 * (40 - 1 - 1));  // n-k-1 per component
    std::remove(path.c_str());
}

TEST_CASE("constant model predicts ybar everywhere") {
    Rng rng(521);
    const int n = 25;
    auto cols = testutil::random_columns(n, 1, rng);
    auto design = std::make_shared<SortedDesign>(cols);
    std::vector<double> y(n, 3.25);
    y[3] += 1e-12;  // keep ties out of the response, not that it matters
    auto model = backfit_cyclic(design, y, 0, {10.0});
    auto pm = to_predictive(model);
    for (double t : {-1.0, 0.2, 0.7, 2.0})
        CHECK(pm.predict(std::vector<double>{t}) == doctest::Approx(model.ybar).epsilon(1e-10));
}
