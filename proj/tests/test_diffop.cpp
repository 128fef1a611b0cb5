#include <doctest.h>

#include <cmath>

#include "addtrend/diffop.hpp"
#include "addtrend/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace addtrend;

namespace {

std::vector<std::vector<double>> densify(const BandedDiffOp& op) {
    std::vector<std::vector<double>> D(op.rows(), std::vector<double>(op.input_dim(), 0.0));
    for (int i = 0; i < op.rows(); ++i)
        for (int c = 0; c < op.bandwidth(); ++c) D[i][i + c] = op.entry(i, c);
    return D;
}

}  // namespace

TEST_CASE("first difference operator, k = 0") {
    BandedDiffOp op(std::vector<double>{1.0, 2.0, 3.0}, 0);
    auto D = densify(op);
    CHECK(D == std::vector<std::vector<double>>{{-1.0, 1.0, 0.0}, {0.0, -1.0, 1.0}});
    CHECK(op.apply(std::vector<double>{1.0, 4.0, 9.0}) == std::vector<double>{3.0, 5.0});
}

TEST_CASE("unit gaps give the classical second difference rows") {
    BandedDiffOp op(std::vector<double>{1.0, 2.0, 3.0, 4.0}, 1);
    auto D = densify(op);
    CHECK(testutil::max_abs_diff(D[0], std::vector<double>{1.0, -2.0, 1.0, 0.0}) < 1e-14);
    CHECK(testutil::max_abs_diff(D[1], std::vector<double>{0.0, 1.0, -2.0, 1.0}) < 1e-14);
    CHECK(testutil::max_abs_diff(op.apply(std::vector<double>{0.0, 1.0, 2.0, 3.0}),
                                 std::vector<double>{0.0, 0.0}) == 0.0);
}

TEST_CASE("constants are annihilated on uneven grids") {
    BandedDiffOp op(std::vector<double>{0.0, 1.0, 3.0}, 0);
    CHECK(op.apply(std::vector<double>{5.0, 5.0, 5.0}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(BandedDiffOp(std::vector<double>{0.0, 1.0}, 1), TooShort);
    CHECK_THROWS_AS(BandedDiffOp(std::vector<double>{0.0, 1.0, 0.5}, 0), NotIncreasing);
    BandedDiffOp op(std::vector<double>{0.0, 1.0, 2.0}, 0);
    CHECK_THROWS_AS(op.apply(std::vector<double>{1.0, 2.0}), ShapeMismatch);
}

TEST_CASE("polynomial annihilation up to order k") {
    Rng rng(17);
    for (int k = 0; k <= 3; ++k) {
        for (int trial = 0; trial < 10; ++trial) {
            const int n = k + 2 + static_cast<int>(rng.uniform_int(40));
            auto x = testutil::random_x(n, rng, 0.0, 3.0);
            BandedDiffOp op(x, k);
            for (int l = 0; l <= k; ++l) {
                std::vector<double> poly(x.size());
                double scale = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    poly[i] = std::pow(x[i], l);
                    scale = std::max(scale, std::fabs(poly[i]));
                }
                CHECK(testutil::inf_norm(op.apply(poly)) <= 1e-8 * std::max(scale, 1.0));
            }
        }
    }
}

TEST_CASE("banded apply and transpose agree with the dense recursion") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = static_cast<int>(rng.uniform_int(4));
        const int n = k + 2 + static_cast<int>(rng.uniform_int(48));
        auto x = testutil::random_x(n, rng);
        BandedDiffOp op(x, k);
        auto D = oracles::dense_diffop(x, k);

        // recursion consistency: entries match the dense product
        auto Db = densify(op);
        for (int i = 0; i < op.rows(); ++i)
            CHECK(testutil::max_abs_diff(Db[i], D[i]) < 1e-10 * (1.0 + testutil::inf_norm(D[i])));

        auto v = rng.normals(n);
        auto dense_apply = std::vector<double>(op.rows(), 0.0);
        for (int i = 0; i < op.rows(); ++i)
            for (int c = 0; c < n; ++c) dense_apply[i] += D[i][c] * v[c];
        auto fast = op.apply(v);
        CHECK(testutil::max_abs_diff(fast, dense_apply) <
              1e-10 * (1.0 + testutil::inf_norm(dense_apply)));

        auto u = rng.normals(op.rows());
        std::vector<double> dense_t(n, 0.0);
        for (int i = 0; i < op.rows(); ++i)
            for (int c = 0; c < n; ++c) dense_t[c] += D[i][c] * u[i];
        CHECK(testutil::max_abs_diff(op.apply_transpose(u), dense_t) <
              1e-10 * (1.0 + testutil::inf_norm(dense_t)));
    }
}

TEST_CASE("transpose rows of the k = 0 operator") {
    BandedDiffOp op(std::vector<double>{1.0, 2.0, 3.0}, 0);
    CHECK(op.apply_transpose(std::vector<double>{1.0, 0.0}) ==
          std::vector<double>{-1.0, 1.0, 0.0});
    CHECK(op.apply_transpose(std::vector<double>{0.0, 0.0}) ==
          std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("gram matrices match dense products") {
    BandedDiffOp op3(std::vector<double>{1.0, 2.0, 3.0}, 0);
    auto G = op3.gram();
    CHECK(G.at(0, 0) == doctest::Approx(2.0));
    CHECK(G.at(1, 0) == doctest::Approx(-1.0));
    CHECK(G.at(1, 1) == doctest::Approx(2.0));

    Rng rng(31);
    const int n = 12, k = 2;
    auto x = testutil::random_x(n, rng);
    BandedDiffOp op(x, k);
    auto D = oracles::dense_diffop(x, k);
    auto Gb = op.gram();
    for (int i = 0; i < op.rows(); ++i)
        for (int j = 0; j < op.rows(); ++j) {
            double ref = 0.0;
            for (int c = 0; c < n; ++c) ref += D[i][c] * D[j][c];
            CHECK(std::fabs(Gb.get(i, j) - ref) < 1e-12 * (1.0 + std::fabs(ref)));
        }
    auto Gt = op.gram_transpose();
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double ref = 0.0;
            for (int i = 0; i < op.rows(); ++i) ref += D[i][a] * D[i][b];
            CHECK(std::fabs(Gt.get(a, b) - ref) < 1e-12 * (1.0 + std::fabs(ref)));
        }
}
