#include <catch2/catch.hpp>

#include "shufreg/linalg.hpp"
#include "shufreg/permutation.hpp"
#include "shufreg/rng.hpp"

#include "oracles.hpp"

using namespace shufreg;

namespace {

DesignMatrix random_matrix(Index n, Index d, Rng& rng) {
    DesignMatrix X(n, d);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) X(i, j) = rng.normal();
    }
    return X;
}

LabelVector random_vector(Index n, Rng& rng) {
    LabelVector v(n);
    for (Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("ols_fit recovers an exact linear relation") {
    DesignMatrix X(3, 1);
    X << 1, 2, 3;
    LabelVector y(3);
    y << 2, 4, 6;
    const RegressionFit fit = ols_fit(X, y);
    REQUIRE(fit.weights.size() == 1);
    CHECK(fit.weights[0] == Approx(2.0).margin(1e-12));
    CHECK(fit.sigma2 == Approx(0.0).margin(1e-15));
    CHECK(fit.residual_ss == Approx(0.0).margin(1e-15));
}

TEST_CASE("ols_fit rejects collinear columns") {
    DesignMatrix X(3, 2);
    X << 1, 1, 2, 2, 3, 3;
    LabelVector y(3);
    y << 1, 2, 3;
    CHECK_THROWS_AS(ols_fit(X, y), RankDeficient);
}

TEST_CASE("ols_fit rejects bad shapes") {
    DesignMatrix X(2, 2);
    X << 1, 0, 0, 1;
    LabelVector y(2);
    y << 1, 2;
    CHECK_THROWS_AS(ols_fit(X, y), DimensionMismatch);  // n <= d

    DesignMatrix X2(3, 1);
    X2 << 1, 2, 3;
    CHECK_THROWS_AS(ols_fit(X2, y), DimensionMismatch);  // length mismatch
}

TEST_CASE("ols_fit on noiseless data returns the generating weights") {
    Rng rng(42);
    const DesignMatrix X = random_matrix(10, 3, rng);
    WeightVector w0(3);
    w0 << 1, -2, 0.5;
    const LabelVector y = X * w0;
    const RegressionFit fit = ols_fit(X, y);
    CHECK((fit.weights - w0).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(fit.sigma2 <= 1e-18);
    // the returned weights can only improve on the generating ones
    CHECK(oracles::naive_residual_ss(X, fit.weights, y) <=
          oracles::naive_residual_ss(X, w0, y) + 1e-12);
}

TEST_CASE("residual_ss matches hand computations and the naive oracle") {
    DesignMatrix X(2, 1);
    X << 1, 1;
    WeightVector w(1);
    w << 0;
    LabelVector y(2);
    y << 0, 0;
    CHECK(residual_ss(X, w, y) == 0.0);

    X << 1, 2;
    w << 1;
    CHECK(residual_ss(X, w, y) == Approx(5.0));

    Rng rng(7);
    const DesignMatrix R = random_matrix(6, 2, rng);
    const WeightVector rw = random_vector(2, rng);
    const LabelVector ry = random_vector(6, rng);
    CHECK(residual_ss(R, rw, ry) ==
          Approx(oracles::naive_residual_ss(R, rw, ry)).epsilon(1e-12));

    CHECK_THROWS_AS(residual_ss(R, random_vector(3, rng), ry), DimensionMismatch);
}

TEST_CASE("OLS gradient vanishes at the solution") {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 8 + rep;
        const Index d = 3;
        const DesignMatrix X = random_matrix(n, d, rng);
        const LabelVector y = random_vector(n, rng);
        const RegressionFit fit = ols_fit(X, y);
        const Eigen::VectorXd gradient = 2.0 * X.transpose() * (X * fit.weights - y);
        const double scale = (X.transpose() * y).lpNorm<Eigen::Infinity>();
        CHECK(gradient.lpNorm<Eigen::Infinity>() <= 1e-8 * std::max(scale, 1.0));
    }
}

TEST_CASE("ols_fit is permutation-equivariant") {
    Rng rng(13);
    const DesignMatrix X = random_matrix(12, 4, rng);
    const LabelVector y = random_vector(12, rng);
    const RegressionFit base = ols_fit(X, y);
    for (int rep = 0; rep < 5; ++rep) {
        const Permutation p = Permutation::random(12, rng);
        const RegressionFit permuted =
            ols_fit(apply_permutation_rows(p, X), apply_permutation(p, y));
        CHECK((permuted.weights - base.weights).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("sigma2 is nonnegative and zero only for representable labels") {
    Rng rng(17);
    const DesignMatrix X = random_matrix(9, 2, rng);
    const LabelVector in_span = X * random_vector(2, rng);
    CHECK(ols_fit(X, in_span).sigma2 <= 1e-18);

    LabelVector off_span = in_span;
    off_span[0] += 1.0;
    const RegressionFit fit = ols_fit(X, off_span);
    CHECK(fit.sigma2 > 1e-6);
    CHECK(fit.sigma2 >= 0.0);
}

TEST_CASE("LeastSquaresSolver matches ols_fit for reused right-hand sides") {
    Rng rng(19);
    const DesignMatrix X = random_matrix(15, 4, rng);
    const LeastSquaresSolver solver(X);
    for (int rep = 0; rep < 4; ++rep) {
        const LabelVector y = random_vector(15, rng);
        const RegressionFit direct = ols_fit(X, y);
        const RegressionFit reused = solver.fit(y);
        CHECK((direct.weights - reused.weights).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(direct.sigma2 == Approx(reused.sigma2));
    }
}
