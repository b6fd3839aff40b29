#include "oracles.hpp"

#include "q4s/error.hpp"
#include "q4s/lts.hpp"
#include "q4s/rng.hpp"

#include <doctest.h>

using namespace q4s;

namespace {

double objective(const std::vector<double>& x, const std::vector<double>& y, double a, double b, std::size_t h) {
    std::vector<double> r2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r2[i] = (y[i] - a - b * x[i]) * (y[i] - a - b * x[i]);
    std::sort(r2.begin(), r2.end());
    double s = 0;
    for (std::size_t i = 0; i < h; ++i) s += r2[i];
    return s;
}

} // namespace

TEST_CASE("ols recovers an exact line") {
    const std::vector<double> x{0, 1, 2, 3, 4};
    std::vector<double> y;
    for (double v : x) y.push_back(2.5 - 0.75 * v);
    const auto f = ols_fit(x, y);
    CHECK(f.intercept == doctest::Approx(2.5));
    CHECK(f.slope == doctest::Approx(-0.75));
}

TEST_CASE("ols needs two distinct abscissae") {
    const std::vector<double> x{1, 1, 1};
    const std::vector<double> y{0, 1, 2};
    CHECK_THROWS_AS(ols_fit(x, y), Error);
    CHECK_THROWS_AS(ols_fit(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
}

TEST_CASE("coverage clamps to [2, n]") {
    CHECK(lts_coverage(10, 0.3) == 7);
    CHECK(lts_coverage(10, 0.0) == 10);
    CHECK(lts_coverage(3, 0.49) == 2);
    CHECK(lts_coverage(1000, 0.3) == 700);
}

TEST_CASE("small inputs reach the exhaustive optimum") {
    Rng rng(8);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 6 + rng.below(7);  // 6..12
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform(-5, 5);
            y[i] = 1.0 + 0.3 * x[i] + 0.1 * rng.normal();
            if (rng.bernoulli(0.25)) y[i] += rng.uniform(-20, 20);
        }
        const std::size_t h = lts_coverage(n, 0.3);
        const auto best = oracle::lts_exhaustive(x, y, h);
        const auto fit = lts_fit(x, y, h);
        REQUIRE(fit.coverage == h);
        CHECK(fit.objective == doctest::Approx(objective(x, y, fit.intercept, fit.slope, h)).epsilon(1e-9));
        CHECK(fit.objective <= best.objective * (1.0 + 1e-9) + 1e-15);
    }
}

TEST_CASE("large inputs ignore a 30% block of gross outliers") {
    Rng rng(3);
    const std::size_t n = 20000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(i) * 1e-3;
        y[i] = -4.0 + 0.02 * x[i] + 0.01 * rng.normal();
        if (rng.bernoulli(0.2)) y[i] = rng.uniform(-10, 10);
    }
    const auto fit = lts_fit(x, y, lts_coverage(n, 0.3));
    CHECK(fit.slope == doctest::Approx(0.02).epsilon(0.01));
    CHECK(fit.intercept == doctest::Approx(-4.0).epsilon(0.001));

    const auto ols = ols_fit(x, y);
    CHECK(std::abs(ols.slope - 0.02) > std::abs(fit.slope - 0.02));
}

TEST_CASE("deterministic for a given input") {
    Rng rng(4);
    std::vector<double> x(5000), y(5000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform(0, 1);
        y[i] = rng.normal();
    }
    const auto a = lts_fit(x, y, 3000);
    const auto b = lts_fit(x, y, 3000);
    CHECK(a.slope == b.slope);
    CHECK(a.intercept == b.intercept);
}

TEST_CASE("argument errors") {
    const std::vector<double> x{0, 1, 2};
    const std::vector<double> y{0, 1};
    CHECK_THROWS_AS(lts_fit(x, y, 2), Error);
    CHECK_THROWS_AS(lts_fit(x, x, 4), Error);
    CHECK_THROWS_AS(lts_fit(x, x, 1), Error);
}
