#include "oracles.hpp"

#include "q4s/error.hpp"
#include "q4s/rng.hpp"
#include "q4s/sync_string.hpp"

#include <doctest.h>

using namespace q4s;

namespace {

StringParams params(std::uint64_t L, std::uint64_t N1, double lambda, std::uint64_t seed) {
    return {L, N1, L / N1, lambda, seed};
}

} // namespace

TEST_CASE("generation is deterministic and strictly +-1") {
    const auto a = generate_string(params(6000, 6, 1.0, 9));
    const auto b = generate_string(params(6000, 6, 1.0, 9));
    CHECK(a.symbols == b.symbols);
    for (auto s : a.symbols) REQUIRE((s == 1 || s == -1));
    CHECK(generate_string(params(6000, 6, 1.0, 10)).symbols != a.symbols);
}

TEST_CASE("construction follows the documented draw order") {
    // Shared offsets x_u first, then one y per position; +1 when y >= lambda x.
    const std::uint64_t L = 1200, n1 = 6, l1 = 200;
    const double lambda = 0.8;
    const auto s = generate_string({L, n1, l1, lambda, 42});
    Rng rng(42);
    std::vector<double> x(l1);
    for (auto& v : x) v = rng.uniform_pm1();
    for (std::uint64_t n = 0; n < L; ++n) {
        const double y = rng.uniform_pm1();
        REQUIRE(s.symbols[n] == (y >= lambda * x[n % l1] ? 1 : -1));
    }
}

TEST_CASE("golden prefix pins the generator") {
    const auto s = generate_string(params(1200, 6, 1.0, 42));
    std::string prefix;
    for (int i = 0; i < 32; ++i) prefix += s.symbols[i] > 0 ? '+' : '-';
    CHECK(prefix == "++------+--+++--+---+++-+++-++--");
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(generate_string({1200, 6, 199, 1.0, 1}), Error);
    CHECK_THROWS_AS(generate_string({1200, 1, 1200, 1.0, 1}), Error);
    CHECK_THROWS_AS(generate_string({12, 6, 2, -0.5, 1}), Error);
    try {
        generate_string({1200, 7, 171, 1.0, 1});
        FAIL("expected InvalidParams");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidParams);
    }
}

TEST_CASE("nominal c0 follows the two-branch formula") {
    CHECK(nominal_c0(1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(nominal_c0(0.5) == doctest::Approx(0.25 / 3.0));
    CHECK(nominal_c0(3.0) == doctest::Approx(1.0 - 2.0 / 9.0));
    CHECK(nominal_c0(0.0) == 0.0);
}

TEST_CASE("L=1200 N1=6 example against the direct-sum oracle") {
    const auto s = generate_string(params(1200, 6, 1.0, 42));
    const auto x = oracle::cyclic_xcorr(s.symbols, s.symbols);
    CHECK(x[0] == 1.0);
    double mean = 0;
    for (int j = 1; j < 6; ++j) {
        CHECK(std::abs(x[200 * j] - 1.0 / 3.0) <= 0.06);
        mean += x[200 * j] / 5.0;
    }
    CHECK(std::abs(mean - 1.0 / 3.0) <= 0.06);

    // Off-peak lags have variance (1 + (N1-1) c0^2) / L, not 1/L: symbols in
    // the same residue class share a bias, so the N1 products that pair two
    // classes are correlated. 5/sqrt(L) is therefore too tight for the largest
    // of ~1200 lags; the bound below is 4.5 of the correct standard deviations.
    const double sd = std::sqrt((1.0 + 5.0 / 9.0) / 1200.0);
    double worst = 0;
    for (std::size_t m = 1; m < 1200; ++m) {
        if (m % 200) worst = std::max(worst, std::abs(x[m]));
    }
    CHECK(worst < 4.5 * sd);
    MESSAGE("largest off-peak |x| * sqrt(L) = " << worst * std::sqrt(1200.0));
}

TEST_CASE("FFT correlation and exact autocorrelation agree with direct sums") {
    const auto s = generate_string(params(600, 4, 1.0, 3));
    const auto direct = naive_xcorr(s.symbols, s.as_real());
    const auto fast = xcorr_fft(s.symbols, s.as_real());
    const auto exact = exact_autocorrelation(s.symbols);
    const auto ref = oracle::cyclic_xcorr(s.symbols, s.symbols);
    for (std::size_t m = 0; m < 600; ++m) {
        CHECK(direct[m] == doctest::Approx(ref[m]).epsilon(1e-12));
        CHECK(fast[m] == doctest::Approx(ref[m]).epsilon(1e-9));
        CHECK(exact[m] == ref[m]);
    }
}

TEST_CASE("autocorrelation of a real string is symmetric and lag 0 is exactly 1") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto s = generate_string(params(2000, 10, 1.0, seed));
        const auto x = exact_autocorrelation(s.symbols);
        CHECK(x[0] == 1.0);
        for (std::size_t m = 1; m < 2000; ++m) REQUIRE(x[m] == x[2000 - m]);
        for (double v : x) REQUIRE(std::abs(v) <= 1.0);
    }
}

TEST_CASE("a cyclic shift moves the correlation peak to the shift") {
    const auto s = generate_string(params(900, 3, 1.0, 4));
    const std::size_t m0 = 417;
    std::vector<double> b(900);
    for (std::size_t n = 0; n < 900; ++n) b[n] = s.symbols[(n + m0) % 900];
    const auto x = naive_xcorr(s.symbols, b);
    CHECK(oracle::argmax_unique(x).first == m0);
}

TEST_CASE("naive_xcorr rejects mismatched lengths") {
    std::vector<std::int8_t> a(10, 1);
    std::vector<double> b(9, 1.0);
    CHECK_THROWS_AS(naive_xcorr(a, b), Error);
    CHECK_THROWS_AS(xcorr_fft(a, b), Error);
}

TEST_CASE("lambda = 3 gives peaks near 1 - 2/9") {
    const auto s = generate_string(params(100000, 10, 3.0, 8));
    const auto r = verify_autocorrelation_shape(s, default_peak_tolerance(s.params), 1.0);
    CHECK(r.measured_c0 == doctest::Approx(7.0 / 9.0).epsilon(0.03));
    CHECK(r.peaks_ok);
}

TEST_CASE("lambda = 0 removes the periodic peaks") {
    const auto s = generate_string(params(100000, 10, 0.0, 8));
    CHECK(s.c0_nominal == 0.0);
    const auto r = verify_autocorrelation_shape(s, default_peak_tolerance(s.params), 1.0);
    // Peaks behave like any other lag: zero mean, 1/sqrt(L) spread.
    for (double p : r.peaks) CHECK(std::abs(p) < 5.0 / std::sqrt(1e5));
}

TEST_CASE("a constant string fails the shape check") {
    SyncString s;
    s.params = params(1000, 10, 1.0, 0);
    s.c0_nominal = 1.0 / 3.0;
    s.symbols.assign(1000, 1);
    const auto r = verify_autocorrelation_shape(s, 0.02, 6.0 / std::sqrt(1000.0));
    CHECK(r.lag0_ok);
    CHECK_FALSE(r.peaks_ok);
    CHECK_FALSE(r.offpeak_ok);
    CHECK_FALSE(r.pass());
}

TEST_CASE("statistical peak property over seeds") {
    // Mean of the peaks within 4/sqrt((N1-1) L1) of 1/3 on at least 95% of seeds.
    int pass = 0;
    const int seeds = 20;
    for (int seed = 1; seed <= seeds; ++seed) {
        const auto s = generate_string(params(10000, 10, 1.0, static_cast<std::uint64_t>(seed)));
        const auto r = verify_autocorrelation_shape(s, 1.0, 1.0);
        pass += std::abs(r.measured_c0 - 1.0 / 3.0) <= 4.0 / std::sqrt(9.0) / std::sqrt(1000.0);
    }
    CHECK(pass >= 19);
}
