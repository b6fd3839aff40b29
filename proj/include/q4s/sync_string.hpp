#pragma once

// Synchronization preambles with periodic autocorrelation peaks.
//
// A string of length L = N1 * L1 is built from L1 shared offsets x_u and L
// independent draws y_{u,j}, all uniform in [-1, 1):
//
//     s[u + j*L1] = +1 if y_{u,j} >= lambda * x_u, else -1
//
// Symbols in the same residue class u share the bias -lambda*x_u, so the
// autocorrelation has secondary peaks of height c0 at every multiple of L1.
// Draw order: x_0..x_{L1-1} first, then y in increasing position order.

#include <cstdint>
#include <span>
#include <vector>

namespace q4s {

struct StringParams {
    std::uint64_t L = 0;
    std::uint64_t N1 = 0;
    std::uint64_t L1 = 0;
    double lambda = 1.0;
    std::uint64_t seed = 0;

    /// Throws Errc::InvalidParams when the block structure is inconsistent.
    void validate() const;
};

/// c0 as a function of lambda: lambda^2/3 for lambda <= 1, 1 - 2/(3 lambda) above.
double nominal_c0(double lambda);

struct SyncString {
    StringParams params;
    std::vector<std::int8_t> symbols;
    double c0_nominal = 0.0;

    std::size_t size() const noexcept { return symbols.size(); }
    std::vector<double> as_real() const { return {symbols.begin(), symbols.end()}; }
};

SyncString generate_string(const StringParams& params);

/// x_m = (1/L) sum_n a[(n+m) mod L] * b[n] for all m, by direct summation.
std::vector<double> naive_xcorr(std::span<const std::int8_t> a, std::span<const double> b);

/// Same contract as naive_xcorr, evaluated with FFTs.
std::vector<double> xcorr_fft(std::span<const std::int8_t> a, std::span<const double> b);

/// Autocorrelation of a +-1 string. L*x_m is an integer, so the FFT result is
/// rounded onto that lattice and the returned values are exact.
std::vector<double> exact_autocorrelation(std::span<const std::int8_t> s);

struct ShapeReport {
    double lag0 = 0.0;
    bool lag0_ok = false;

    std::vector<double> peaks;  // x_{j*L1}, j = 1..N1-1
    double measured_c0 = 0.0;   // mean of `peaks`
    double worst_peak_deviation = 0.0;
    std::uint64_t worst_peak_lag = 0;
    bool peaks_ok = false;

    double worst_offpeak = 0.0;  // max |x_m| over lags that are not multiples of L1
    std::uint64_t worst_offpeak_lag = 0;
    std::uint64_t offpeak_violations = 0;
    bool offpeak_ok = false;

    bool pass() const noexcept { return lag0_ok && peaks_ok && offpeak_ok; }
};

/// Default tolerances derived from the binomial variance of +-1 sums.
double default_peak_tolerance(const StringParams& params);
double default_offpeak_tolerance(const StringParams& params);

ShapeReport verify_autocorrelation_shape(const SyncString& s, double peak_tol, double offpeak_tol);

} // namespace q4s
