#include "q4s/sync_string.hpp"

#include "q4s/error.hpp"
#include "q4s/fft.hpp"
#include "q4s/rng.hpp"

#include <cmath>
#include <string>

namespace q4s {

void StringParams::validate() const {
    if (N1 < 2 || L1 < 2) {
        throw Error(Errc::InvalidParams, "string: N1 and L1 must both be at least 2");
    }
    if (L != N1 * L1) {
        throw Error(Errc::InvalidParams, "string: L = " + std::to_string(L) + " is not N1*L1 = " +
                                             std::to_string(N1) + "*" + std::to_string(L1));
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(Errc::InvalidParams, "string: lambda must be a finite non-negative number");
    }
}

double nominal_c0(double lambda) {
    return lambda <= 1.0 ? lambda * lambda / 3.0 : 1.0 - 2.0 / (3.0 * lambda);
}

SyncString generate_string(const StringParams& params) {
    params.validate();
    Rng rng(params.seed);

    std::vector<double> bias(params.L1);
    for (auto& b : bias) b = params.lambda * rng.uniform_pm1();

    SyncString out;
    out.params = params;
    out.c0_nominal = nominal_c0(params.lambda);
    out.symbols.resize(params.L);
    std::size_t u = 0;
    for (std::size_t n = 0; n < params.L; ++n) {
        const double y = rng.uniform_pm1();
        // Heaviside with step value 1 at zero.
        out.symbols[n] = (y - bias[u] >= 0.0) ? 1 : -1;
        if (++u == params.L1) u = 0;
    }
    return out;
}

std::vector<double> naive_xcorr(std::span<const std::int8_t> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(Errc::LengthMismatch, "xcorr: sequences differ in length");
    }
    const std::size_t n = a.size();
    std::vector<double> x(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        double acc = 0.0;
        const std::size_t split = n - m;
        for (std::size_t i = 0; i < split; ++i) acc += a[i + m] * b[i];
        for (std::size_t i = split; i < n; ++i) acc += a[i + m - n] * b[i];
        x[m] = acc / static_cast<double>(n);
    }
    return x;
}

std::vector<double> xcorr_fft(std::span<const std::int8_t> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(Errc::LengthMismatch, "xcorr: sequences differ in length");
    }
    std::vector<double> ar(a.begin(), a.end());
    std::vector<double> x = fft::cyclic_xcorr(ar, b);
    const double inv = 1.0 / static_cast<double>(a.size());
    for (auto& v : x) v *= inv;
    return x;
}

std::vector<double> exact_autocorrelation(std::span<const std::int8_t> s) {
    std::vector<double> sr(s.begin(), s.end());
    std::vector<double> x = fft::cyclic_xcorr(sr, sr);
    const double n = static_cast<double>(s.size());
    for (auto& v : x) v = std::round(v) / n;
    return x;
}

double default_peak_tolerance(const StringParams& p) {
    const double n1 = static_cast<double>(p.N1);
    return 4.0 / std::sqrt(static_cast<double>(p.L1)) * std::sqrt(n1 / (n1 - 1.0));
}

double default_offpeak_tolerance(const StringParams& p) {
    return 6.0 / std::sqrt(static_cast<double>(p.L));
}

ShapeReport verify_autocorrelation_shape(const SyncString& s, double peak_tol, double offpeak_tol) {
    const auto& p = s.params;
    const std::vector<double> x = exact_autocorrelation(s.symbols);

    ShapeReport r;
    r.lag0 = x[0];
    r.lag0_ok = (x[0] == 1.0);

    r.peaks_ok = true;
    double sum = 0.0;
    for (std::uint64_t j = 1; j < p.N1; ++j) {
        const std::uint64_t lag = j * p.L1;
        r.peaks.push_back(x[lag]);
        sum += x[lag];
        const double dev = std::abs(x[lag] - s.c0_nominal);
        if (dev > r.worst_peak_deviation) {
            r.worst_peak_deviation = dev;
            r.worst_peak_lag = lag;
        }
        if (dev > peak_tol) r.peaks_ok = false;
    }
    r.measured_c0 = r.peaks.empty() ? 0.0 : sum / static_cast<double>(r.peaks.size());

    for (std::uint64_t m = 1; m < p.L; ++m) {
        if (m % p.L1 == 0) continue;
        const double v = std::abs(x[m]);
        if (v > r.worst_offpeak) {
            r.worst_offpeak = v;
            r.worst_offpeak_lag = m;
        }
        if (v > offpeak_tol) ++r.offpeak_violations;
    }
    r.offpeak_ok = (r.offpeak_violations == 0);
    return r;
}

} // namespace q4s
