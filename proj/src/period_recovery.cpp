#include "q4s/period_recovery.hpp"

#include "q4s/error.hpp"
#include "q4s/fft.hpp"
#include "q4s/lts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace q4s {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

// Circular mean of the arrival phase modulo tau, returned as an absolute time
// in [origin, origin + tau).
double circular_phase(std::span<const double> times, double origin, double tau) {
    double c = 0.0;
    double s = 0.0;
    for (double t : times) {
        const double cycles = (t - origin) / tau;
        const double angle = 2.0 * std::numbers::pi * (cycles - std::floor(cycles));
        c += std::cos(angle);
        s += std::sin(angle);
    }
    double frac = std::atan2(s, c) / (2.0 * std::numbers::pi);
    if (frac < 0.0) frac += 1.0;
    return origin + frac * tau;
}

// Moves the grid origin to the grid point closest to `anchor`.
double rebase_phase(double phase, double tau, double anchor) {
    return phase + std::round((anchor - phase) / tau) * tau;
}

} // namespace

void ArrivalTimes::validate() const {
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] < timestamps[i - 1]) {
            throw Error(Errc::InvalidArgument, "arrivals: timestamps not sorted at index " + std::to_string(i));
        }
    }
    if (acquisition_window > 0.0 && !timestamps.empty()) {
        if (timestamps.front() < window_start || timestamps.back() >= window_start + acquisition_window) {
            throw Error(Errc::InvalidArgument, "arrivals: timestamp outside the acquisition window");
        }
    }
}

ArrivalTimes ArrivalTimes::slice(double start, double length) const {
    const auto lo = std::lower_bound(timestamps.begin(), timestamps.end(), start);
    const auto hi = std::lower_bound(lo, timestamps.end(), start + length);
    ArrivalTimes out;
    out.timestamps.assign(lo, hi);
    out.window_start = start;
    out.acquisition_window = length;
    out.resolution = resolution;
    return out;
}

double coarse_period_fft(const ArrivalTimes& arrivals, double tau_A, const CoarseOptions& opt) {
    if (!(tau_A > 0.0)) throw Error(Errc::InvalidArgument, "coarse_period_fft: tau_A must be positive");
    const double dt = tau_A / 4.0;
    std::size_t n = opt.n_samples;
    if (arrivals.acquisition_window > 0.0) {
        n = std::min<std::size_t>(n, static_cast<std::size_t>(std::floor(arrivals.acquisition_window / dt)));
    }
    n -= n % 2;
    if (n < 16) throw Error(Errc::TooFewDetections, "coarse_period_fft: sampling window too short");

    std::vector<double> bins(n, 0.0);
    std::size_t used = 0;
    for (double t : arrivals.timestamps) {
        const double pos = (t - arrivals.window_start) / dt;
        if (pos < 0.0) continue;
        const auto k = static_cast<std::size_t>(pos);
        if (k >= n) break;
        if (bins[k] == 0.0) {
            bins[k] = 1.0;
            ++used;
        }
    }
    if (used < kMinCoarseDetections) {
        throw Error(Errc::TooFewDetections, "coarse_period_fft: " + std::to_string(used) +
                                                " detections in the sampling window, need " +
                                                std::to_string(kMinCoarseDetections));
    }

    const std::vector<fft::cplx> spec = fft::real_forward(bins);
    const std::size_t half = n / 2;
    std::vector<double> mag(half);  // bins 1..half
    for (std::size_t k = 1; k <= half; ++k) mag[k - 1] = std::abs(spec[k]);
    const double med = median_of(mag);

    const double k0 = static_cast<double>(n) * dt / tau_A;
    const auto k_lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k0 * (1.0 - opt.search_halfwidth))));
    const auto k_hi = std::min<std::size_t>(half, static_cast<std::size_t>(std::floor(k0 * (1.0 + opt.search_halfwidth))));
    std::size_t best = k_lo;
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
        if (mag[k - 1] > mag[best - 1]) best = k;
    }
    if (!(mag[best - 1] >= opt.peak_to_median * med)) {
        throw Error(Errc::NoPeak, "coarse_period_fft: no spectral line near 1/tau_A");
    }
    return static_cast<double>(n) * dt / static_cast<double>(best);
}

double wrapped_residual(double t, double phase, double tau) noexcept {
    const double d = t - phase;
    return d - std::floor(d / tau + 0.5) * tau;
}

TieStats robust_tie_rms(std::span<const double> times, double phase, double tau) {
    TieStats st;
    if (times.empty()) return st;
    std::vector<double> r(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) r[i] = wrapped_residual(times[i], phase, tau);
    const double med = median_of(r);
    std::vector<double> dev(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) dev[i] = std::abs(r[i] - med);
    const double cut = 5.0 * 1.4826 * median_of(dev);
    double sum2 = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (dev[i] <= cut) {
            sum2 += r[i] * r[i];
            ++st.inliers;
        }
    }
    st.rms = std::sqrt(sum2 / static_cast<double>(st.inliers));
    return st;
}

PeriodEstimate refine_period_lts(const ArrivalTimes& arrivals, double tau_0, const RefineOptions& opt) {
    if (!(tau_0 > 0.0)) throw Error(Errc::InvalidArgument, "refine: tau_0 must be positive");
    if (!(opt.trim_fraction >= 0.0 && opt.trim_fraction < 0.5)) {
        throw Error(Errc::InvalidArgument, "refine: trim_fraction must lie in [0, 0.5)");
    }
    const auto& ts = arrivals.timestamps;
    const double ws = arrivals.window_start;
    const double span_end = arrivals.acquisition_window > 0.0 ? arrivals.acquisition_window
                                                              : (ts.empty() ? 0.0 : ts.back() - ws) + tau_0;
    double horizon = opt.first_horizon > 0.0 ? opt.first_horizon
                                             : static_cast<double>(kDefaultFftSamples) * tau_0 / 4.0;
    horizon = std::min(horizon, span_end);

    const auto in_horizon = [&](double h) {
        return static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), ws + h) - ts.begin());
    };
    PeriodEstimate est;
    est.window_start = ws;
    est.tau_guess = tau_0;
    est.detections = ts.size();
    est.fit_detections = in_horizon(horizon);
    if (est.fit_detections < std::max<std::size_t>(opt.min_fit_points, 2)) {
        throw Error(Errc::InsufficientInliers, "refine: " + std::to_string(est.fit_detections) +
                                                   " detections inside the first fit horizon");
    }

    const double phase0 = circular_phase({ts.data(), est.fit_detections}, ws, tau_0);
    double tau = tau_0;
    double phase = phase0;
    int full_passes = 0;
    std::vector<double> x;
    std::vector<double> y;
    while (true) {
        const std::size_t count = in_horizon(horizon);
        x.resize(count);
        y.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            x[i] = ts[i] - phase;
            y[i] = wrapped_residual(ts[i], phase, tau);
        }
        const LineFit fit = lts_fit(x, y, lts_coverage(count, opt.trim_fraction));
        if (!(std::abs(fit.slope) < 0.5)) {
            throw Error(Errc::FitDiverged, "refine: fitted slope " + std::to_string(fit.slope));
        }
        // r = a + b (t - phase)  =>  t = phase + a/(1-b) + n * tau/(1-b)
        const double next_tau = tau / (1.0 - fit.slope);
        phase = rebase_phase(phase + fit.intercept / (1.0 - fit.slope), next_tau, ws);
        tau = next_tau;
        if (horizon >= span_end && ++full_passes >= 2) break;
        horizon = std::min(horizon * opt.horizon_growth, span_end);
    }

    est.tau_B = tau;
    est.phase = phase;
    est.slope = (tau - tau_0) / tau;
    const TieStats fine = robust_tie_rms(ts, phase, tau);
    est.rms_tie = fine.rms;
    est.tie_inliers = fine.inliers;
    est.rms_tie_coarse = robust_tie_rms(ts, rebase_phase(phase0, tau_0, ws), tau_0).rms;

    const double t_max = ts.empty() ? 0.0 : std::max(std::abs(ts.front()), std::abs(ts.back()));
    const double numeric_floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(t_max, tau);
    est.ok = est.rms_tie <= 3.0 * opt.sigma + numeric_floor;
    if (est.ok) est.index_offsets = assign_slots(arrivals, est).offsets;
    return est;
}

SlotAssignment assign_slots(const ArrivalTimes& arrivals, const PeriodEstimate& est) {
    if (!est.ok) throw Error(Errc::EstimateNotOk, "assign_slots: period estimate not ok");
    SlotAssignment out;
    const auto& ts = arrivals.timestamps;
    out.slots.reserve(ts.size());
    out.kept.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto slot = static_cast<std::int64_t>(std::floor((ts[i] - est.phase) / est.tau_B + 0.5));
        if (!out.slots.empty() && slot <= out.slots.back()) {
            out.collisions.push_back(i);
            continue;
        }
        out.slots.push_back(slot);
        out.kept.push_back(i);
    }
    out.offsets.reserve(out.slots.size());
    for (std::int64_t s : out.slots) out.offsets.push_back(s - out.slots.front());
    return out;
}

double drift_guard(const PeriodEstimate& est, double drift_rate, double T_acq, double sigma) {
    const double limit = 10.0 * sigma;
    const double rate = std::abs(drift_rate);
    double T = T_acq;
    for (int i = 0; i < 60 && rate * T * T / est.tau_B > limit; ++i) T *= 0.5;
    return T;
}

TieSeries tie_series(std::span<const double> times, std::span<const std::int64_t> slots, double tau,
                     std::size_t reference) {
    if (times.size() != slots.size()) throw Error(Errc::LengthMismatch, "tie_series: times and slots differ");
    if (reference >= times.size()) throw Error(Errc::InvalidArgument, "tie_series: reference out of range");
    TieSeries s;
    s.reference = reference;
    s.values.reserve(times.size() - reference);
    for (std::size_t i = reference; i < times.size(); ++i) {
        s.values.push_back((times[i] - times[reference]) -
                           static_cast<double>(slots[i] - slots[reference]) * tau);
    }
    return s;
}

} // namespace q4s
