#pragma once

// Receiver-side period recovery from sparse detection timestamps.
//
// Model: a detection from pulse n arrives at phase + n*tau_B + jitter in the
// receiver clock. A coarse period comes from the spectrum of the binary
// detection sequence sampled at 4/tau_A; the coarse value is then refined by a
// least-trimmed-squares fit of the time residual modulo the period against
// time, over horizons that grow until they cover the acquisition window.

#include <cstdint>
#include <span>
#include <vector>

namespace q4s {

struct ArrivalTimes {
    std::vector<double> timestamps;  // seconds, receiver clock, non-decreasing
    double window_start = 0.0;
    double acquisition_window = 0.0;  // T_acq
    double resolution = 0.0;          // 0 = unquantized

    std::size_t size() const noexcept { return timestamps.size(); }
    /// Throws InvalidArgument when unsorted or outside the window.
    void validate() const;
    /// Detections inside [start, start + length).
    ArrivalTimes slice(double start, double length) const;
};

constexpr std::size_t kDefaultFftSamples = 1'000'000;
constexpr std::size_t kMinCoarseDetections = 100;

struct CoarseOptions {
    std::size_t n_samples = kDefaultFftSamples;
    /// Peak search half-width around 1/tau_A, as a fraction of 1/tau_A.
    double search_halfwidth = 0.1;
    /// Peak must exceed this multiple of the median spectral magnitude.
    double peak_to_median = 5.0;
};

/// Coarse period from the FFT of the OR-binned detection sequence. Throws
/// TooFewDetections or NoPeak.
double coarse_period_fft(const ArrivalTimes& arrivals, double tau_A, const CoarseOptions& opt = {});

struct RefineOptions {
    double trim_fraction = 0.3;
    /// Detector jitter; ok means rms_tie <= 3 sigma.
    double sigma = 100e-12;
    /// First fit horizon (T_samp); 0 means n_samples * tau_A / 4 of the defaults.
    double first_horizon = 0.0;
    double horizon_growth = 8.0;
    std::size_t min_fit_points = 10;
};

struct PeriodEstimate {
    double window_start = 0.0;
    double tau_B = 0.0;
    double tau_guess = 0.0;
    /// (tau_B - tau_guess) / tau_B.
    double slope = 0.0;
    /// Receiver time of the slot grid origin closest to the window start.
    double phase = 0.0;
    double rms_tie = 0.0;
    /// rms TIE of the coarse model (tau_guess) over the same detections.
    double rms_tie_coarse = 0.0;
    std::size_t detections = 0;
    std::size_t fit_detections = 0;  // D0, inside the first horizon
    std::size_t tie_inliers = 0;
    std::vector<std::int64_t> index_offsets;
    bool ok = false;

    /// Expected receiver time of slot n relative to the phase origin.
    double slot_time(std::int64_t n) const noexcept { return phase + static_cast<double>(n) * tau_B; }
};

/// Wrapped residual of t against the grid phase + n*tau, in [-tau/2, tau/2).
double wrapped_residual(double t, double phase, double tau) noexcept;

/// Robust rms time error of the detections against the grid (phase, tau):
/// residuals farther than 5 robust standard deviations (1.4826 * MAD) from the
/// median are left out. Returns the rms and the number of retained residuals.
struct TieStats {
    double rms = 0.0;
    std::size_t inliers = 0;
};
TieStats robust_tie_rms(std::span<const double> times, double phase, double tau);

/// Refines tau_0 and evaluates the time error. Throws FitDiverged when the
/// fitted slope reaches |0.5| and InsufficientInliers when too few detections
/// fall in the first horizon. A converged fit with rms_tie above 3 sigma is
/// returned with ok = false.
PeriodEstimate refine_period_lts(const ArrivalTimes& arrivals, double tau_0, const RefineOptions& opt = {});

struct SlotAssignment {
    /// Slot offsets of the kept detections relative to the first one.
    std::vector<std::int64_t> offsets;
    /// Absolute slot of each kept detection relative to est.phase.
    std::vector<std::int64_t> slots;
    /// Indices (into the arrival list) of the kept detections.
    std::vector<std::size_t> kept;
    /// Indices of detections dropped because an earlier one took their slot.
    std::vector<std::size_t> collisions;
};

/// Nearest-slot assignment. Requires est.ok (EstimateNotOk otherwise).
SlotAssignment assign_slots(const ArrivalTimes& arrivals, const PeriodEstimate& est);

/// Largest halving of T_acq for which |d tau_B/dt| * T^2 / tau_B <= 10 sigma.
/// drift_rate is d tau_B / dt in seconds per second.
double drift_guard(const PeriodEstimate& est, double drift_rate, double T_acq, double sigma);

struct TieSeries {
    std::size_t reference = 0;
    /// values[b] = TIE_ref(b); values[0] = 0.
    std::vector<double> values;
};

/// TIE_a(b) = (t_{a+b} - t_a) - (n_{a+b} - n_a) * tau for b = 0..D-1-a.
TieSeries tie_series(std::span<const double> times, std::span<const std::int64_t> slots, double tau,
                     std::size_t reference);

} // namespace q4s
