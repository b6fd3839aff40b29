#pragma once

// End-to-end synchronization: period recovery on every acquisition window,
// offset recovery once on the first, absolute slot indices for every kept
// detection. Also drives the success-region sweep and the complexity bench.

#include "q4s/channel_sim.hpp"
#include "q4s/error.hpp"
#include "q4s/fast_xcorr.hpp"
#include "q4s/io.hpp"
#include "q4s/period_recovery.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace q4s {

struct SyncConfig {
    ClockPair clock{20e-9, 5e-4, 0.0, 100e-12, 0.0};
    ChannelConfig channel{};

    // Synchronization string.
    std::uint64_t L = 1'000'000;
    std::uint64_t N1 = 10;
    double lambda = 1.0;
    std::uint64_t string_seed = 1;

    // Processing.
    double T_acq = 1.0;
    double sigma = 100e-12;
    double trim = 0.3;
    std::size_t fft_samples = kDefaultFftSamples;
    /// Upper limit for the coarse FFT size when the window is sparse.
    std::size_t max_fft_samples = std::size_t{1} << 23;
    double delta_threshold = kDefaultDeltaThreshold;
    /// Expected sifted detection probability for the rising edge; 0 = channel.eta.
    double eta_hint = 0.0;
    /// Rising-edge window; 0 = 10 / eta_hint.
    std::uint64_t window_slots = 0;
    bool use_drift_guard = true;
    std::size_t max_windows = 0;  // 0 = all
    /// Keep (time, Alice index) for every indexed detection.
    bool keep_indices = false;

    // File input instead of simulation: detections CSV, Alice's string, and
    // optionally a truth sidecar for the alignment check.
    std::string timestamps_path;
    std::string alice_path;
    std::string truth_path;

    /// Applies one key=value setting; unknown keys and bad values throw ConfigInvalid.
    void set(const std::string& key, const std::string& value);
    void apply(const io::KeyValues& kv);
    /// Names accepted by set().
    static std::vector<std::string> keys();
    void validate() const;
    StringParams string_params() const;
};

struct WindowReport {
    double start = 0.0;
    double length = 0.0;
    PeriodEstimate estimate;  // index_offsets left empty
    bool used_fft = false;
    std::size_t fft_samples = 0;
    std::size_t kept = 0;
    std::size_t collisions = 0;
    /// d tau_B / dt measured against the previous window; 0 for the first.
    double drift_rate = 0.0;
};

struct StageTimings {
    std::uint64_t period_ns = 0;
    std::uint64_t offset_ns = 0;
    std::uint64_t total_ns = 0;
};

struct RunReport {
    std::vector<WindowReport> windows;

    OffsetResult offset;
    unsigned offset_calls = 0;
    std::int64_t first_guess = 0;
    /// Alice index of Bob's first-guess slot.
    std::int64_t m_signed = 0;
    std::size_t bob_nonzero = 0;
    bool retried = false;

    bool has_truth = false;
    std::size_t checked = 0;  // non-background detections given an index
    std::size_t correct = 0;
    double alignment_accuracy = 0.0;

    bool synchronized = false;
    std::optional<Errc> failure_code;
    std::string failure;
    StageTimings timings;

    std::vector<double> index_times;
    std::vector<std::int64_t> alice_index;
};

/// Runs the pipeline on a detection stream. `truth` may be null.
RunReport run_sync(const SyncConfig& cfg, const DetectionStream& stream, const io::Truth* truth,
                   const AliceReference& alice, double end_time);

/// Simulates (or reads the configured files) and runs the pipeline. Module
/// errors become a failed report; only configuration and file errors throw.
RunReport run_sync(const SyncConfig& cfg);

/// Writes one CSV row per window plus a summary row block.
void write_report_csv(const std::string& path, const RunReport& r);
std::string report_summary(const RunReport& r);

struct SweepGrid {
    std::vector<double> qbers;
    std::vector<double> bits;  // sifted synchronization bits L * eta
    unsigned repetitions = 10;
    double background_rate = 200.0;

    void validate() const;
};

struct SweepCell {
    double qber = 0.0;
    double bits = 0.0;
    unsigned runs = 0;
    unsigned successes = 0;

    double fraction() const noexcept { return runs ? static_cast<double>(successes) / runs : 0.0; }
};

struct SweepResult {
    std::vector<SweepCell> cells;  // qber-major order
    /// Per qber, the smallest grid bits with success fraction >= 0.5 (NaN if none).
    std::vector<std::pair<double, double>> required_bits;
};

/// A run succeeds when it synchronizes and every indexed signal detection
/// receives its true index. threads = 0 uses the hardware concurrency.
SweepResult run_sweep(const SweepGrid& grid, const SyncConfig& base, unsigned threads = 0);
void write_sweep_csv(const std::string& path, const SweepResult& r);

/// Divisor of L closest to log2(L); the smaller one on ties.
std::uint64_t bench_n1_for(std::uint64_t L);

/// n1 = 0 selects bench_n1_for(L) per length.
std::vector<ComplexityReport> run_bench(const std::vector<std::uint64_t>& lengths, std::uint64_t n1,
                                        std::uint64_t seed = 1);
void write_bench_csv(const std::string& path, const std::vector<ComplexityReport>& rows);

} // namespace q4s
