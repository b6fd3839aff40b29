#pragma once

// Seeded simulator of the transmitter, channel and receiver chain.
//
// Alice emits one pulse per slot: the synchronization string first, then
// payload symbols derived from a hash of (payload_seed, index). Pulse n
// reaches Bob's clock frame at
//
//     t_n = t0 + n * tau_A * (1 + fractional_offset + drift_rate * n * tau_A / 2)
//
// so the instantaneous period is tau_A * (1 + fractional_offset + drift_rate * t).
// eta is the sifted transmittance: a pulse yields a Z-basis detection with
// probability eta. X-basis detections are added at the rate implied by the
// basis split, min(eta * (1 - z) / z, 1 - eta), and carry random outcomes.

#include "q4s/period_recovery.hpp"
#include "q4s/sync_string.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace q4s {

struct ClockPair {
    double tau_A = 20e-9;
    double fractional_offset = 0.0;
    /// d(fractional offset)/dt, per second.
    double drift_rate = 0.0;
    double jitter_sigma = 0.0;
    /// Receiver time of pulse 0.
    double t0 = 0.0;

    /// Noise-free receiver time of pulse n.
    double emission_time(std::uint64_t n) const noexcept;
};

struct ChannelConfig {
    double eta = 1e-3;
    double qber = 0.0;
    double background_rate = 0.0;  // Hz
    double mu = 1.0;               // documentation only
    double z_basis_prob = 0.9;
    double duration = 1.0;         // seconds of receiver time recorded from 0
    double resolution = 81e-12;    // timestamp quantization, 0 disables
    std::uint64_t seed = 1;
};

/// Throws ConfigInvalid on out-of-range values.
void validate(const ClockPair& clock, const ChannelConfig& chan);

enum class Outcome : std::uint8_t { Z0, Z1, X0, X1 };

const char* outcome_name(Outcome o) noexcept;
inline bool is_z(Outcome o) noexcept { return o == Outcome::Z0 || o == Outcome::Z1; }
/// Z0 -> +1, Z1 -> -1, X outcomes -> 0.
inline std::int8_t outcome_symbol(Outcome o) noexcept {
    return o == Outcome::Z0 ? std::int8_t{1} : o == Outcome::Z1 ? std::int8_t{-1} : std::int8_t{0};
}

struct DetectionStream {
    ArrivalTimes arrivals;
    std::vector<Outcome> outcomes;

    std::size_t size() const noexcept { return outcomes.size(); }
};

struct SimOutput {
    DetectionStream stream;
    /// Pulse index per detection, -1 for background.
    std::vector<std::int64_t> emitted_index;
    std::vector<std::uint8_t> is_background;
    std::vector<std::int8_t> alice_string;  // the synchronization string
    std::uint64_t payload_seed = 0;
    std::uint64_t pulse_count = 0;
    std::uint64_t sifted_signal = 0;  // Z-basis signal detections kept

    /// Alice's symbol at pulse n: string first, payload afterwards.
    std::int8_t alice_symbol(std::uint64_t n) const noexcept;
};

/// Throws ConfigInvalid, including when the string does not fit in the run.
SimOutput simulate(const ClockPair& clock, const ChannelConfig& chan, std::span<const std::int8_t> alice);

struct BobString {
    std::vector<std::int8_t> symbols;  // length L, entries in {-1, 0, +1}
    std::size_t written = 0;           // nonzero entries
    std::size_t collisions = 0;
};

/// Bob's ternary string over slots [first_guess_slot, first_guess_slot + L)
/// of the slot numbering of assign_slots (offsets from the first detection).
/// Requires est.ok (EstimateNotOk).
BobString build_bob_string(const DetectionStream& stream, const PeriodEstimate& est, std::int64_t first_guess_slot,
                           std::size_t L);

/// Same from slots that were already assigned.
BobString build_bob_string(std::span<const std::int64_t> offsets, std::span<const Outcome> outcomes,
                           std::int64_t first_guess_slot, std::size_t L);

/// First detection slot whose window [slot, slot + window_slots) holds more
/// than eta_hint * window_slots / 2 detections. window_slots = 0 selects
/// 10 / eta_hint. Throws NoEdge.
std::int64_t first_guess_rising_edge(std::span<const std::int64_t> slots, double eta_hint,
                                     std::uint64_t window_slots = 0);

} // namespace q4s
