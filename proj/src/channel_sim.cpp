#include "q4s/channel_sim.hpp"

#include "q4s/error.hpp"
#include "q4s/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace q4s {

namespace {

// Independent generator streams derived from the user seed.
constexpr std::uint64_t kSignalStream = 1;
constexpr std::uint64_t kBackgroundStream = 2;
constexpr std::uint64_t kPayloadStream = 3;

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::ConfigInvalid, what); }

double quantize(double t, double resolution) {
    return resolution > 0.0 ? std::round(t / resolution) * resolution : t;
}

// Number of pulses with emission time below the end of the run.
std::uint64_t count_pulses(const ClockPair& clock, double duration) {
    if (clock.t0 >= duration) return 0;
    const double a = 0.5 * clock.drift_rate * clock.tau_A * clock.tau_A;
    const double b = clock.tau_A * (1.0 + clock.fractional_offset);
    const double c = clock.t0 - duration;
    double n = 0.0;
    if (std::abs(a) * duration < 1e-12 * b) {
        n = -c / b;
    } else {
        n = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
    }
    auto count = static_cast<std::uint64_t>(std::max(0.0, std::ceil(n)));
    while (count > 0 && clock.emission_time(count - 1) >= duration) --count;
    while (clock.emission_time(count) < duration) ++count;
    return count;
}

} // namespace

double ClockPair::emission_time(std::uint64_t n) const noexcept {
    const double elapsed = static_cast<double>(n) * tau_A;
    return t0 + elapsed * (1.0 + fractional_offset + 0.5 * drift_rate * elapsed);
}

void validate(const ClockPair& clock, const ChannelConfig& chan) {
    if (!(clock.tau_A > 0.0) || !std::isfinite(clock.tau_A)) invalid("tau_A must be positive");
    if (!(clock.jitter_sigma >= 0.0)) invalid("jitter_sigma must be non-negative");
    if (!std::isfinite(clock.fractional_offset) || !std::isfinite(clock.drift_rate) || !std::isfinite(clock.t0)) {
        invalid("clock parameters must be finite");
    }
    if (!(clock.t0 >= 0.0)) invalid("t0 must be non-negative");
    if (!(chan.eta > 0.0 && chan.eta <= 1.0)) invalid("eta must lie in (0, 1]");
    if (!(chan.qber >= 0.0 && chan.qber <= 0.5)) invalid("qber must lie in [0, 0.5]");
    if (!(chan.background_rate >= 0.0) || !std::isfinite(chan.background_rate)) {
        invalid("background_rate must be non-negative");
    }
    if (!(chan.z_basis_prob > 0.0 && chan.z_basis_prob < 1.0)) invalid("z_basis_prob must lie in (0, 1)");
    if (!(chan.duration > 0.0) || !std::isfinite(chan.duration)) invalid("duration must be positive");
    if (!(chan.resolution >= 0.0)) invalid("resolution must be non-negative");
    if (!(chan.mu >= 0.0)) invalid("mu must be non-negative");
    // The instantaneous period must stay positive over the run.
    if (!(1.0 + clock.fractional_offset > 0.0) ||
        !(1.0 + clock.fractional_offset + clock.drift_rate * chan.duration > 0.0)) {
        invalid("clock period becomes non-positive within the run");
    }
}

const char* outcome_name(Outcome o) noexcept {
    switch (o) {
    case Outcome::Z0: return "Z0";
    case Outcome::Z1: return "Z1";
    case Outcome::X0: return "X0";
    case Outcome::X1: return "X1";
    }
    return "?";
}

std::int8_t SimOutput::alice_symbol(std::uint64_t n) const noexcept {
    if (n < alice_string.size()) return alice_string[n];
    return (hash64(payload_seed, n) & 1u) ? std::int8_t{1} : std::int8_t{-1};
}

SimOutput simulate(const ClockPair& clock, const ChannelConfig& chan, std::span<const std::int8_t> alice) {
    validate(clock, chan);
    if (alice.empty()) invalid("synchronization string is empty");
    if (clock.emission_time(alice.size() - 1) >= chan.duration) {
        invalid("duration too short for the synchronization string");
    }

    SimOutput out;
    out.alice_string.assign(alice.begin(), alice.end());
    out.payload_seed = hash64(chan.seed, kPayloadStream);
    out.pulse_count = count_pulses(clock, chan.duration);

    struct Event {
        double t;
        std::int64_t index;
        Outcome outcome;
    };
    std::vector<Event> events;

    // Signal: skip geometrically to the next detected pulse, then split the
    // detection into Z (probability eta) or X.
    const double p_x = std::min(chan.eta * (1.0 - chan.z_basis_prob) / chan.z_basis_prob, 1.0 - chan.eta);
    const double p_det = chan.eta + p_x;
    Rng sig(hash64(chan.seed, kSignalStream));
    events.reserve(static_cast<std::size_t>(1.2 * p_det * static_cast<double>(out.pulse_count)) + 16);
    std::uint64_t n = sig.geometric(p_det);
    while (n < out.pulse_count) {
        Outcome o;
        const bool z = p_x <= 0.0 || sig.uniform01() * p_det < chan.eta;
        if (z) {
            std::int8_t s = out.alice_symbol(n);
            if (sig.bernoulli(chan.qber)) s = static_cast<std::int8_t>(-s);
            o = s > 0 ? Outcome::Z0 : Outcome::Z1;
        } else {
            o = sig.bernoulli(0.5) ? Outcome::X1 : Outcome::X0;
        }
        double t = clock.emission_time(n);
        if (clock.jitter_sigma > 0.0) t += clock.jitter_sigma * sig.normal();
        t = quantize(t, chan.resolution);
        if (t >= 0.0 && t < chan.duration) {
            events.push_back({t, static_cast<std::int64_t>(n), o});
            if (z) ++out.sifted_signal;
        }
        const std::uint64_t gap = sig.geometric(p_det);
        if (gap >= out.pulse_count - n) break;
        n += gap + 1;
    }

    const std::size_t n_signal = events.size();
    if (chan.background_rate > 0.0) {
        Rng bg(hash64(chan.seed, kBackgroundStream));
        double t = bg.exponential(chan.background_rate);
        while (t < chan.duration) {
            const double tq = quantize(t, chan.resolution);
            if (tq < chan.duration) events.push_back({tq, -1, static_cast<Outcome>(bg.below(4))});
            t += bg.exponential(chan.background_rate);
        }
    }
    // Signal events are already time ordered up to jitter; a stable sort keeps
    // signal ahead of background at equal timestamps.
    if (n_signal != events.size() || clock.jitter_sigma > 0.0) {
        std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    }

    out.stream.arrivals.window_start = 0.0;
    out.stream.arrivals.acquisition_window = chan.duration;
    out.stream.arrivals.resolution = chan.resolution;
    out.stream.arrivals.timestamps.reserve(events.size());
    out.stream.outcomes.reserve(events.size());
    out.emitted_index.reserve(events.size());
    out.is_background.reserve(events.size());
    for (const Event& e : events) {
        out.stream.arrivals.timestamps.push_back(e.t);
        out.stream.outcomes.push_back(e.outcome);
        out.emitted_index.push_back(e.index);
        out.is_background.push_back(e.index < 0 ? 1 : 0);
    }
    return out;
}

BobString build_bob_string(std::span<const std::int64_t> offsets, std::span<const Outcome> outcomes,
                           std::int64_t first_guess_slot, std::size_t L) {
    if (offsets.size() != outcomes.size()) throw Error(Errc::LengthMismatch, "bob string: offsets and outcomes differ");
    BobString b;
    b.symbols.assign(L, 0);
    std::vector<std::uint8_t> taken(L, 0);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const std::int64_t pos = offsets[i] - first_guess_slot;
        if (pos < 0 || pos >= static_cast<std::int64_t>(L)) continue;
        const auto p = static_cast<std::size_t>(pos);
        if (taken[p]) {
            ++b.collisions;
            continue;
        }
        taken[p] = 1;
        b.symbols[p] = outcome_symbol(outcomes[i]);
        if (b.symbols[p] != 0) ++b.written;
    }
    return b;
}

BobString build_bob_string(const DetectionStream& stream, const PeriodEstimate& est, std::int64_t first_guess_slot,
                           std::size_t L) {
    const SlotAssignment slots = assign_slots(stream.arrivals, est);
    std::vector<Outcome> kept(slots.kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) kept[k] = stream.outcomes[slots.kept[k]];
    BobString b = build_bob_string(slots.offsets, kept, first_guess_slot, L);
    b.collisions += slots.collisions.size();
    return b;
}

std::int64_t first_guess_rising_edge(std::span<const std::int64_t> slots, double eta_hint,
                                     std::uint64_t window_slots) {
    if (!(eta_hint > 0.0 && eta_hint <= 1.0)) throw Error(Errc::InvalidArgument, "rising edge: eta_hint outside (0, 1]");
    const double w = window_slots > 0 ? static_cast<double>(window_slots) : std::ceil(10.0 / eta_hint);
    const double threshold = 0.5 * eta_hint * w;
    const auto width = static_cast<std::int64_t>(w);
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < slots.size(); ++lo) {
        hi = std::max(hi, lo);
        while (hi < slots.size() && slots[hi] < slots[lo] + width) ++hi;
        if (static_cast<double>(hi - lo) > threshold) return slots[lo];
    }
    throw Error(Errc::NoEdge, "rising edge: detection rate never exceeds half the expected rate");
}

} // namespace q4s
