#include "q4s/sync_pipeline.hpp"

#include "q4s/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace q4s {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point since) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count());
}

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::ConfigInvalid, what); }

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    config_error(key + ": expected a boolean, got '" + v + "'");
}

using Setter = std::function<void(SyncConfig&, const std::string&, const std::string&)>;

Setter real(double SyncConfig::*field) {
    return [field](SyncConfig& c, const std::string& k, const std::string& v) { c.*field = io::parse_real(v, k); };
}
Setter clock_real(double ClockPair::*field) {
    return [field](SyncConfig& c, const std::string& k, const std::string& v) {
        c.clock.*field = io::parse_real(v, k);
    };
}
Setter chan_real(double ChannelConfig::*field) {
    return [field](SyncConfig& c, const std::string& k, const std::string& v) {
        c.channel.*field = io::parse_real(v, k);
    };
}
template <class T>
Setter count(T SyncConfig::*field) {
    return [field](SyncConfig& c, const std::string& k, const std::string& v) {
        c.*field = static_cast<T>(io::parse_uint(v, k));
    };
}
Setter text(std::string SyncConfig::*field) {
    return [field](SyncConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"tau_A", clock_real(&ClockPair::tau_A)},
        {"fractional_offset", clock_real(&ClockPair::fractional_offset)},
        {"drift_rate", clock_real(&ClockPair::drift_rate)},
        {"jitter_sigma", clock_real(&ClockPair::jitter_sigma)},
        {"t0", clock_real(&ClockPair::t0)},
        {"eta", chan_real(&ChannelConfig::eta)},
        {"qber", chan_real(&ChannelConfig::qber)},
        {"background_rate", chan_real(&ChannelConfig::background_rate)},
        {"mu", chan_real(&ChannelConfig::mu)},
        {"z_basis_prob", chan_real(&ChannelConfig::z_basis_prob)},
        {"duration", chan_real(&ChannelConfig::duration)},
        {"resolution", chan_real(&ChannelConfig::resolution)},
        {"seed",
         [](SyncConfig& c, const std::string& k, const std::string& v) { c.channel.seed = io::parse_uint(v, k); }},
        {"L", count(&SyncConfig::L)},
        {"N1", count(&SyncConfig::N1)},
        {"lambda", real(&SyncConfig::lambda)},
        {"string_seed", count(&SyncConfig::string_seed)},
        {"T_acq", real(&SyncConfig::T_acq)},
        {"sigma", real(&SyncConfig::sigma)},
        {"trim", real(&SyncConfig::trim)},
        {"fft_samples", count(&SyncConfig::fft_samples)},
        {"max_fft_samples", count(&SyncConfig::max_fft_samples)},
        {"delta_threshold", real(&SyncConfig::delta_threshold)},
        {"eta_hint", real(&SyncConfig::eta_hint)},
        {"window_slots", count(&SyncConfig::window_slots)},
        {"max_windows", count(&SyncConfig::max_windows)},
        {"drift_guard",
         [](SyncConfig& c, const std::string& k, const std::string& v) { c.use_drift_guard = parse_bool(k, v); }},
        {"keep_indices",
         [](SyncConfig& c, const std::string& k, const std::string& v) { c.keep_indices = parse_bool(k, v); }},
        {"timestamps", text(&SyncConfig::timestamps_path)},
        {"alice", text(&SyncConfig::alice_path)},
        {"truth", text(&SyncConfig::truth_path)},
    };
    return table;
}

struct WindowEstimate {
    PeriodEstimate est;
    bool used_fft = false;
    std::size_t fft_samples = 0;
};

RefineOptions refine_options(const SyncConfig& cfg, std::size_t samples) {
    RefineOptions opt;
    opt.trim_fraction = cfg.trim;
    opt.sigma = cfg.sigma;
    opt.first_horizon = static_cast<double>(samples) * cfg.clock.tau_A / 4.0;
    return opt;
}

// Period estimate for one window. The previous window's period is tried first;
// the FFT path runs when there is none or it does not give an ok estimate. The
// FFT size doubles while the sampled span holds too few detections.
WindowEstimate estimate_window(const ArrivalTimes& slice, double seed_tau, const SyncConfig& cfg) {
    WindowEstimate out;
    if (seed_tau > 0.0) {
        try {
            out.est = refine_period_lts(slice, seed_tau, refine_options(cfg, cfg.fft_samples));
            if (out.est.ok) return out;
        } catch (const Error&) {
            // fall through to the FFT path
        }
    }
    std::size_t n = cfg.fft_samples;
    double tau0 = 0.0;
    while (true) {
        try {
            CoarseOptions copt;
            copt.n_samples = n;
            tau0 = coarse_period_fft(slice, cfg.clock.tau_A, copt);
            break;
        } catch (const Error& e) {
            const bool covers_window = static_cast<double>(n) * cfg.clock.tau_A / 4.0 >= slice.acquisition_window;
            if (e.code() != Errc::TooFewDetections || 2 * n > cfg.max_fft_samples || covers_window) throw;
            n *= 2;
        }
    }
    out.used_fft = true;
    out.fft_samples = n;
    out.est = refine_period_lts(slice, tau0, refine_options(cfg, n));
    return out;
}

// d tau / dt from period fits on the two halves of a window.
std::optional<double> split_drift(const ArrivalTimes& slice, double seed_tau, const SyncConfig& cfg) {
    const double half = slice.acquisition_window / 2.0;
    try {
        const auto a = refine_period_lts(slice.slice(slice.window_start, half), seed_tau,
                                         refine_options(cfg, cfg.fft_samples));
        const auto b = refine_period_lts(slice.slice(slice.window_start + half, half), seed_tau,
                                         refine_options(cfg, cfg.fft_samples));
        return (b.tau_B - a.tau_B) / half;
    } catch (const Error&) {
        return std::nullopt;
    }
}

constexpr int kMaxWindowAttempts = 12;

} // namespace

void SyncConfig::set(const std::string& key, const std::string& value) {
    const auto it = setters().find(key);
    if (it == setters().end()) config_error("unknown configuration key '" + key + "'");
    try {
        it->second(*this, key, value);
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigInvalid) throw;
        config_error(e.what());
    }
}

void SyncConfig::apply(const io::KeyValues& kv) {
    for (const auto& [k, v] : kv) set(k, v);
}

std::vector<std::string> SyncConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
}

StringParams SyncConfig::string_params() const {
    StringParams p;
    p.L = L;
    p.N1 = N1;
    p.L1 = N1 ? L / N1 : 0;
    p.lambda = lambda;
    p.seed = string_seed;
    return p;
}

void SyncConfig::validate() const {
    if (timestamps_path.empty()) {
        q4s::validate(clock, channel);
        if (N1 == 0 || L % N1 != 0) config_error("L must be a multiple of N1");
        try {
            string_params().validate();
        } catch (const Error& e) {
            config_error(e.what());
        }
    } else {
        if (alice_path.empty()) config_error("file input needs the alice string path");
        if (!(clock.tau_A > 0.0)) config_error("tau_A must be positive");
    }
    if (!(T_acq > 0.0)) config_error("T_acq must be positive");
    if (!(sigma >= 0.0)) config_error("sigma must be non-negative");
    if (!(trim >= 0.0 && trim < 0.5)) config_error("trim must lie in [0, 0.5)");
    if (fft_samples < 16 || max_fft_samples < fft_samples) config_error("fft_samples out of range");
    if (!(delta_threshold > 0.0)) config_error("delta_threshold must be positive");
    if (!(eta_hint >= 0.0 && eta_hint <= 1.0)) config_error("eta_hint must lie in [0, 1]");
}

RunReport run_sync(const SyncConfig& cfg, const DetectionStream& stream, const io::Truth* truth,
                   const AliceReference& alice, double end_time) {
    const auto t_begin = Clock::now();
    RunReport rep;
    const auto& ts = stream.arrivals.timestamps;
    if (truth && truth->emitted_index.size() != ts.size()) {
        throw Error(Errc::LengthMismatch, "truth sidecar does not match the detections");
    }
    rep.has_truth = truth != nullptr;
    const double eta_hint = cfg.eta_hint > 0.0 ? cfg.eta_hint : cfg.channel.eta;
    const auto fail = [&](Errc code, std::string msg) {
        rep.failure_code = code;
        rep.failure = std::move(msg);
    };

    double start = ts.empty() ? stream.arrivals.window_start : std::min(stream.arrivals.window_start, ts.front());
    double T = cfg.T_acq;
    double prev_tau = 0.0;
    double prev_center = 0.0;
    double last_time = 0.0;
    std::int64_t last_global = 0;
    bool have_last = false;
    std::int64_t alice_base = 0;
    int attempts = 0;

    while (start < end_time && !rep.failure_code) {
        if (cfg.max_windows && rep.windows.size() >= cfg.max_windows) break;
        const std::size_t w = rep.windows.size();
        double len = std::min(T, end_time - start);
        if (end_time - (start + len) < 0.5 * T) len = end_time - start;
        const ArrivalTimes slice = stream.arrivals.slice(start, len);
        const auto i0 = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), start) - ts.begin());

        const auto t_period = Clock::now();
        WindowEstimate we;
        std::optional<Error> err;
        try {
            we = estimate_window(slice, prev_tau, cfg);
        } catch (const Error& e) {
            err = e;
        }
        rep.timings.period_ns += elapsed_ns(t_period);

        if (err || !we.est.ok) {
            ++attempts;
            const std::string where = "window " + std::to_string(w + 1);
            if (attempts < kMaxWindowAttempts) {
                // A sparse first window gets one retry with twice the data.
                if (err && w == 0 && !rep.retried && end_time - start > len) {
                    rep.retried = true;
                    T *= 2.0;
                    continue;
                }
                // A converged fit that misses the jitter bound points at drift
                // inside the window: shorten the window per the drift guard.
                if (!err && cfg.use_drift_guard) {
                    const auto drift = split_drift(slice, we.est.tau_B, cfg);
                    if (drift) {
                        const double rec = drift_guard(we.est, *drift, len, cfg.sigma);
                        if (rec < len) {
                            T = rec;
                            continue;
                        }
                    }
                }
            }
            if (err) {
                fail(err->code(), where + ": " + err->what());
            } else {
                fail(Errc::EstimateNotOk, where + ": rms time error " + io::format_real(we.est.rms_tie) +
                                              " s exceeds 3 sigma");
            }
            break;
        }
        attempts = 0;

        const PeriodEstimate& est = we.est;
        const SlotAssignment sa = assign_slots(slice, est);
        std::int64_t base = 0;
        if (w == 0) {
            base = sa.slots.empty() ? 0 : -sa.slots.front();
        } else if (have_last) {
            base = last_global + std::llround((est.phase - last_time) / est.tau_B);
        }

        if (w == 0) {
            const auto t_offset = Clock::now();
            try {
                std::vector<Outcome> kept(sa.kept.size());
                for (std::size_t k = 0; k < kept.size(); ++k) kept[k] = stream.outcomes[i0 + sa.kept[k]];
                rep.first_guess = first_guess_rising_edge(sa.offsets, eta_hint, cfg.window_slots);
                const BobString bob = build_bob_string(sa.offsets, kept, rep.first_guess, alice.length());
                rep.bob_nonzero = bob.written;
                ++rep.offset_calls;
                rep.offset = find_offset(alice, bob.symbols, cfg.delta_threshold);
                const auto L = static_cast<std::int64_t>(alice.length());
                const auto m = static_cast<std::int64_t>(rep.offset.m_opt);
                rep.m_signed = m <= L / 2 ? m : m - L;
                alice_base = rep.m_signed - rep.first_guess;
                if (!rep.offset.success) {
                    fail(Errc::SyncFailed, "offset search: distinguishability " +
                                               io::format_real(rep.offset.distinguishability) + " below threshold " +
                                               io::format_real(cfg.delta_threshold));
                }
            } catch (const Error& e) {
                fail(e.code(), std::string("offset search: ") + e.what());
            }
            rep.timings.offset_ns += elapsed_ns(t_offset);
        }

        WindowReport wr;
        wr.start = start;
        wr.length = len;
        wr.estimate = est;
        wr.estimate.index_offsets.clear();
        wr.estimate.index_offsets.shrink_to_fit();
        wr.used_fft = we.used_fft;
        wr.fft_samples = we.fft_samples;
        wr.kept = sa.kept.size();
        wr.collisions = sa.collisions.size();

        if (!rep.failure_code) {
            for (std::size_t k = 0; k < sa.kept.size(); ++k) {
                const std::size_t i = i0 + sa.kept[k];
                const std::int64_t index = base + sa.slots[k] + alice_base;
                if (truth && !truth->is_background[i]) {
                    ++rep.checked;
                    if (index == truth->emitted_index[i]) ++rep.correct;
                }
                if (cfg.keep_indices) {
                    rep.index_times.push_back(ts[i]);
                    rep.alice_index.push_back(index);
                }
            }
        }
        if (!sa.kept.empty()) {
            last_time = ts[i0 + sa.kept.back()];
            last_global = base + sa.slots.back();
            have_last = true;
        }

        const double center = start + 0.5 * len;
        if (w > 0) {
            wr.drift_rate = (est.tau_B - prev_tau) / (center - prev_center);
            if (cfg.use_drift_guard) T = std::min(T, drift_guard(est, wr.drift_rate, T, cfg.sigma));
        }
        prev_tau = est.tau_B;
        prev_center = center;
        rep.windows.push_back(std::move(wr));
        start += len;
    }

    if (!rep.failure_code && rep.windows.empty()) fail(Errc::TooFewDetections, "no acquisition window processed");
    rep.synchronized = !rep.failure_code && rep.offset_calls == 1 && rep.offset.success &&
                       std::all_of(rep.windows.begin(), rep.windows.end(),
                                   [](const WindowReport& w) { return w.estimate.ok; });
    rep.alignment_accuracy = rep.checked ? static_cast<double>(rep.correct) / static_cast<double>(rep.checked)
                                         : std::numeric_limits<double>::quiet_NaN();
    rep.timings.total_ns = elapsed_ns(t_begin);
    return rep;
}

RunReport run_sync(const SyncConfig& cfg) {
    cfg.validate();
    if (cfg.timestamps_path.empty()) {
        const SyncString s = generate_string(cfg.string_params());
        const AliceReference ref(s, cfg.N1);
        const SimOutput sim = simulate(cfg.clock, cfg.channel, s.symbols);
        const io::Truth truth{sim.emitted_index, sim.is_background};
        return run_sync(cfg, sim.stream, &truth, ref, cfg.channel.duration);
    }
    const DetectionStream stream = io::read_detections(cfg.timestamps_path);
    const SyncString alice = io::read_string(cfg.alice_path);
    const AliceReference ref(alice, alice.params.N1);
    std::optional<io::Truth> truth;
    if (!cfg.truth_path.empty()) truth = io::read_truth(cfg.truth_path);
    const double end = stream.size() ? stream.arrivals.timestamps.back() + cfg.clock.tau_A : 0.0;
    return run_sync(cfg, stream, truth ? &*truth : nullptr, ref, end);
}

void write_report_csv(const std::string& path, const RunReport& r) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    out << "window,start,length,tau_B,tau_guess,slope,phase,rms_tie,rms_tie_coarse,detections,kept,collisions,"
           "used_fft,fft_samples,drift_rate,ok\n";
    for (std::size_t w = 0; w < r.windows.size(); ++w) {
        const WindowReport& x = r.windows[w];
        const PeriodEstimate& e = x.estimate;
        out << w + 1 << ',' << io::format_real(x.start) << ',' << io::format_real(x.length) << ','
            << io::format_real(e.tau_B) << ',' << io::format_real(e.tau_guess) << ',' << io::format_real(e.slope) << ','
            << io::format_real(e.phase) << ',' << io::format_real(e.rms_tie) << ','
            << io::format_real(e.rms_tie_coarse) << ',' << e.detections << ',' << x.kept << ',' << x.collisions << ','
            << int{x.used_fft} << ',' << x.fft_samples << ',' << io::format_real(x.drift_rate) << ',' << int{e.ok}
            << '\n';
    }
    if (!out.flush()) throw Error(Errc::Io, "write failed for " + path);
}

std::string report_summary(const RunReport& r) {
    std::ostringstream s;
    s << "synchronized=" << (r.synchronized ? "true" : "false") << '\n';
    if (r.failure_code) s << "failure=" << errc_name(*r.failure_code) << ": " << r.failure << '\n';
    s << "windows=" << r.windows.size() << '\n';
    s << "retried=" << (r.retried ? "true" : "false") << '\n';
    s << "offset_calls=" << r.offset_calls << '\n';
    if (r.offset_calls) {
        s << "first_guess=" << r.first_guess << '\n';
        s << "bob_nonzero=" << r.bob_nonzero << '\n';
        s << "m_opt=" << r.offset.m_opt << '\n';
        s << "m_signed=" << r.m_signed << '\n';
        s << "u_opt=" << r.offset.u_opt << '\n';
        s << "j_opt=" << r.offset.j_opt << '\n';
        s << "peak=" << io::format_real(r.offset.peak_value) << '\n';
        s << "delta=" << io::format_real(r.offset.distinguishability) << '\n';
    }
    if (r.has_truth) {
        s << "checked=" << r.checked << '\n';
        s << "alignment_accuracy=" << io::format_real(r.alignment_accuracy) << '\n';
    }
    s << "period_ns=" << r.timings.period_ns << '\n';
    s << "offset_ns=" << r.timings.offset_ns << '\n';
    s << "total_ns=" << r.timings.total_ns << '\n';
    return s.str();
}

void SweepGrid::validate() const {
    if (qbers.empty() || bits.empty()) config_error("sweep grid needs qber and bits values");
    for (double q : qbers) {
        if (!(q > 0.0 && q <= 0.5)) config_error("sweep qber values must lie in (0, 0.5]");
    }
    for (double b : bits) {
        if (!(b > 0.0)) config_error("sweep bits values must be positive");
    }
    if (repetitions < 1) config_error("sweep repetitions must be at least 1");
    if (!(background_rate >= 0.0)) config_error("sweep background_rate must be non-negative");
}

SweepResult run_sweep(const SweepGrid& grid, const SyncConfig& base, unsigned threads) {
    grid.validate();
    base.validate();
    const SyncString s = generate_string(base.string_params());
    const AliceReference ref(s, base.N1);
    const double L = static_cast<double>(base.L);

    SweepResult res;
    for (double q : grid.qbers) {
        for (double b : grid.bits) {
            if (b > L) config_error("sweep bits value exceeds the string length");
            res.cells.push_back({q, b, grid.repetitions, 0});
        }
    }
    const std::size_t jobs = res.cells.size() * grid.repetitions;
    std::vector<std::uint8_t> ok(jobs, 0);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const SweepCell& cell = res.cells[job / grid.repetitions];
            SyncConfig cfg = base;
            cfg.channel.eta = cell.bits / L;
            cfg.channel.qber = cell.qber;
            cfg.channel.background_rate = grid.background_rate;
            cfg.channel.seed = hash64(base.channel.seed, job);
            cfg.keep_indices = false;
            try {
                const SimOutput sim = simulate(cfg.clock, cfg.channel, s.symbols);
                const io::Truth truth{sim.emitted_index, sim.is_background};
                const RunReport r = run_sync(cfg, sim.stream, &truth, ref, cfg.channel.duration);
                ok[job] = r.synchronized && r.checked > 0 && r.correct == r.checked;
            } catch (const Error&) {
                ok[job] = 0;
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t job = 0; job < jobs; ++job) res.cells[job / grid.repetitions].successes += ok[job];

    for (std::size_t qi = 0; qi < grid.qbers.size(); ++qi) {
        double need = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t bi = 0; bi < grid.bits.size(); ++bi) {
            const SweepCell& c = res.cells[qi * grid.bits.size() + bi];
            if (c.fraction() >= 0.5 && (std::isnan(need) || c.bits < need)) need = c.bits;
        }
        res.required_bits.emplace_back(grid.qbers[qi], need);
    }
    return res;
}

void write_sweep_csv(const std::string& path, const SweepResult& r) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    out << "qber,bits,success_fraction\n";
    for (const SweepCell& c : r.cells) {
        out << io::format_real(c.qber) << ',' << io::format_real(c.bits) << ',' << io::format_real(c.fraction())
            << '\n';
    }
    if (!out.flush()) throw Error(Errc::Io, "write failed for " + path);
}

std::uint64_t bench_n1_for(std::uint64_t L) {
    if (L < 2) return 1;
    const double target = std::log2(static_cast<double>(L));
    std::uint64_t best = 1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::uint64_t d = 1; d * d <= L; ++d) {
        if (L % d != 0) continue;
        for (std::uint64_t c : {d, L / d}) {
            const double gap = std::abs(static_cast<double>(c) - target);
            if (gap < best_gap || (gap == best_gap && c < best)) {
                best = c;
                best_gap = gap;
            }
        }
    }
    return best;
}

std::vector<ComplexityReport> run_bench(const std::vector<std::uint64_t>& lengths, std::uint64_t n1,
                                        std::uint64_t seed) {
    std::vector<ComplexityReport> rows;
    for (std::uint64_t L : lengths) rows.push_back(complexity_probe(L, n1 ? n1 : bench_n1_for(L), seed));
    return rows;
}

void write_bench_csv(const std::string& path, const std::vector<ComplexityReport>& rows) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    out << "L,N1,stage1_ops,stage2_ops,baseline_ops,wall_ns,baseline_wall_ns\n";
    for (const ComplexityReport& r : rows) {
        out << r.L << ',' << r.N1 << ',' << r.stage1_ops << ',' << r.stage2_ops << ',' << r.baseline_ops << ','
            << r.fast_wall_ns << ',' << r.baseline_wall_ns << '\n';
    }
    if (!out.flush()) throw Error(Errc::Io, "write failed for " + path);
}

} // namespace q4s
