#include "q4s/q4s.h"

#include "q4s/fast_xcorr.hpp"
#include "q4s/io.hpp"
#include "q4s/period_recovery.hpp"
#include "q4s/sync_pipeline.hpp"
#include "q4s/sync_string.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

struct q4s_string {
    q4s::SyncString s;
};

struct q4s_config {
    q4s::SyncConfig cfg;
};

struct q4s_periods {
    std::vector<q4s_period> rows;
};

struct q4s_report {
    q4s::RunReport r;
    std::string summary;
};

namespace {

thread_local std::string last_error;

q4s_status to_status(q4s::Errc c) {
    using q4s::Errc;
    switch (c) {
    case Errc::InvalidArgument: return Q4S_INVALID_ARGUMENT;
    case Errc::InvalidParams: return Q4S_INVALID_PARAMS;
    case Errc::LengthMismatch: return Q4S_LENGTH_MISMATCH;
    case Errc::LengthNotDivisible: return Q4S_LENGTH_NOT_DIVISIBLE;
    case Errc::DimensionMismatch: return Q4S_DIMENSION_MISMATCH;
    case Errc::DegenerateInput: return Q4S_DEGENERATE_INPUT;
    case Errc::TooFewDetections: return Q4S_TOO_FEW_DETECTIONS;
    case Errc::NoPeak: return Q4S_NO_PEAK;
    case Errc::FitDiverged: return Q4S_FIT_DIVERGED;
    case Errc::InsufficientInliers: return Q4S_INSUFFICIENT_INLIERS;
    case Errc::EstimateNotOk: return Q4S_ESTIMATE_NOT_OK;
    case Errc::NoEdge: return Q4S_NO_EDGE;
    case Errc::ConfigInvalid: return Q4S_CONFIG_INVALID;
    case Errc::Io: return Q4S_IO;
    case Errc::Parse: return Q4S_PARSE;
    case Errc::SyncFailed: return Q4S_SYNC_FAILED;
    }
    return Q4S_INTERNAL;
}

q4s_status fail(q4s_status s, const std::string& msg) {
    last_error = msg;
    return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
q4s_status guarded(F&& f) noexcept {
    try {
        f();
        return Q4S_OK;
    } catch (const q4s::Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(Q4S_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(Q4S_INTERNAL, e.what());
    } catch (...) {
        return fail(Q4S_INTERNAL, "unknown error");
    }
}

#define Q4S_REQUIRE(cond, what)                                                                                        \
    do {                                                                                                               \
        if (!(cond)) return fail(Q4S_INVALID_ARGUMENT, what);                                                          \
    } while (0)

} // namespace

extern "C" {

const char* q4s_status_name(q4s_status status) {
    switch (status) {
    case Q4S_OK: return "OK";
    case Q4S_INVALID_ARGUMENT: return "InvalidArgument";
    case Q4S_INVALID_PARAMS: return "InvalidParams";
    case Q4S_LENGTH_MISMATCH: return "LengthMismatch";
    case Q4S_LENGTH_NOT_DIVISIBLE: return "LengthNotDivisible";
    case Q4S_DIMENSION_MISMATCH: return "DimensionMismatch";
    case Q4S_DEGENERATE_INPUT: return "DegenerateInput";
    case Q4S_TOO_FEW_DETECTIONS: return "TooFewDetections";
    case Q4S_NO_PEAK: return "NoPeak";
    case Q4S_FIT_DIVERGED: return "FitDiverged";
    case Q4S_INSUFFICIENT_INLIERS: return "InsufficientInliers";
    case Q4S_ESTIMATE_NOT_OK: return "EstimateNotOk";
    case Q4S_NO_EDGE: return "NoEdge";
    case Q4S_CONFIG_INVALID: return "ConfigInvalid";
    case Q4S_IO: return "Io";
    case Q4S_PARSE: return "Parse";
    case Q4S_SYNC_FAILED: return "SyncFailed";
    case Q4S_BUFFER_TOO_SMALL: return "BufferTooSmall";
    case Q4S_INTERNAL: return "Internal";
    }
    return "Unknown";
}

const char* q4s_last_error(void) { return last_error.c_str(); }

const char* q4s_version(void) { return "1.0.0"; }

q4s_status q4s_string_generate(uint64_t L, uint64_t N1, double lambda, uint64_t seed, q4s_string** out) {
    Q4S_REQUIRE(out, "out is null");
    Q4S_REQUIRE(N1 > 0, "N1 must be positive");
    return guarded([&] {
        q4s::StringParams p;
        p.L = L;
        p.N1 = N1;
        p.L1 = L / N1;
        p.lambda = lambda;
        p.seed = seed;
        if (p.L1 * N1 != L) throw q4s::Error(q4s::Errc::InvalidParams, "L must be a multiple of N1");
        *out = new q4s_string{q4s::generate_string(p)};
    });
}

q4s_status q4s_string_load(const char* path, q4s_string** out) {
    Q4S_REQUIRE(path && out, "null argument");
    return guarded([&] { *out = new q4s_string{q4s::io::read_string(path)}; });
}

q4s_status q4s_string_save(const q4s_string* s, const char* path, int binary) {
    Q4S_REQUIRE(s && path, "null argument");
    return guarded([&] { q4s::io::write_string(path, s->s, binary != 0); });
}

size_t q4s_string_length(const q4s_string* s) { return s ? s->s.size() : 0; }

uint64_t q4s_string_n1(const q4s_string* s) { return s ? s->s.params.N1 : 0; }

const int8_t* q4s_string_symbols(const q4s_string* s) { return s ? s->s.symbols.data() : nullptr; }

void q4s_string_free(q4s_string* s) { delete s; }

q4s_status q4s_string_shape(const q4s_string* s, double peak_tol, double offpeak_tol, q4s_shape* out) {
    Q4S_REQUIRE(s && out, "null argument");
    return guarded([&] {
        const double pt = peak_tol > 0 ? peak_tol : q4s::default_peak_tolerance(s->s.params);
        const double ot = offpeak_tol > 0 ? offpeak_tol : q4s::default_offpeak_tolerance(s->s.params);
        const q4s::ShapeReport r = q4s::verify_autocorrelation_shape(s->s, pt, ot);
        *out = {r.lag0,          r.measured_c0,          r.worst_peak_deviation, r.worst_offpeak, r.worst_offpeak_lag,
                r.offpeak_violations, int{r.lag0_ok}, int{r.peaks_ok},           int{r.offpeak_ok}};
    });
}

q4s_status q4s_find_offset(const q4s_string* alice, uint64_t n1, const int8_t* bob, size_t len, double threshold,
                           q4s_offset* out) {
    Q4S_REQUIRE(alice && bob && out, "null argument");
    return guarded([&] {
        const q4s::AliceReference ref(alice->s.symbols, n1 ? n1 : alice->s.params.N1);
        const q4s::OffsetResult r = q4s::find_offset(ref, std::span<const std::int8_t>(bob, len), threshold);
        *out = {r.m_opt, r.u_opt, r.j_opt, r.peak_value, r.column0_peak, r.distinguishability, int{r.success}};
    });
}

q4s_status q4s_read_ternary(const char* path, int8_t* buf, size_t cap, size_t* len) {
    Q4S_REQUIRE(path && len, "null argument");
    std::vector<std::int8_t> v;
    const q4s_status st = guarded([&] { v = q4s::io::read_ternary(path); });
    if (st != Q4S_OK) return st;
    *len = v.size();
    if (!buf) return Q4S_OK;
    if (cap < v.size()) return fail(Q4S_BUFFER_TOO_SMALL, "buffer holds fewer symbols than the file");
    std::copy(v.begin(), v.end(), buf);
    return Q4S_OK;
}

q4s_status q4s_config_new(q4s_config** out) {
    Q4S_REQUIRE(out, "out is null");
    return guarded([&] { *out = new q4s_config{}; });
}

q4s_status q4s_config_set(q4s_config* cfg, const char* key, const char* value) {
    Q4S_REQUIRE(cfg && key && value, "null argument");
    return guarded([&] { cfg->cfg.set(key, value); });
}

q4s_status q4s_config_load(q4s_config* cfg, const char* path) {
    Q4S_REQUIRE(cfg && path, "null argument");
    return guarded([&] { cfg->cfg.apply(q4s::io::read_config(path)); });
}

void q4s_config_free(q4s_config* cfg) { delete cfg; }

q4s_status q4s_simulate(const q4s_config* cfg, const char* detections_path, const char* truth_path,
                        const char* alice_path, uint64_t* detections) {
    Q4S_REQUIRE(cfg, "config is null");
    return guarded([&] {
        const q4s::SyncConfig& c = cfg->cfg;
        if (!c.timestamps_path.empty()) {
            throw q4s::Error(q4s::Errc::ConfigInvalid, "simulate does not take a timestamps input");
        }
        c.validate();
        const q4s::SyncString s = q4s::generate_string(c.string_params());
        const q4s::SimOutput sim = q4s::simulate(c.clock, c.channel, s.symbols);
        if (detections_path) q4s::io::write_detections(detections_path, sim.stream);
        if (truth_path) q4s::io::write_truth(truth_path, sim);
        if (alice_path) q4s::io::write_string(alice_path, s);
        if (detections) *detections = sim.stream.size();
    });
}

q4s_status q4s_recover_periods(const char* detections_path, double tau_A, double T_acq, double sigma, double trim,
                               uint64_t fft_samples, q4s_periods** out) {
    Q4S_REQUIRE(detections_path && out, "null argument");
    Q4S_REQUIRE(tau_A > 0 && T_acq > 0 && sigma >= 0, "tau_A and T_acq must be positive, sigma non-negative");
    return guarded([&] {
        const q4s::DetectionStream stream = q4s::io::read_detections(detections_path);
        auto result = std::make_unique<q4s_periods>();
        const auto& ts = stream.arrivals.timestamps;
        if (ts.empty()) throw q4s::Error(q4s::Errc::TooFewDetections, "no detections in " + std::string(detections_path));
        const double end = ts.back() + tau_A;
        q4s::CoarseOptions copt;
        if (fft_samples) copt.n_samples = fft_samples;
        q4s::RefineOptions ropt;
        ropt.sigma = sigma;
        ropt.trim_fraction = trim;
        ropt.first_horizon = static_cast<double>(copt.n_samples) * tau_A / 4.0;
        for (double start = std::min(0.0, ts.front()); start < end;) {
            // A tail shorter than half a window joins the last window.
            double len = std::min(T_acq, end - start);
            if (end - (start + len) < 0.5 * T_acq) len = end - start;
            const q4s::ArrivalTimes slice = stream.arrivals.slice(start, len);
            q4s_period row{};
            row.window_start = start;
            row.window_length = len;
            row.detections = slice.size();
            row.status = guarded([&] {
                const double tau0 = q4s::coarse_period_fft(slice, tau_A, copt);
                q4s::PeriodEstimate e = q4s::refine_period_lts(slice, tau0, ropt);
                row.tau_B = e.tau_B;
                row.tau_guess = e.tau_guess;
                row.slope = e.slope;
                row.phase = e.phase;
                row.rms_tie = e.rms_tie;
                row.rms_tie_coarse = e.rms_tie_coarse;
                row.ok = e.ok;
                if (e.ok) row.collisions = q4s::assign_slots(slice, e).collisions.size();
            });
            result->rows.push_back(row);
            start += len;
        }
        *out = result.release();
    });
}

size_t q4s_periods_count(const q4s_periods* p) { return p ? p->rows.size() : 0; }

q4s_status q4s_periods_get(const q4s_periods* p, size_t index, q4s_period* out) {
    Q4S_REQUIRE(p && out, "null argument");
    Q4S_REQUIRE(index < p->rows.size(), "window index out of range");
    *out = p->rows[index];
    return Q4S_OK;
}

void q4s_periods_free(q4s_periods* p) { delete p; }

q4s_status q4s_run_sync(const q4s_config* cfg, q4s_report** out) {
    Q4S_REQUIRE(cfg && out, "null argument");
    return guarded([&] {
        auto rep = std::make_unique<q4s_report>();
        rep->r = q4s::run_sync(cfg->cfg);
        rep->summary = q4s::report_summary(rep->r);
        *out = rep.release();
    });
}

int q4s_report_synchronized(const q4s_report* r) { return r && r->r.synchronized ? 1 : 0; }

q4s_status q4s_report_failure(const q4s_report* r) {
    Q4S_REQUIRE(r, "report is null");
    if (r->r.synchronized) return Q4S_OK;
    if (r->r.failure_code) {
        last_error = r->r.failure;
        return to_status(*r->r.failure_code);
    }
    return fail(Q4S_SYNC_FAILED, "not synchronized");
}

const char* q4s_report_summary(const q4s_report* r) { return r ? r->summary.c_str() : ""; }

q4s_status q4s_report_offset(const q4s_report* r, q4s_offset* out) {
    Q4S_REQUIRE(r && out, "null argument");
    const q4s::OffsetResult& o = r->r.offset;
    *out = {o.m_opt, o.u_opt, o.j_opt, o.peak_value, o.column0_peak, o.distinguishability, int{o.success}};
    return Q4S_OK;
}

double q4s_report_alignment_accuracy(const q4s_report* r) { return r ? r->r.alignment_accuracy : 0.0; }

unsigned q4s_report_offset_calls(const q4s_report* r) { return r ? r->r.offset_calls : 0; }

q4s_status q4s_report_write_csv(const q4s_report* r, const char* path) {
    Q4S_REQUIRE(r && path, "null argument");
    return guarded([&] { q4s::write_report_csv(path, r->r); });
}

q4s_status q4s_report_write_indices(const q4s_report* r, const char* path) {
    Q4S_REQUIRE(r && path, "null argument");
    return guarded([&] {
        std::ofstream out(path);
        if (!out) throw q4s::Error(q4s::Errc::Io, std::string("cannot write ") + path);
        out << "t_seconds,alice_index\n";
        for (std::size_t i = 0; i < r->r.alice_index.size(); ++i) {
            out << q4s::io::format_real(r->r.index_times[i]) << ',' << r->r.alice_index[i] << '\n';
        }
        if (!out.flush()) throw q4s::Error(q4s::Errc::Io, std::string("write failed for ") + path);
    });
}

void q4s_report_free(q4s_report* r) { delete r; }

q4s_status q4s_run_sweep(const q4s_config* base, const double* qbers, size_t nq, const double* bits, size_t nb,
                         unsigned repetitions, double background_rate, unsigned threads, const char* out_path,
                         q4s_sweep_cell* cells) {
    Q4S_REQUIRE(base && qbers && bits && cells, "null argument");
    return guarded([&] {
        q4s::SweepGrid grid;
        grid.qbers.assign(qbers, qbers + nq);
        grid.bits.assign(bits, bits + nb);
        grid.repetitions = repetitions;
        grid.background_rate = background_rate;
        const q4s::SweepResult res = q4s::run_sweep(grid, base->cfg, threads);
        for (std::size_t i = 0; i < res.cells.size(); ++i) {
            cells[i] = {res.cells[i].qber, res.cells[i].bits, res.cells[i].fraction()};
        }
        if (out_path) q4s::write_sweep_csv(out_path, res);
    });
}

q4s_status q4s_run_bench(const uint64_t* lengths, size_t n, uint64_t n1, uint64_t seed, const char* out_path,
                         q4s_bench_row* rows) {
    Q4S_REQUIRE(lengths && rows, "null argument");
    return guarded([&] {
        const std::vector<std::uint64_t> ls(lengths, lengths + n);
        const auto res = q4s::run_bench(ls, n1, seed);
        for (std::size_t i = 0; i < res.size(); ++i) {
            const auto& r = res[i];
            rows[i] = {r.L,           r.N1,          r.stage1_ops, r.stage2_ops, r.baseline_ops, r.fast_wall_ns,
                       r.baseline_wall_ns, int{r.offsets_agree}};
        }
        if (out_path) q4s::write_bench_csv(out_path, res);
    });
}

} // extern "C"
