// Command-line front end. Talks to the library only through the C API.

#include "q4s/q4s.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSyncFailed = 2;

struct CliError {
    q4s_status status;
};

void check(q4s_status st) {
    if (st != Q4S_OK) throw CliError{st};
}

struct ConfigDeleter {
    void operator()(q4s_config* c) const { q4s_config_free(c); }
};
using ConfigPtr = std::unique_ptr<q4s_config, ConfigDeleter>;

// Keys shared by the simulate, sync and sweep subcommands; each is also a flag.
const std::vector<std::pair<std::string, std::string>> kConfigKeys = {
    {"tau_A", "transmitter period in seconds"},
    {"fractional_offset", "receiver period offset, tau_B = tau_A (1 + offset)"},
    {"drift_rate", "change of the fractional offset per second"},
    {"jitter_sigma", "detector jitter in seconds"},
    {"t0", "receiver time of the first pulse"},
    {"eta", "sifted transmittance"},
    {"qber", "bit flip probability"},
    {"background_rate", "background counts per second"},
    {"mu", "mean photon number (bookkeeping only)"},
    {"z_basis_prob", "receiver Z-basis probability"},
    {"duration", "simulated seconds"},
    {"resolution", "timestamp quantization in seconds (0 = off)"},
    {"L", "synchronization string length"},
    {"N1", "block count N1 (L = N1 * L1)"},
    {"lambda", "string bias parameter"},
    {"string_seed", "seed of the synchronization string"},
    {"T_acq", "acquisition window in seconds"},
    {"sigma", "jitter used for the rms time error criterion"},
    {"trim", "LTS trim fraction"},
    {"fft_samples", "coarse FFT size"},
    {"max_fft_samples", "largest coarse FFT size for sparse windows"},
    {"delta_threshold", "distinguishability threshold"},
    {"eta_hint", "expected detection probability for the rising edge (0 = eta)"},
    {"window_slots", "rising-edge window in slots (0 = 10/eta)"},
    {"drift_guard", "shorten windows when drift exceeds the bound (0/1)"},
    {"max_windows", "process at most this many windows (0 = all)"},
    {"timestamps", "detection CSV to process instead of simulating"},
    {"alice", "Alice's string file for CSV input"},
    {"truth", "truth sidecar for CSV input"},
};

struct ConfigArgs {
    std::string file;
    std::uint64_t seed = 1;
    std::map<std::string, std::string> values;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.file, "key=value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "channel seed")->capture_default_str();
    for (const auto& [key, help] : kConfigKeys) cmd->add_option("--" + key, args.values[key], help);
}

ConfigPtr build_config(const ConfigArgs& args, const CLI::App* cmd) {
    q4s_config* raw = nullptr;
    check(q4s_config_new(&raw));
    ConfigPtr cfg(raw);
    if (!args.file.empty()) check(q4s_config_load(cfg.get(), args.file.c_str()));
    if (cmd->count("--seed") || args.file.empty()) {
        check(q4s_config_set(cfg.get(), "seed", std::to_string(args.seed).c_str()));
    }
    for (const auto& [key, value] : args.values) {
        if (cmd->count("--" + key)) check(q4s_config_set(cfg.get(), key.c_str(), value.c_str()));
    }
    return cfg;
}

// Writes to the file when a path is given, otherwise to stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) {
                std::cerr << "error: cannot write " << path << '\n';
                throw CliError{Q4S_IO};
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::string real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clock synchronization from sparse detection timestamps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", q4s_version());

    // gen-string
    std::uint64_t g_L = 1'000'000;
    std::uint64_t g_N1 = 10;
    double g_lambda = 1.0;
    std::uint64_t g_seed = 1;
    std::string g_out;
    bool g_binary = false;
    bool g_check = false;
    auto* gen = app.add_subcommand("gen-string", "generate a synchronization string");
    gen->add_option("--L", g_L, "string length")->capture_default_str();
    gen->add_option("--N1", g_N1, "number of blocks, must divide L")->capture_default_str();
    gen->add_option("--lambda", g_lambda, "bias parameter")->capture_default_str();
    gen->add_option("--seed", g_seed, "generator seed")->capture_default_str();
    gen->add_option("--out", g_out, "output file")->required();
    gen->add_flag("--binary", g_binary, "write the packed binary variant");
    gen->add_flag("--check", g_check, "print the autocorrelation shape check");

    // simulate
    ConfigArgs s_args;
    std::string s_out;
    std::string s_truth;
    std::string s_alice;
    auto* sim = app.add_subcommand("simulate", "simulate detections for a configured channel");
    add_config_options(sim, s_args);
    sim->add_option("--out", s_out, "detection CSV (t_seconds,outcome)")->required();
    sim->add_option("--truth-out", s_truth, "truth sidecar CSV");
    sim->add_option("--alice-out", s_alice, "write Alice's synchronization string here");

    // period
    std::string p_in;
    std::string p_out;
    double p_tau = 20e-9;
    double p_tacq = 1.0;
    double p_sigma = 100e-12;
    double p_trim = 0.3;
    std::uint64_t p_samples = 1'000'000;
    std::uint64_t p_seed = 1;
    auto* period = app.add_subcommand("period", "recover the receiver period per acquisition window");
    period->add_option("--in", p_in, "detection CSV")->required()->check(CLI::ExistingFile);
    period->add_option("--tauA", p_tau, "nominal transmitter period")->capture_default_str();
    period->add_option("--Tacq", p_tacq, "acquisition window in seconds")->capture_default_str();
    period->add_option("--sigma", p_sigma, "detector jitter")->capture_default_str();
    period->add_option("--trim", p_trim, "LTS trim fraction")->capture_default_str();
    period->add_option("--fft-samples", p_samples, "coarse FFT size")->capture_default_str();
    period->add_option("--seed", p_seed, "accepted for uniformity; period recovery is deterministic");
    period->add_option("--out", p_out, "CSV output (default stdout)");

    // xcorr
    std::string x_alice;
    std::string x_bob;
    std::string x_out;
    std::uint64_t x_n1 = 0;
    double x_threshold = 10.0;
    std::uint64_t x_seed = 1;
    auto* xcorr = app.add_subcommand("xcorr", "find the offset of Bob's ternary string against Alice's");
    xcorr->add_option("--alice", x_alice, "Alice's string file")->required()->check(CLI::ExistingFile);
    xcorr->add_option("--bob", x_bob, "CSV of ternary symbols")->required()->check(CLI::ExistingFile);
    xcorr->add_option("--N1", x_n1, "block count (default: from Alice's file)");
    xcorr->add_option("--threshold", x_threshold, "distinguishability threshold")->capture_default_str();
    xcorr->add_option("--seed", x_seed, "accepted for uniformity; the search is deterministic");
    xcorr->add_option("--out", x_out, "CSV output (default stdout)");

    // sync
    ConfigArgs y_args;
    std::string y_out;
    std::string y_indices;
    auto* sync = app.add_subcommand("sync", "run period and offset recovery end to end");
    add_config_options(sync, y_args);
    sync->add_option("--out", y_out, "per-window CSV");
    sync->add_option("--indices", y_indices, "CSV of t_seconds,alice_index per detection");

    // sweep
    ConfigArgs w_args;
    std::vector<double> w_qbers{0.01, 0.05, 0.1, 0.2, 0.3, 0.35, 0.45};
    std::vector<double> w_bits{10, 30, 100, 300, 1000, 3000, 10000};
    unsigned w_reps = 10;
    double w_background = 200.0;
    unsigned w_threads = 0;
    std::string w_out;
    auto* sweep = app.add_subcommand("sweep", "success fraction over a grid of QBER and sifted bits");
    add_config_options(sweep, w_args);
    sweep->add_option("--qbers", w_qbers, "QBER values")->delimiter(',')->capture_default_str();
    sweep->add_option("--bits", w_bits, "sifted synchronization bits (L * eta)")->delimiter(',')->capture_default_str();
    sweep->add_option("--reps", w_reps, "repetitions per cell")->capture_default_str();
    sweep->add_option("--background", w_background, "background rate in Hz")->capture_default_str();
    sweep->add_option("--threads", w_threads, "worker threads (0 = all cores)")->capture_default_str();
    sweep->add_option("--out", w_out, "CSV output (default stdout)");

    // bench
    std::vector<std::uint64_t> b_lengths{1u << 16, 1u << 18, 1u << 20};
    std::uint64_t b_n1 = 0;
    std::uint64_t b_seed = 1;
    std::string b_out;
    auto* bench = app.add_subcommand("bench", "operation counts of the fast search against the FFT baseline");
    bench->add_option("--L", b_lengths, "string lengths")->delimiter(',')->capture_default_str();
    bench->add_option("--N1", b_n1, "block count (0 = divisor of L closest to log2 L)")->capture_default_str();
    bench->add_option("--seed", b_seed, "instance seed")->capture_default_str();
    bench->add_option("--out", b_out, "CSV output (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            q4s_string* s = nullptr;
            check(q4s_string_generate(g_L, g_N1, g_lambda, g_seed, &s));
            std::unique_ptr<q4s_string, decltype(&q4s_string_free)> guard(s, &q4s_string_free);
            check(q4s_string_save(s, g_out.c_str(), g_binary ? 1 : 0));
            if (g_check) {
                q4s_shape sh{};
                check(q4s_string_shape(s, 0.0, 0.0, &sh));
                std::cout << "lag0,measured_c0,worst_peak_deviation,worst_offpeak,offpeak_violations,pass\n"
                          << real(sh.lag0) << ',' << real(sh.measured_c0) << ',' << real(sh.worst_peak_deviation) << ','
                          << real(sh.worst_offpeak) << ',' << sh.offpeak_violations << ','
                          << (sh.lag0_ok && sh.peaks_ok && sh.offpeak_ok) << '\n';
            }
            return kExitOk;
        }
        if (sim->parsed()) {
            const ConfigPtr cfg = build_config(s_args, sim);
            std::uint64_t n = 0;
            check(q4s_simulate(cfg.get(), s_out.c_str(), s_truth.empty() ? nullptr : s_truth.c_str(),
                               s_alice.empty() ? nullptr : s_alice.c_str(), &n));
            std::cerr << "detections=" << n << '\n';
            return kExitOk;
        }
        if (period->parsed()) {
            q4s_periods* p = nullptr;
            check(q4s_recover_periods(p_in.c_str(), p_tau, p_tacq, p_sigma, p_trim, p_samples, &p));
            std::unique_ptr<q4s_periods, decltype(&q4s_periods_free)> guard(p, &q4s_periods_free);
            Output out(p_out);
            auto& os = out.stream();
            os << "window,start,length,tau_B,tau_guess,slope,phase,rms_tie,rms_tie_coarse,detections,collisions,ok,"
                  "status\n";
            bool all_ok = true;
            for (std::size_t i = 0; i < q4s_periods_count(p); ++i) {
                q4s_period r{};
                check(q4s_periods_get(p, i, &r));
                all_ok = all_ok && r.ok;
                os << i + 1 << ',' << real(r.window_start) << ',' << real(r.window_length) << ',' << real(r.tau_B)
                   << ',' << real(r.tau_guess) << ',' << real(r.slope) << ',' << real(r.phase) << ','
                   << real(r.rms_tie) << ',' << real(r.rms_tie_coarse) << ',' << r.detections << ',' << r.collisions
                   << ',' << r.ok << ',' << q4s_status_name(r.status) << '\n';
            }
            return all_ok ? kExitOk : kExitError;
        }
        if (xcorr->parsed()) {
            q4s_string* a = nullptr;
            check(q4s_string_load(x_alice.c_str(), &a));
            std::unique_ptr<q4s_string, decltype(&q4s_string_free)> guard(a, &q4s_string_free);
            std::size_t len = 0;
            check(q4s_read_ternary(x_bob.c_str(), nullptr, 0, &len));
            std::vector<std::int8_t> bob(len);
            check(q4s_read_ternary(x_bob.c_str(), bob.data(), bob.size(), &len));
            q4s_offset r{};
            check(q4s_find_offset(a, x_n1, bob.data(), bob.size(), x_threshold, &r));
            Output out(x_out);
            out.stream() << "m_opt,u_opt,j_opt,peak,delta,success\n"
                         << r.m_opt << ',' << r.u_opt << ',' << r.j_opt << ',' << real(r.peak) << ',' << real(r.delta)
                         << ',' << (r.success ? "true" : "false") << '\n';
            return kExitOk;
        }
        if (sync->parsed()) {
            ConfigPtr cfg = build_config(y_args, sync);
            if (!y_indices.empty()) check(q4s_config_set(cfg.get(), "keep_indices", "1"));
            q4s_report* r = nullptr;
            check(q4s_run_sync(cfg.get(), &r));
            std::unique_ptr<q4s_report, decltype(&q4s_report_free)> guard(r, &q4s_report_free);
            std::cout << q4s_report_summary(r);
            if (!y_out.empty()) check(q4s_report_write_csv(r, y_out.c_str()));
            if (!y_indices.empty()) check(q4s_report_write_indices(r, y_indices.c_str()));
            return q4s_report_synchronized(r) ? kExitOk : kExitSyncFailed;
        }
        if (sweep->parsed()) {
            const ConfigPtr cfg = build_config(w_args, sweep);
            // Sweeps default to short runs: one window covering the string.
            if (w_args.file.empty()) {
                if (!sweep->count("--duration")) check(q4s_config_set(cfg.get(), "duration", "0.1"));
                if (!sweep->count("--T_acq")) check(q4s_config_set(cfg.get(), "T_acq", "0.1"));
            }
            std::vector<q4s_sweep_cell> cells(w_qbers.size() * w_bits.size());
            check(q4s_run_sweep(cfg.get(), w_qbers.data(), w_qbers.size(), w_bits.data(), w_bits.size(), w_reps,
                                w_background, w_threads, nullptr, cells.data()));
            Output out(w_out);
            out.stream() << "qber,bits,success_fraction\n";
            for (const auto& c : cells) {
                out.stream() << real(c.qber) << ',' << real(c.bits) << ',' << real(c.success_fraction) << '\n';
            }
            return kExitOk;
        }
        if (bench->parsed()) {
            std::vector<q4s_bench_row> rows(b_lengths.size());
            check(q4s_run_bench(b_lengths.data(), b_lengths.size(), b_n1, b_seed, nullptr, rows.data()));
            Output out(b_out);
            out.stream() << "L,N1,stage1_ops,stage2_ops,baseline_ops,wall_ns,baseline_wall_ns\n";
            for (const auto& r : rows) {
                out.stream() << r.L << ',' << r.N1 << ',' << r.stage1_ops << ',' << r.stage2_ops << ','
                             << r.baseline_ops << ',' << r.wall_ns << ',' << r.baseline_wall_ns << '\n';
            }
            return kExitOk;
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << q4s_status_name(e.status);
        if (*q4s_last_error()) std::cerr << ": " << q4s_last_error();
        std::cerr << '\n';
        return kExitError;
    }
    return kExitError;
}
