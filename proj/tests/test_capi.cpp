// Exercises the shared library through its C header only.
#include "q4s/q4s.h"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("q4s_capi_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("status names and version") {
    CHECK(std::string(q4s_status_name(Q4S_OK)) == "OK");
    CHECK(std::string(q4s_status_name(Q4S_SYNC_FAILED)) == "SyncFailed");
    CHECK(std::string(q4s_version()) == "1.0.0");
}

TEST_CASE("string handles") {
    q4s_string* s = nullptr;
    REQUIRE(q4s_string_generate(1200, 6, 1.0, 42, &s) == Q4S_OK);
    CHECK(q4s_string_length(s) == 1200);
    CHECK(q4s_string_n1(s) == 6);
    const int8_t* sym = q4s_string_symbols(s);
    for (size_t i = 0; i < 1200; ++i) REQUIRE((sym[i] == 1 || sym[i] == -1));

    q4s_shape shape{};
    REQUIRE(q4s_string_shape(s, 0, 0, &shape) == Q4S_OK);
    CHECK(shape.lag0 == 1.0);
    CHECK(shape.lag0_ok);

    TempDir dir;
    const auto path = dir.file("s.txt");
    REQUIRE(q4s_string_save(s, path.c_str(), 1) == Q4S_OK);
    q4s_string* t = nullptr;
    REQUIRE(q4s_string_load(path.c_str(), &t) == Q4S_OK);
    CHECK(std::equal(sym, sym + 1200, q4s_string_symbols(t)));
    q4s_string_free(t);
    q4s_string_free(s);
    q4s_string_free(nullptr);

    q4s_string* bad = nullptr;
    CHECK(q4s_string_generate(1200, 7, 1.0, 1, &bad) == Q4S_INVALID_PARAMS);
    CHECK(bad == nullptr);
    CHECK(std::string(q4s_last_error()).size() > 0);
    CHECK(q4s_string_load(dir.file("missing").c_str(), &bad) == Q4S_IO);
    CHECK(q4s_string_generate(1200, 6, 1.0, 1, nullptr) == Q4S_INVALID_ARGUMENT);
}

TEST_CASE("offset search through the C API") {
    q4s_string* s = nullptr;
    REQUIRE(q4s_string_generate(12000, 10, 1.0, 9, &s) == Q4S_OK);
    const int8_t* a = q4s_string_symbols(s);
    std::vector<int8_t> b(12000, 0);
    for (size_t n = 0; n < 12000; n += 3) b[n] = a[(n + 4321) % 12000];
    q4s_offset off{};
    REQUIRE(q4s_find_offset(s, 0, b.data(), b.size(), 10.0, &off) == Q4S_OK);
    CHECK(off.m_opt == 4321);
    CHECK(off.success);

    CHECK(q4s_find_offset(s, 0, b.data(), b.size() - 1, 10.0, &off) == Q4S_LENGTH_MISMATCH);
    std::vector<int8_t> zeros(12000, 0);
    CHECK(q4s_find_offset(s, 0, zeros.data(), zeros.size(), 10.0, &off) == Q4S_DEGENERATE_INPUT);
    q4s_string_free(s);
}

TEST_CASE("configuration, simulation, periods and sync") {
    TempDir dir;
    q4s_config* cfg = nullptr;
    REQUIRE(q4s_config_new(&cfg) == Q4S_OK);
    CHECK(q4s_config_set(cfg, "eta", "1e-2") == Q4S_OK);
    CHECK(q4s_config_set(cfg, "L", "100000") == Q4S_OK);
    CHECK(q4s_config_set(cfg, "duration", "0.05") == Q4S_OK);
    CHECK(q4s_config_set(cfg, "T_acq", "0.05") == Q4S_OK);
    CHECK(q4s_config_set(cfg, "background_rate", "200") == Q4S_OK);
    CHECK(q4s_config_set(cfg, "keep_indices", "1") == Q4S_OK);
    CHECK(q4s_config_set(cfg, "bogus", "1") == Q4S_CONFIG_INVALID);
    CHECK(q4s_config_load(cfg, dir.file("none.cfg").c_str()) == Q4S_IO);

    const auto det = dir.file("d.csv");
    const auto truth = dir.file("t.csv");
    const auto alice = dir.file("a.txt");
    uint64_t n = 0;
    REQUIRE(q4s_simulate(cfg, det.c_str(), truth.c_str(), alice.c_str(), &n) == Q4S_OK);
    CHECK(n > 20000);

    q4s_periods* p = nullptr;
    REQUIRE(q4s_recover_periods(det.c_str(), 20e-9, 0.025, 100e-12, 0.3, 1000000, &p) == Q4S_OK);
    REQUIRE(q4s_periods_count(p) == 2);
    q4s_period row{};
    REQUIRE(q4s_periods_get(p, 0, &row) == Q4S_OK);
    CHECK(row.ok);
    CHECK(row.status == Q4S_OK);
    CHECK(std::abs(row.tau_B - 20e-9 * (1 + 5e-4)) < 1e-15);
    CHECK(q4s_periods_get(p, 2, &row) == Q4S_INVALID_ARGUMENT);
    q4s_periods_free(p);

    q4s_report* r = nullptr;
    REQUIRE(q4s_run_sync(cfg, &r) == Q4S_OK);
    CHECK(q4s_report_synchronized(r) == 1);
    CHECK(q4s_report_failure(r) == Q4S_OK);
    CHECK(q4s_report_offset_calls(r) == 1);
    CHECK(q4s_report_alignment_accuracy(r) == 1.0);
    CHECK(std::string(q4s_report_summary(r)).find("synchronized=true") != std::string::npos);
    CHECK(q4s_report_write_csv(r, dir.file("r.csv").c_str()) == Q4S_OK);
    CHECK(q4s_report_write_indices(r, dir.file("i.csv").c_str()) == Q4S_OK);
    CHECK(fs::file_size(dir.file("i.csv")) > 0);
    q4s_report_free(r);

    // File input path: the same detections, read back from disk.
    q4s_config* fcfg = nullptr;
    REQUIRE(q4s_config_new(&fcfg) == Q4S_OK);
    q4s_config_set(fcfg, "timestamps", det.c_str());
    q4s_config_set(fcfg, "alice", alice.c_str());
    q4s_config_set(fcfg, "truth", truth.c_str());
    q4s_config_set(fcfg, "eta_hint", "1e-2");
    q4s_config_set(fcfg, "T_acq", "0.05");
    REQUIRE(q4s_run_sync(fcfg, &r) == Q4S_OK);
    CHECK(q4s_report_synchronized(r) == 1);
    CHECK(q4s_report_alignment_accuracy(r) == 1.0);
    q4s_report_free(r);
    q4s_config_free(fcfg);

    // A channel too lossy to synchronize still returns a report.
    q4s_config_set(cfg, "eta", "1e-4");
    REQUIRE(q4s_run_sync(cfg, &r) == Q4S_OK);
    CHECK(q4s_report_synchronized(r) == 0);
    CHECK(q4s_report_failure(r) != Q4S_OK);
    q4s_report_free(r);
    q4s_config_free(cfg);
}

TEST_CASE("ternary reader two-call protocol") {
    TempDir dir;
    const auto p = dir.file("b.csv");
    {
        std::FILE* f = std::fopen(p.c_str(), "w");
        std::fputs("symbol\n1\n0\n-1\n", f);
        std::fclose(f);
    }
    size_t len = 0;
    REQUIRE(q4s_read_ternary(p.c_str(), nullptr, 0, &len) == Q4S_OK);
    CHECK(len == 3);
    std::vector<int8_t> buf(len);
    CHECK(q4s_read_ternary(p.c_str(), buf.data(), 2, &len) == Q4S_BUFFER_TOO_SMALL);
    REQUIRE(q4s_read_ternary(p.c_str(), buf.data(), buf.size(), &len) == Q4S_OK);
    CHECK(buf == std::vector<int8_t>{1, 0, -1});
}

TEST_CASE("sweep and bench through the C API") {
    q4s_config* cfg = nullptr;
    REQUIRE(q4s_config_new(&cfg) == Q4S_OK);
    q4s_config_set(cfg, "L", "100000");
    q4s_config_set(cfg, "duration", "0.01");
    q4s_config_set(cfg, "T_acq", "0.01");
    const double qbers[] = {0.02};
    const double bits[] = {2000};
    q4s_sweep_cell cell{};
    REQUIRE(q4s_run_sweep(cfg, qbers, 1, bits, 1, 2, 0.0, 1, nullptr, &cell) == Q4S_OK);
    CHECK(cell.success_fraction == 1.0);
    q4s_config_free(cfg);

    const uint64_t lengths[] = {1u << 12};
    q4s_bench_row row{};
    REQUIRE(q4s_run_bench(lengths, 1, 0, 1, nullptr, &row) == Q4S_OK);
    CHECK(row.N1 == 8);  // log2 = 12 sits between the divisors 8 and 16; the smaller wins
    CHECK(row.offsets_agree);
    CHECK(row.stage1_ops + row.stage2_ops < row.baseline_ops);
}
