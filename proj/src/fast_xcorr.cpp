#include "q4s/fast_xcorr.hpp"

#include "q4s/error.hpp"
#include "q4s/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace q4s {

namespace {

cplx unit_root(std::size_t j, std::size_t n1, double sign) {
    return std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n1));
}

std::size_t argmax_first(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

void check_ternary(std::span<const double> sb) {
    bool any = false;
    for (double v : sb) {
        if (v != 0.0 && v != 1.0 && v != -1.0) {
            throw Error(Errc::InvalidArgument, "find_offset: receiver string entries must be -1, 0 or +1");
        }
        any = any || v != 0.0;
    }
    if (!any) throw Error(Errc::DegenerateInput, "find_offset: receiver string has no detections");
}

// (peak - mean) / stdev over column 0, leaving out the peak bin and its two
// cyclic neighbours.
double distinguishability(std::span<const double> col, std::size_t peak) {
    const std::size_t n = col.size();
    const std::size_t prev = (peak + n - 1) % n;
    const std::size_t next = (peak + 1) % n;
    double sum = 0.0;
    double sum2 = 0.0;
    std::size_t count = 0;
    for (std::size_t u = 0; u < n; ++u) {
        if (u == peak || u == prev || u == next) continue;
        sum += col[u];
        sum2 += col[u] * col[u];
        ++count;
    }
    if (count < 2) return std::numeric_limits<double>::infinity();
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum2 / static_cast<double>(count) - mean * mean);
    const double sd = std::sqrt(var);
    if (sd == 0.0) {
        return col[peak] > mean ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return (col[peak] - mean) / sd;
}

} // namespace

InterleavedSpectrum::InterleavedSpectrum(std::size_t rows, std::size_t cols, std::size_t source_length)
    : rows_(rows), cols_(cols), source_length_(source_length), coeffs_(rows * cols) {}

cplx InterleavedSpectrum::extended(std::size_t r, std::size_t j) const {
    const std::size_t wraps = r / rows_;
    const cplx base = at(r % rows_, j);
    if (wraps == 0) return base;
    return base * unit_root((j * wraps) % cols_, cols_, +1.0);
}

std::vector<double> InterleavedSpectrum::column_real(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t r = 0; r < rows_; ++r) c[r] = at(r, j).real();
    return c;
}

InterleavedSpectrum interleaved_dft(std::span<const double> s, std::size_t n1) {
    if (n1 == 0 || s.empty() || s.size() % n1 != 0) {
        throw Error(Errc::LengthNotDivisible,
                    "interleaved_dft: length " + std::to_string(s.size()) + " not divisible by N1 = " +
                        std::to_string(n1));
    }
    const std::size_t l1 = s.size() / n1;
    InterleavedSpectrum out(l1, n1, s.size());
    const fft::Plan& plan = fft::plan_for(n1);
    for (std::size_t r = 0; r < l1; ++r) {
        auto row = out.row(r);
        for (std::size_t k = 0; k < n1; ++k) row[k] = s[r + k * l1];
        plan.forward_inplace(row);
    }
    return out;
}

std::vector<double> block_xcorr_column0(const InterleavedSpectrum& sa, const InterleavedSpectrum& sb) {
    if (sa.rows() != sb.rows() || sa.cols() != sb.cols()) {
        throw Error(Errc::DimensionMismatch, "block_xcorr: spectra differ in shape");
    }
    std::vector<double> col = fft::cyclic_xcorr(sa.column_real(0), sb.column_real(0));
    const double scale = 1.0 / (static_cast<double>(sa.source_length()) * static_cast<double>(sa.cols()));
    for (auto& v : col) v *= scale;
    return col;
}

cplx block_xcorr_entry(const InterleavedSpectrum& sa, const InterleavedSpectrum& sb, std::size_t u,
                       std::size_t j) {
    if (sa.rows() != sb.rows() || sa.cols() != sb.cols()) {
        throw Error(Errc::DimensionMismatch, "block_xcorr: spectra differ in shape");
    }
    const std::size_t l1 = sa.rows();
    if (u >= l1 || j >= sa.cols()) throw Error(Errc::InvalidArgument, "block_xcorr: index out of range");
    cplx head{};
    cplx tail{};
    for (std::size_t r = 0; r + u < l1; ++r) head += std::conj(sa.at(r + u, j)) * sb.at(r, j);
    for (std::size_t r = l1 - u; r < l1; ++r) tail += std::conj(sa.at(r + u - l1, j)) * sb.at(r, j);
    fft::count_mul_adds(2 * l1 + 2);
    const cplx sum = head + tail * unit_root(j, sa.cols(), -1.0);
    return sum / (static_cast<double>(sa.source_length()) * static_cast<double>(sa.cols()));
}

std::vector<cplx> lemma1_reconstruct_complex(std::span<const cplx> x_row) {
    std::vector<cplx> out(x_row.begin(), x_row.end());
    if (!out.empty()) fft::plan_for(out.size()).forward_inplace(out);
    return out;
}

std::vector<double> lemma1_reconstruct(std::span<const cplx> x_row) {
    const std::vector<cplx> c = lemma1_reconstruct_complex(x_row);
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
}

std::vector<cplx> lemma1_inverse(std::span<const cplx> x_values) {
    std::vector<cplx> out(x_values.begin(), x_values.end());
    if (out.empty()) return out;
    fft::plan_for(out.size()).inverse_inplace(out);
    const double inv = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= inv;
    return out;
}

AliceReference::AliceReference(const SyncString& s, std::size_t n1) : AliceReference(s.symbols, n1) {}

AliceReference::AliceReference(std::span<const std::int8_t> symbols, std::size_t n1)
    : symbols_(symbols.begin(), symbols.end()) {
    const std::vector<double> real(symbols.begin(), symbols.end());
    spectrum_ = interleaved_dft(real, n1);
    const std::vector<double> c0 = spectrum_.column_real(0);
    column0_fft_.assign(c0.begin(), c0.end());
    fft::plan_for(column0_fft_.size()).forward_inplace(column0_fft_);
}

OffsetResult find_offset(const AliceReference& ref, std::span<const double> sb, double delta_threshold,
                         StageOps* ops) {
    if (sb.size() != ref.length()) {
        throw Error(Errc::LengthMismatch, "find_offset: receiver string has length " + std::to_string(sb.size()) +
                                              ", expected " + std::to_string(ref.length()));
    }
    check_ternary(sb);

    const std::size_t n1 = ref.n1();
    const std::size_t l1 = ref.l1();
    const fft::OpCounts t0 = fft::counters();

    // Stage 1: interleaved mean X_{u,0} over all u.
    const InterleavedSpectrum spec_b = interleaved_dft(sb, n1);
    std::vector<cplx> col_b(l1);
    for (std::size_t r = 0; r < l1; ++r) col_b[r] = spec_b.at(r, 0).real();
    const fft::Plan& plan_l1 = fft::plan_for(l1);
    plan_l1.forward_inplace(col_b);
    const auto fa = ref.column0_fft();
    for (std::size_t k = 0; k < l1; ++k) col_b[k] = fa[k] * std::conj(col_b[k]);
    fft::count_mul_adds(l1);
    plan_l1.inverse_inplace(col_b);
    const double scale0 = 1.0 / (static_cast<double>(l1) * static_cast<double>(ref.length()) *
                                 static_cast<double>(n1));
    std::vector<double> column0(l1);
    for (std::size_t u = 0; u < l1; ++u) column0[u] = col_b[u].real() * scale0;
    const std::size_t u_opt = argmax_first(column0);

    const fft::OpCounts t1 = fft::counters();

    // Stage 2: X_{u_opt,j} for j >= 1 by direct sums, then the N1-point DFT.
    const InterleavedSpectrum& spec_a = ref.spectrum();
    std::vector<cplx> head(n1, cplx{});
    std::vector<cplx> tail(n1, cplx{});
    for (std::size_t r = 0; r < l1; ++r) {
        const std::size_t ra = r + u_opt;
        const bool wrapped = ra >= l1;
        const auto arow = spec_a.row(wrapped ? ra - l1 : ra);
        const auto brow = spec_b.row(r);
        auto& acc = wrapped ? tail : head;
        for (std::size_t j = 1; j < n1; ++j) acc[j] += std::conj(arow[j]) * brow[j];
    }
    fft::count_mul_adds(2 * (n1 - 1) * l1);
    std::vector<cplx> x_row(n1);
    const double scale = 1.0 / (static_cast<double>(ref.length()) * static_cast<double>(n1));
    x_row[0] = column0[u_opt];
    for (std::size_t j = 1; j < n1; ++j) {
        x_row[j] = (head[j] + tail[j] * unit_root(j, n1, -1.0)) * scale;
    }
    fft::count_mul_adds(3 * (n1 - 1));
    const std::vector<double> x_vals = lemma1_reconstruct(x_row);
    const std::size_t j_opt = argmax_first(x_vals);

    const fft::OpCounts t2 = fft::counters();
    if (ops) {
        ops->stage1 = t1 - t0;
        ops->stage2 = t2 - t1;
    }

    OffsetResult res;
    res.u_opt = u_opt;
    res.j_opt = j_opt;
    res.m_opt = u_opt + j_opt * l1;
    res.peak_value = x_vals[j_opt];
    res.column0_peak = column0[u_opt];
    res.distinguishability = distinguishability(column0, u_opt);
    res.success = res.distinguishability >= delta_threshold;
    return res;
}

OffsetResult find_offset(const AliceReference& ref, std::span<const std::int8_t> sb, double delta_threshold,
                         StageOps* ops) {
    const std::vector<double> real(sb.begin(), sb.end());
    return find_offset(ref, real, delta_threshold, ops);
}

FullCorrelationReference::FullCorrelationReference(std::span<const std::int8_t> symbols)
    : spectrum_(symbols.begin(), symbols.end()) {
    fft::plan_for(spectrum_.size()).forward_inplace(spectrum_);
}

std::uint64_t FullCorrelationReference::argmax(std::span<const double> sb, std::vector<double>* correlation) const {
    const std::size_t n = spectrum_.size();
    if (sb.size() != n) throw Error(Errc::LengthMismatch, "baseline: receiver string length mismatch");
    std::vector<cplx> fb(sb.begin(), sb.end());
    const fft::Plan& plan = fft::plan_for(n);
    plan.forward_inplace(fb);
    for (std::size_t k = 0; k < n; ++k) fb[k] = spectrum_[k] * std::conj(fb[k]);
    fft::count_mul_adds(n);
    plan.inverse_inplace(fb);
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    std::vector<double> x(n);
    for (std::size_t m = 0; m < n; ++m) x[m] = fb[m].real() * scale;
    const std::uint64_t best = argmax_first(x);
    if (correlation) *correlation = std::move(x);
    return best;
}

ComplexityReport complexity_probe(std::uint64_t L, std::uint64_t N1, std::uint64_t seed) {
    if (N1 == 0 || L == 0 || L % N1 != 0) {
        throw Error(Errc::LengthNotDivisible, "complexity_probe: L must be a positive multiple of N1");
    }
    Rng rng(seed);
    std::vector<std::int8_t> alice;
    if (N1 >= 2 && L / N1 >= 2) {
        alice = generate_string({L, N1, L / N1, 1.0, seed}).symbols;
    } else {
        alice.resize(L);
        for (auto& s : alice) s = (rng.next() & 1) ? 1 : -1;
    }
    const std::uint64_t shift = rng.below(L);
    std::vector<double> bob(L, 0.0);
    for (std::uint64_t n = 0; n < L; ++n) {
        if (rng.bernoulli(0.5)) bob[n] = alice[(n + shift) % L];
    }

    const AliceReference ref(alice, N1);
    const FullCorrelationReference full(alice);

    ComplexityReport rep;
    rep.L = L;
    rep.N1 = N1;

    using clock = std::chrono::steady_clock;
    StageOps ops;
    auto start = clock::now();
    const OffsetResult fast = find_offset(ref, bob, kDefaultDeltaThreshold, &ops);
    rep.fast_wall_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - start).count());
    rep.stage1_ops = ops.stage1.mul_adds;
    rep.stage2_ops = ops.stage2.mul_adds;
    rep.stage1_butterflies = ops.stage1.butterflies;

    const fft::OpCounts b0 = fft::counters();
    start = clock::now();
    const std::uint64_t base_m = full.argmax(bob);
    rep.baseline_wall_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - start).count());
    const fft::OpCounts b1 = fft::counters() - b0;
    rep.baseline_ops = b1.mul_adds;
    rep.baseline_butterflies = b1.butterflies;
    rep.offsets_agree = (fast.m_opt == base_m);
    return rep;
}

} // namespace q4s
