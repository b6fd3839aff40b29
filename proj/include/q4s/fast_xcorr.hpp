#pragma once

// Two-stage maximum search of the cyclic cross-correlation
//
//     x_m = (1/L) sum_n sA[(n+m) mod L] * sB[n]
//
// for strings whose autocorrelation is periodic with period L1 = L / N1.
//
// Both strings are reshaped to L1 x N1 (row r, column k <- s[r + k*L1]) and a
// length-N1 DFT is taken along each row, giving the interleaved spectrum
// S_{r,j}. The block correlation
//
//     X_{u,j} = 1/(L*N1) * sum_r conj(SA_{r+u,j}) * SB_{r,j}
//
// (rows past L1 use S_{r+L1,j} = S_{r,j} * exp(2 pi i j / N1)) is tied to the
// full correlation by a length-N1 DFT:
//
//     x_{u+j*L1} = sum_k exp(-2 pi i j k / N1) * X_{u,k}
//
// and column 0 is the interleaved mean X_{u,0} = (1/N1) sum_j x_{u+j*L1}.
// Stage 1 picks u_opt = argmax_u X_{u,0} with one length-L1 FFT correlation;
// stage 2 evaluates X_{u_opt,j} for j >= 1 by direct sums and recovers the N1
// candidate values x_{u_opt + j*L1} through the relation above.

#include "q4s/fft.hpp"
#include "q4s/sync_string.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace q4s {

using cplx = std::complex<double>;

class InterleavedSpectrum {
public:
    InterleavedSpectrum() = default;
    InterleavedSpectrum(std::size_t rows, std::size_t cols, std::size_t source_length);

    std::size_t rows() const noexcept { return rows_; }  // L1
    std::size_t cols() const noexcept { return cols_; }  // N1
    std::size_t source_length() const noexcept { return source_length_; }

    cplx& at(std::size_t r, std::size_t j) { return coeffs_[r * cols_ + j]; }
    const cplx& at(std::size_t r, std::size_t j) const { return coeffs_[r * cols_ + j]; }

    /// S_{r,j} for any r >= 0 through the extension relation.
    cplx extended(std::size_t r, std::size_t j) const;

    std::span<const cplx> row(std::size_t r) const { return {coeffs_.data() + r * cols_, cols_}; }
    std::span<cplx> row(std::size_t r) { return {coeffs_.data() + r * cols_, cols_}; }

    /// Real parts of column j (column 0 is real for real input).
    std::vector<double> column_real(std::size_t j) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t source_length_ = 0;
    std::vector<cplx> coeffs_;
};

/// Row-wise length-N1 DFT of s reshaped to L1 x N1.
InterleavedSpectrum interleaved_dft(std::span<const double> s, std::size_t n1);

/// X_{u,0} for every u in [0, L1), via an FFT correlation of the real columns.
std::vector<double> block_xcorr_column0(const InterleavedSpectrum& sa, const InterleavedSpectrum& sb);

/// X_{u,j} at a single (u, j) by direct summation over r.
cplx block_xcorr_entry(const InterleavedSpectrum& sa, const InterleavedSpectrum& sb, std::size_t u,
                       std::size_t j);

/// x_{u+j*L1} = sum_k exp(-2 pi i j k / N1) X_{u,k}, complex-valued.
std::vector<cplx> lemma1_reconstruct_complex(std::span<const cplx> x_row);
/// Real part of lemma1_reconstruct_complex.
std::vector<double> lemma1_reconstruct(std::span<const cplx> x_row);
/// Inverse map: X_{u,k} = (1/N1) sum_j exp(+2 pi i j k / N1) x_{u+j*L1}.
std::vector<cplx> lemma1_inverse(std::span<const cplx> x_values);

struct OffsetResult {
    std::uint64_t u_opt = 0;
    std::uint64_t j_opt = 0;
    std::uint64_t m_opt = 0;
    double peak_value = 0.0;    // x_{m_opt}
    double column0_peak = 0.0;  // X_{u_opt,0}
    double distinguishability = 0.0;
    bool success = false;
};

/// Transmitter-side data for repeated searches: the string, its interleaved
/// spectrum and the spectrum of column 0. Immutable once built.
class AliceReference {
public:
    AliceReference(const SyncString& s, std::size_t n1);
    AliceReference(std::span<const std::int8_t> symbols, std::size_t n1);

    std::size_t length() const noexcept { return symbols_.size(); }
    std::size_t n1() const noexcept { return spectrum_.cols(); }
    std::size_t l1() const noexcept { return spectrum_.rows(); }
    const InterleavedSpectrum& spectrum() const noexcept { return spectrum_; }
    std::span<const std::int8_t> symbols() const noexcept { return symbols_; }
    std::span<const cplx> column0_fft() const noexcept { return column0_fft_; }

private:
    std::vector<std::int8_t> symbols_;
    InterleavedSpectrum spectrum_;
    std::vector<cplx> column0_fft_;
};

struct StageOps {
    fft::OpCounts stage1;
    fft::OpCounts stage2;
};

constexpr double kDefaultDeltaThreshold = 10.0;

/// Two-stage search. sB entries must be -1, 0 or +1 (0 = no sifted detection).
/// Throws LengthMismatch, InvalidArgument for other values and DegenerateInput
/// when sB has no non-zero entry. A sub-threshold result is returned with
/// success = false.
OffsetResult find_offset(const AliceReference& ref, std::span<const double> sb,
                         double delta_threshold = kDefaultDeltaThreshold, StageOps* ops = nullptr);
OffsetResult find_offset(const AliceReference& ref, std::span<const std::int8_t> sb,
                         double delta_threshold = kDefaultDeltaThreshold, StageOps* ops = nullptr);

/// Baseline: full-length FFT correlation against a precomputed spectrum of sA.
class FullCorrelationReference {
public:
    explicit FullCorrelationReference(std::span<const std::int8_t> symbols);
    std::size_t length() const noexcept { return spectrum_.size(); }

    /// argmax_m x_m (smallest m on ties) and the full correlation when wanted.
    std::uint64_t argmax(std::span<const double> sb, std::vector<double>* correlation = nullptr) const;

private:
    std::vector<cplx> spectrum_;
};

struct ComplexityReport {
    std::uint64_t L = 0;
    std::uint64_t N1 = 0;
    std::uint64_t stage1_ops = 0;
    std::uint64_t stage2_ops = 0;
    std::uint64_t stage1_butterflies = 0;
    std::uint64_t baseline_ops = 0;
    std::uint64_t baseline_butterflies = 0;
    std::uint64_t fast_wall_ns = 0;
    std::uint64_t baseline_wall_ns = 0;
    bool offsets_agree = false;

    std::uint64_t fast_ops() const noexcept { return stage1_ops + stage2_ops; }
};

/// Runs the fast search and the full-FFT baseline on one seeded random
/// instance of length L and reports instrumented operation counts.
ComplexityReport complexity_probe(std::uint64_t L, std::uint64_t N1, std::uint64_t seed = 1);

} // namespace q4s
