#pragma once

// Mixed-radix complex FFT with instrumented operation counters.
//
// Sizes factor into radix 4, 2, 3 and small odd primes; a size carrying a
// prime factor above kMaxDirectRadix goes through Bluestein's chirp-z
// transform on a power-of-two grid. All transforms are double precision.
//
// The thread-local counters record every butterfly kernel invocation and every
// complex multiplication or addition performed by the kernels. The offset
// search adds its own direct sums to the same counters so fast and baseline
// paths are measured in one unit.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace q4s::fft {

using cplx = std::complex<double>;

struct OpCounts {
    std::uint64_t butterflies = 0;
    /// Complex multiplications plus complex additions.
    std::uint64_t mul_adds = 0;

    OpCounts operator-(const OpCounts& o) const noexcept {
        return {butterflies - o.butterflies, mul_adds - o.mul_adds};
    }
};

/// Per-thread running totals. Never reset implicitly; take differences.
OpCounts& counters() noexcept;

inline void count_mul_adds(std::uint64_t n) noexcept { counters().mul_adds += n; }

class Plan {
public:
    static constexpr std::size_t kMaxDirectRadix = 31;

    explicit Plan(std::size_t n);
    ~Plan();
    Plan(Plan&&) noexcept;
    Plan& operator=(Plan&&) noexcept;
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    std::size_t size() const noexcept { return n_; }

    /// out[k] = sum_n in[n] exp(-2 pi i k n / N). `in` and `out` must not alias.
    void forward(std::span<const cplx> in, std::span<cplx> out) const;
    /// Unnormalized inverse: out[k] = sum_n in[n] exp(+2 pi i k n / N).
    void inverse(std::span<const cplx> in, std::span<cplx> out) const;

    void forward_inplace(std::span<cplx> data) const;
    void inverse_inplace(std::span<cplx> data) const;

private:
    struct Bluestein;

    void run(cplx* out, const cplx* in, std::size_t fstride, const std::size_t* factors) const;

    std::size_t n_;
    std::vector<std::size_t> factors_;  // (radix, remaining length) pairs
    std::vector<cplx> twiddles_;
    std::unique_ptr<Bluestein> bluestein_;
};

/// Thread-local plan cache.
const Plan& plan_for(std::size_t n);

/// Spectrum of a real sequence of even length N: bins 0..N/2 (inclusive),
/// computed with one complex transform of length N/2.
std::vector<cplx> real_forward(std::span<const double> in);

/// Cyclic cross-correlation c[m] = sum_n a[(n+m) mod N] * b[n] computed through
/// the convolution theorem. Not normalized.
std::vector<double> cyclic_xcorr(std::span<const double> a, std::span<const double> b);

} // namespace q4s::fft
