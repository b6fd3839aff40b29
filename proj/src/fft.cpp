#include "q4s/fft.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace q4s::fft {

OpCounts& counters() noexcept {
    thread_local OpCounts c;
    return c;
}

namespace {

std::vector<cplx>& scratch_buffer(std::size_t n) {
    thread_local std::vector<cplx> buf;
    if (buf.size() < n) buf.resize(n);
    return buf;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

} // namespace

// Chirp-z evaluation of a length-n DFT through a power-of-two convolution.
struct Plan::Bluestein {
    explicit Bluestein(std::size_t n)
        : n(n), m(next_pow2(2 * n - 1)), inner(m), chirp(n), kernel_spectrum(m) {
        const std::size_t two_n = 2 * n;
        for (std::size_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the phase argument small for large k.
            const auto k2 = static_cast<std::size_t>((static_cast<std::uint64_t>(k) * k) % two_n);
            chirp[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
        }
        std::vector<cplx> kernel(m, cplx{});
        kernel[0] = std::conj(chirp[0]);
        for (std::size_t k = 1; k < n; ++k) {
            kernel[k] = std::conj(chirp[k]);
            kernel[m - k] = std::conj(chirp[k]);
        }
        // Kernel spectrum is plan setup, not transform work.
        const OpCounts saved = counters();
        inner.forward(kernel, kernel_spectrum);
        counters() = saved;
    }

    void apply(std::span<const cplx> in, std::span<cplx> out) const {
        std::vector<cplx> a(m, cplx{});
        for (std::size_t k = 0; k < n; ++k) a[k] = in[k] * chirp[k];
        inner.forward_inplace(a);
        for (std::size_t k = 0; k < m; ++k) a[k] *= kernel_spectrum[k];
        inner.inverse_inplace(a);
        const double scale = 1.0 / static_cast<double>(m);
        for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * chirp[k] * scale;
        count_mul_adds(2 * n + m + n);
    }

    std::size_t n;
    std::size_t m;
    Plan inner;
    std::vector<cplx> chirp;
    std::vector<cplx> kernel_spectrum;
};

Plan::Plan(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("fft: zero length");
    std::size_t rest = n;
    std::vector<std::size_t> radices;
    while (rest % 4 == 0) { radices.push_back(4); rest /= 4; }
    while (rest % 2 == 0) { radices.push_back(2); rest /= 2; }
    for (std::size_t p = 3; p * p <= rest; p += 2) {
        while (rest % p == 0) { radices.push_back(p); rest /= p; }
    }
    if (rest > 1) radices.push_back(rest);

    bool direct = true;
    for (std::size_t p : radices) direct = direct && p <= kMaxDirectRadix;
    if (!direct) {
        bluestein_ = std::make_unique<Bluestein>(n);
        return;
    }
    std::size_t m = n;
    for (std::size_t p : radices) {
        m /= p;
        factors_.push_back(p);
        factors_.push_back(m);
    }
    twiddles_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        twiddles_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
}

Plan::~Plan() = default;
Plan::Plan(Plan&&) noexcept = default;
Plan& Plan::operator=(Plan&&) noexcept = default;

void Plan::run(cplx* out, const cplx* in, std::size_t fstride, const std::size_t* factors) const {
    const std::size_t p = factors[0];
    const std::size_t m = factors[1];
    cplx* const beg = out;
    cplx* const end = out + p * m;
    if (m == 1) {
        do {
            *out = *in;
            in += fstride;
        } while (++out != end);
    } else {
        do {
            run(out, in, fstride * p, factors + 2);
            in += fstride;
            out += m;
        } while (out != end);
    }
    out = beg;

    const cplx* tw = twiddles_.data();
    OpCounts& oc = counters();
    oc.butterflies += m;
    switch (p) {
    case 2: {
        for (std::size_t k = 0; k < m; ++k) {
            const cplx t = out[k + m] * tw[k * fstride];
            out[k + m] = out[k] - t;
            out[k] += t;
        }
        oc.mul_adds += 3 * m;
        break;
    }
    case 3: {
        const double epi3 = tw[fstride * m].imag();
        for (std::size_t k = 0; k < m; ++k) {
            const cplx s1 = out[k + m] * tw[k * fstride];
            const cplx s2 = out[k + 2 * m] * tw[2 * k * fstride];
            const cplx s3 = s1 + s2;
            cplx s0 = s1 - s2;
            const cplx mid = out[k] - s3 * 0.5;
            s0 *= epi3;
            out[k] += s3;
            out[k + 2 * m] = {mid.real() + s0.imag(), mid.imag() - s0.real()};
            out[k + m] = {mid.real() - s0.imag(), mid.imag() + s0.real()};
        }
        oc.mul_adds += 10 * m;
        break;
    }
    case 4: {
        for (std::size_t k = 0; k < m; ++k) {
            const cplx s0 = out[k + m] * tw[k * fstride];
            const cplx s1 = out[k + 2 * m] * tw[2 * k * fstride];
            const cplx s2 = out[k + 3 * m] * tw[3 * k * fstride];
            const cplx s5 = out[k] - s1;
            out[k] += s1;
            const cplx s3 = s0 + s2;
            const cplx s4 = s0 - s2;
            out[k + 2 * m] = out[k] - s3;
            out[k] += s3;
            out[k + m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
            out[k + 3 * m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
        }
        oc.mul_adds += 11 * m;
        break;
    }
    default: {
        std::array<cplx, kMaxDirectRadix> scratch{};
        for (std::size_t u = 0; u < m; ++u) {
            for (std::size_t q = 0; q < p; ++q) scratch[q] = out[u + q * m];
            std::size_t k = u;
            for (std::size_t q1 = 0; q1 < p; ++q1) {
                std::size_t twidx = 0;
                cplx acc = scratch[0];
                for (std::size_t q = 1; q < p; ++q) {
                    twidx += fstride * k;
                    if (twidx >= n_) twidx -= n_;
                    acc += scratch[q] * tw[twidx];
                }
                out[k] = acc;
                k += m;
            }
        }
        oc.mul_adds += 2 * p * (p - 1) * m;
        break;
    }
    }
}

void Plan::forward(std::span<const cplx> in, std::span<cplx> out) const {
    if (in.size() != n_ || out.size() != n_) throw std::invalid_argument("fft: size mismatch");
    if (bluestein_) {
        bluestein_->apply(in, out);
    } else if (n_ == 1) {
        out[0] = in[0];
    } else {
        run(out.data(), in.data(), 1, factors_.data());
    }
}

void Plan::inverse(std::span<const cplx> in, std::span<cplx> out) const {
    if (in.size() != n_ || out.size() != n_) throw std::invalid_argument("fft: size mismatch");
    std::vector<cplx> tmp(in.begin(), in.end());
    for (auto& v : tmp) v = std::conj(v);
    forward(tmp, out);
    for (auto& v : out) v = std::conj(v);
}

void Plan::forward_inplace(std::span<cplx> data) const {
    if (data.size() != n_) throw std::invalid_argument("fft: size mismatch");
    if (n_ == 1) return;
    if (bluestein_) {
        bluestein_->apply(data, data);
        return;
    }
    std::vector<cplx>& tmp = scratch_buffer(n_);
    std::copy(data.begin(), data.end(), tmp.begin());
    run(data.data(), tmp.data(), 1, factors_.data());
}

void Plan::inverse_inplace(std::span<cplx> data) const {
    for (auto& v : data) v = std::conj(v);
    forward_inplace(data);
    for (auto& v : data) v = std::conj(v);
}

const Plan& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::unique_ptr<Plan>> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<Plan>(n)).first;
    return *it->second;
}

std::vector<cplx> real_forward(std::span<const double> in) {
    const std::size_t n = in.size();
    if (n == 0) throw std::invalid_argument("fft: zero length");
    if (n % 2 != 0) {
        std::vector<cplx> full(in.begin(), in.end());
        plan_for(n).forward_inplace(full);
        full.resize(n / 2 + 1);
        return full;
    }
    const std::size_t h = n / 2;
    std::vector<cplx> z(h);
    for (std::size_t k = 0; k < h; ++k) z[k] = {in[2 * k], in[2 * k + 1]};
    plan_for(h).forward_inplace(z);

    std::vector<cplx> out(h + 1);
    const cplx minus_half_i{0.0, -0.5};
    for (std::size_t k = 0; k <= h; ++k) {
        const cplx zk = z[k % h];
        const cplx zc = std::conj(z[(h - k) % h]);
        const cplx even = (zk + zc) * 0.5;
        const cplx odd = (zk - zc) * minus_half_i;
        const cplx w = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
        out[k] = even + w * odd;
    }
    count_mul_adds(6 * (h + 1));
    return out;
}

std::vector<double> cyclic_xcorr(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cyclic_xcorr: length mismatch");
    const std::size_t n = a.size();
    const Plan& plan = plan_for(n);
    std::vector<cplx> fa(a.begin(), a.end());
    std::vector<cplx> fb(b.begin(), b.end());
    plan.forward_inplace(fa);
    plan.forward_inplace(fb);
    for (std::size_t k = 0; k < n; ++k) fa[k] *= std::conj(fb[k]);
    count_mul_adds(n);
    plan.inverse_inplace(fa);
    std::vector<double> out(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = fa[k].real() * scale;
    return out;
}

} // namespace q4s::fft
