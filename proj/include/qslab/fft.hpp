#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace qslab::fft {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 transform; a.size() must be a power of two.
inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

// Forward transform of a real sequence, keeping only bins 0..N/2 (the rest
// follow from Hermitian symmetry). `time` is zero-padded to length n.
inline std::vector<std::complex<double>> forward_half(const std::vector<double>& time,
                                                      std::size_t n) {
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < time.size(); ++i) buf[i] = time[i];
    transform(buf, false);
    buf.resize(n / 2 + 1);
    return buf;
}

// Inverse of forward_half: reconstruct the full spectrum from the half and
// return the real time-domain sequence of length n.
inline std::vector<double> inverse_half(const std::vector<std::complex<double>>& half,
                                        std::size_t n) {
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < half.size(); ++i) buf[i] = half[i];
    for (std::size_t i = n / 2 + 1; i < n; ++i) buf[i] = std::conj(half[n - i]);
    transform(buf, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
    return out;
}

// Linear convolution of two real sequences.
inline std::vector<double> convolve_real(const std::vector<double>& a,
                                         const std::vector<double>& b) {
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out_len);
    auto fa = forward_half(a, n);
    const auto fb = forward_half(b, n);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
    auto full = inverse_half(fa, n);
    full.resize(out_len);
    return full;
}

}  // namespace qslab::fft
