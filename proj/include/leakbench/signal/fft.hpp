#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace leakbench::signal {

using Complex = std::complex<double>;

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

/// In-place iterative radix-2 transform; n must be a power of two.
inline void fft_radix2(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const Complex step(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= step;
            }
        }
    }
    if (inverse)
        for (auto& v : a) v /= static_cast<double>(n);
}

} // namespace detail

/// Forward DFT of arbitrary length (Bluestein's chirp-z for non powers of two).
inline std::vector<Complex> fft(std::span<const Complex> input) {
    const std::size_t n = input.size();
    std::vector<Complex> out(input.begin(), input.end());
    if (n <= 1) return out;
    if (detail::is_power_of_two(n)) {
        detail::fft_radix2(out, false);
        return out;
    }
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    std::vector<Complex> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small for long inputs.
        const auto k2 = static_cast<double>((static_cast<unsigned long long>(k) * k) % (2 * n));
        const double angle = std::numbers::pi * k2 / static_cast<double>(n);
        chirp[k] = Complex(std::cos(angle), -std::sin(angle));
    }
    std::vector<Complex> a(m), b(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = input[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
    detail::fft_radix2(a, false);
    detail::fft_radix2(b, false);
    for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
    detail::fft_radix2(a, true);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * chirp[k];
    return out;
}

inline std::vector<Complex> fft(std::span<const double> input) {
    std::vector<Complex> c(input.begin(), input.end());
    return fft(std::span<const Complex>(c));
}

/// One-sided periodogram |X_k|^2 / N for k = 0..N/2 (bin k at k*fs/N Hz).
/// The mean is removed first.
inline std::vector<double> periodogram(std::span<const double> x) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    std::vector<Complex> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - mean;
    const auto spectrum = fft(std::span<const Complex>(c));
    std::vector<double> power(n / 2 + 1);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spectrum[k]) / static_cast<double>(n);
    return power;
}

} // namespace leakbench::signal
