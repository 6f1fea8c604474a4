#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "../error.hpp"

namespace leakbench::signal {

/// One second-order section, transposed direct form II, a0 normalized to 1.
struct Biquad {
    std::array<double, 3> b{};
    std::array<double, 2> a{}; // a1, a2

    std::complex<double> response(std::complex<double> z) const {
        const auto zi = 1.0 / z;
        return (b[0] + b[1] * zi + b[2] * zi * zi) / (1.0 + a[0] * zi + a[1] * zi * zi);
    }
    double dc_gain() const { return (b[0] + b[1] + b[2]) / (1.0 + a[0] + a[1]); }
};

using Sos = std::vector<Biquad>;

/// Digital Butterworth band-pass of prototype order `order` (the resulting
/// filter has 2*order poles), as cascaded biquads with unit gain at the
/// geometric centre frequency.
inline Sos design_butterworth_bandpass(double fs, double low_hz, double high_hz, int order) {
    if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0))
        fail(ErrorKind::InvalidBand, "band-pass edges must satisfy 0 < low < high < fs/2");
    if (order < 1) fail(ErrorKind::InvalidBand, "filter order must be >= 1");
    using C = std::complex<double>;
    const double w1 = 2.0 * fs * std::tan(std::numbers::pi * low_hz / fs);
    const double w2 = 2.0 * fs * std::tan(std::numbers::pi * high_hz / fs);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;

    std::vector<C> z_poles;
    for (int k = 0; k < order; ++k) {
        const C proto = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
        const C half = proto * bw / 2.0;
        const C root = std::sqrt(half * half - w0 * w0);
        for (C s : {half + root, half - root}) z_poles.push_back((2.0 * fs + s) / (2.0 * fs - s));
    }

    // Conjugate pairs become one section each; leftover real poles are paired.
    Sos sos;
    std::vector<double> real_poles;
    for (const auto& p : z_poles) {
        if (std::abs(p.imag()) < 1e-12)
            real_poles.push_back(p.real());
        else if (p.imag() > 0.0)
            sos.push_back({{1.0, 0.0, -1.0}, {-2.0 * p.real(), std::norm(p)}});
    }
    std::sort(real_poles.begin(), real_poles.end());
    for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2)
        sos.push_back({{1.0, 0.0, -1.0}, {-(real_poles[i] + real_poles[i + 1]), real_poles[i] * real_poles[i + 1]}});

    const double centre = 2.0 * std::atan(w0 / (2.0 * fs));
    const C zc = std::polar(1.0, centre);
    C total(1.0, 0.0);
    for (const auto& s : sos) total *= s.response(zc);
    const double scale = 1.0 / std::abs(total);
    for (auto& coeff : sos.front().b) coeff *= scale;
    return sos;
}

inline double magnitude_response(const Sos& sos, double freq_hz, double fs) {
    const auto z = std::polar(1.0, 2.0 * std::numbers::pi * freq_hz / fs);
    std::complex<double> h(1.0, 0.0);
    for (const auto& s : sos) h *= s.response(z);
    return std::abs(h);
}

namespace detail {

/// Filters in place. When `initial` is set, every section starts in the
/// steady state it would reach for a constant input equal to initial.
inline void sos_filter(const Sos& sos, std::vector<double>& x, std::optional<double> initial) {
    double level = initial.value_or(0.0);
    for (const auto& s : sos) {
        double z1 = 0.0, z2 = 0.0;
        if (initial) {
            const double y = s.dc_gain() * level;
            z2 = s.b[2] * level - s.a[1] * y;
            z1 = y - s.b[0] * level;
            level = y;
        }
        for (auto& v : x) {
            const double in = v;
            const double out = s.b[0] * in + z1;
            z1 = s.b[1] * in - s.a[0] * out + z2;
            z2 = s.b[2] * in - s.a[1] * out;
            v = out;
        }
    }
}

} // namespace detail

/// Zero-phase forward-backward application of `sos`, with odd-reflection
/// padding at both ends and steady-state initial conditions.
inline std::vector<double> filtfilt(const Sos& sos, std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t padlen = std::min<std::size_t>(3 * (2 * sos.size() + 1), n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    detail::sos_filter(sos, ext, ext.front());
    std::reverse(ext.begin(), ext.end());
    detail::sos_filter(sos, ext, ext.front());
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(padlen), ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

inline std::vector<double> butterworth_bandpass(std::span<const double> x, double fs, double low_hz = 0.08,
                                                double high_hz = 4.0, int order = 4) {
    const auto sos = design_butterworth_bandpass(fs, low_hz, high_hz, order);
    if (x.size() <= static_cast<std::size_t>(3 * order))
        fail(ErrorKind::SignalTooShort, "band-pass input needs more than 3*order samples");
    return filtfilt(sos, x);
}

} // namespace leakbench::signal
