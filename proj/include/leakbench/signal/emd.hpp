#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "../error.hpp"

namespace leakbench::signal {

struct ImfSet {
    std::vector<std::vector<double>> imfs;
    std::vector<double> residual;
};

struct EmdOptions {
    std::size_t max_imfs = 10;
    /// Cauchy-type stopping threshold on sum(m^2) / sum(h^2).
    double sift_sd_threshold = 0.25;
    std::size_t max_sifts = 100;
    /// Decomposition stops once the residual's range falls below this
    /// fraction of the input's range.
    double range_threshold = 1e-3;
};

namespace detail {

struct Extrema {
    std::vector<std::size_t> maxima;
    std::vector<std::size_t> minima;
};

/// Interior local extrema; a plateau counts once, at its first sample.
inline Extrema find_extrema(std::span<const double> x) {
    Extrema e;
    const std::size_t n = x.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (x[i] == x[i - 1]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && x[j + 1] == x[i]) ++j;
        if (j + 1 >= n) break;
        if (x[i] > x[i - 1] && x[i] > x[j + 1]) e.maxima.push_back(i);
        if (x[i] < x[i - 1] && x[i] < x[j + 1]) e.minima.push_back(i);
        i = j + 1;
    }
    return e;
}

inline std::size_t count_zero_crossings(std::span<const double> x) {
    std::size_t count = 0;
    int last_sign = 0;
    for (double v : x) {
        const int s = (v > 0.0) - (v < 0.0);
        if (s == 0) continue;
        if (last_sign != 0 && s != last_sign) ++count;
        last_sign = s;
    }
    return count;
}

/// Natural cubic spline through (t, y) evaluated at every integer in [0, n).
/// Knots must be strictly increasing.
inline void spline_envelope(const std::vector<double>& t, const std::vector<double>& y, std::size_t n,
                            std::vector<double>& out) {
    const std::size_t k = t.size();
    out.assign(n, 0.0);
    if (k == 1) {
        std::fill(out.begin(), out.end(), y[0]);
        return;
    }
    std::vector<double> m(k, 0.0); // second derivatives
    if (k > 2) {
        std::vector<double> diag(k - 2), rhs(k - 2), upper(k - 2);
        for (std::size_t i = 1; i + 1 < k; ++i) {
            const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        // Thomas algorithm; sub-diagonal entry of row i is h0 = t[i]-t[i-1].
        for (std::size_t i = 1; i < diag.size(); ++i) {
            const double lower = t[i + 1] - t[i];
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = diag.size(); i-- > 0;) {
            double v = rhs[i];
            if (i + 1 < diag.size()) v -= upper[i] * m[i + 2];
            m[i + 1] = v / diag[i];
        }
    }
    std::size_t seg = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const double ts = static_cast<double>(s);
        while (seg + 2 < k && ts > t[seg + 1]) ++seg;
        const double h = t[seg + 1] - t[seg];
        const double a = (t[seg + 1] - ts) / h;
        const double b = (ts - t[seg]) / h;
        out[s] = a * y[seg] + b * y[seg + 1] + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0;
    }
}

/// Envelope knots: the extrema plus up to two mirror images across each end.
inline void envelope_knots(std::span<const double> x, const std::vector<std::size_t>& idx, std::vector<double>& t,
                           std::vector<double>& y) {
    const double last = static_cast<double>(x.size() - 1);
    const std::size_t mirrors = std::min<std::size_t>(2, idx.size());
    t.clear();
    y.clear();
    for (std::size_t i = mirrors; i-- > 0;) {
        t.push_back(-static_cast<double>(idx[i]));
        y.push_back(x[idx[i]]);
    }
    for (auto i : idx) {
        t.push_back(static_cast<double>(i));
        y.push_back(x[i]);
    }
    for (std::size_t i = 0; i < mirrors; ++i) {
        const auto j = idx[idx.size() - 1 - i];
        t.push_back(2.0 * last - static_cast<double>(j));
        y.push_back(x[j]);
    }
}

inline bool can_sift(const Extrema& e) { return !e.maxima.empty() && !e.minima.empty() && e.maxima.size() + e.minima.size() >= 2; }

inline double range_of(std::span<const double> x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *hi - *lo;
}

} // namespace detail

/// True when the numbers of extrema and zero crossings differ by at most one.
inline bool is_imf_shaped(std::span<const double> x) {
    const auto e = detail::find_extrema(x);
    const auto extrema = e.maxima.size() + e.minima.size();
    const auto zc = detail::count_zero_crossings(x);
    return (extrema > zc ? extrema - zc : zc - extrema) <= 1;
}

/// Empirical mode decomposition by envelope-mean sifting. The residual is
/// maintained by exact subtraction so imfs + residual reproduces the input up
/// to rounding.
inline ImfSet emd(std::span<const double> x, const EmdOptions& options = {}) {
    if (x.size() < 16) fail(ErrorKind::SignalTooShort, "emd needs at least 16 samples");
    if (options.max_imfs < 1) fail(ErrorKind::InvalidSpec, "max_imfs must be >= 1");
    const std::size_t n = x.size();
    const auto cap = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))) + 1;
    const std::size_t max_imfs = std::min(options.max_imfs, cap);
    const double input_range = detail::range_of(x);

    ImfSet out;
    out.residual.assign(x.begin(), x.end());
    std::vector<double> h, upper, lower, t, y;
    while (out.imfs.size() < max_imfs) {
        if (detail::range_of(out.residual) <= options.range_threshold * input_range) break;
        auto e = detail::find_extrema(out.residual);
        if (!detail::can_sift(e)) break;

        h = out.residual;
        for (std::size_t sift = 0; sift < options.max_sifts; ++sift) {
            detail::envelope_knots(h, e.maxima, t, y);
            detail::spline_envelope(t, y, n, upper);
            detail::envelope_knots(h, e.minima, t, y);
            detail::spline_envelope(t, y, n, lower);
            double change = 0.0, energy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double mean = 0.5 * (upper[i] + lower[i]);
                energy += h[i] * h[i];
                change += mean * mean;
                h[i] -= mean;
            }
            e = detail::find_extrema(h);
            if (!detail::can_sift(e)) break;
            const bool small_change = energy == 0.0 || change / energy < options.sift_sd_threshold;
            if (small_change && is_imf_shaped(h)) break;
        }
        for (std::size_t i = 0; i < n; ++i) out.residual[i] -= h[i];
        out.imfs.push_back(std::move(h));
        h = {};
    }
    return out;
}

inline ImfSet emd(std::span<const double> x, std::size_t max_imfs, double sift_sd_threshold = 0.25,
                  std::size_t max_sifts = 100) {
    EmdOptions options;
    options.max_imfs = max_imfs;
    options.sift_sd_threshold = sift_sd_threshold;
    options.max_sifts = max_sifts;
    return emd(x, options);
}

/// The n-th IMF (1-based), or the final residual when fewer than n exist.
inline std::vector<double> nth_emd(const ImfSet& set, std::size_t n) {
    if (n < 1) fail(ErrorKind::InvalidSpec, "emd stage must be >= 1");
    if (n <= set.imfs.size()) return set.imfs[n - 1];
    return set.residual;
}

inline std::vector<double> nth_emd(std::span<const double> x, std::size_t n) {
    if (n < 1) fail(ErrorKind::InvalidSpec, "emd stage must be >= 1");
    return nth_emd(emd(x, n), n);
}

} // namespace leakbench::signal
