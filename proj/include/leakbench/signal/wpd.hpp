#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "../error.hpp"

namespace leakbench::signal {

/// Orthonormal Daubechies scaling filter (reconstruction low-pass), named by
/// number of vanishing moments: "db4" has 8 taps.
inline const std::vector<double>& daubechies_filter(std::string_view name) {
    static const std::map<std::string, std::vector<double>, std::less<>> filters = {
        {"db1", {0.7071067811865476, 0.7071067811865476}},
        {"db2", {0.48296291314469025, 0.836516303737469, 0.22414386804185735, -0.12940952255092145}},
        {"db3",
         {0.3326705529509569, 0.8068915093133388, 0.4598775021193313, -0.13501102001039084, -0.08544127388224149,
          0.035226291882100656}},
        {"db4",
         {0.23037781330885523, 0.7148465705525415, 0.6308807679295904, -0.02798376941698385, -0.18703481171888114,
          0.030841381835986965, 0.032883011666982945, -0.010597401784997278}},
    };
    auto it = filters.find(name);
    if (it == filters.end()) fail(ErrorKind::UnknownWavelet, "unknown wavelet '" + std::string(name) + "'");
    return it->second;
}

struct WpdNode {
    std::string path; // over {A, D}, root first
    std::vector<double> coefficients;
    std::size_t source_length = 0; // length of the decomposed signal
    std::string wavelet = "db4";

    std::size_t level() const { return path.size(); }
};

namespace detail {

/// Periodized single-level analysis. Odd inputs are extended by repeating the
/// last sample; for even inputs the transform is orthogonal.
inline void dwt_step(std::span<const double> x, const std::vector<double>& h, std::vector<double>& approx,
                     std::vector<double>& detail) {
    std::vector<double> even(x.begin(), x.end());
    if (even.size() % 2) even.push_back(even.back());
    const std::size_t n = even.size(), half = n / 2, taps = h.size();
    approx.assign(half, 0.0);
    detail.assign(half, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t j = 0; j < taps; ++j) {
            const double v = even[(2 * k + j) % n];
            a += h[j] * v;
            // Quadrature mirror: g[j] = (-1)^j h[L-1-j].
            d += ((j % 2) ? -h[taps - 1 - j] : h[taps - 1 - j]) * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

inline std::vector<double> idwt_step(std::span<const double> approx, std::span<const double> detail,
                                     const std::vector<double>& h, std::size_t out_length) {
    const std::size_t half = approx.size(), n = 2 * half, taps = h.size();
    std::vector<double> x(n, 0.0);
    for (std::size_t k = 0; k < half; ++k)
        for (std::size_t j = 0; j < taps; ++j) {
            const double g = (j % 2) ? -h[taps - 1 - j] : h[taps - 1 - j];
            x[(2 * k + j) % n] += h[j] * approx[k] + g * detail[k];
        }
    x.resize(out_length);
    return x;
}

inline std::vector<std::size_t> level_lengths(std::size_t source_length, std::size_t levels) {
    std::vector<std::size_t> lengths{source_length};
    for (std::size_t l = 0; l < levels; ++l) lengths.push_back((lengths.back() + 1) / 2);
    return lengths;
}

inline void check_path(std::string_view path) {
    if (path.empty()) fail(ErrorKind::InvalidSpec, "wpd path must be non-empty");
    for (char c : path)
        if (c != 'A' && c != 'D') fail(ErrorKind::InvalidSpec, "wpd path must use only 'A' and 'D'");
}

} // namespace detail

/// Follows `path` (A = low-pass, D = high-pass) through the periodized
/// wavelet packet tree, downsampling by two per level.
inline WpdNode wpd(std::span<const double> x, std::string_view path, std::string_view wavelet = "db4") {
    detail::check_path(path);
    const auto& h = daubechies_filter(wavelet);
    if (x.size() < (std::size_t{1} << path.size()) * h.size())
        fail(ErrorKind::SignalTooShort, "wpd path of level " + std::to_string(path.size()) + " needs at least " +
                                            std::to_string((std::size_t{1} << path.size()) * h.size()) + " samples");
    WpdNode node{std::string(path), std::vector<double>(x.begin(), x.end()), x.size(), std::string(wavelet)};
    std::vector<double> approx, det;
    for (char step : path) {
        detail::dwt_step(node.coefficients, h, approx, det);
        node.coefficients = step == 'A' ? std::move(approx) : std::move(det);
    }
    return node;
}

/// Every node of a complete tree level, in lexicographic path order (A < D).
inline std::vector<WpdNode> wpd_level(std::span<const double> x, std::size_t level, std::string_view wavelet = "db4") {
    if (level < 1) fail(ErrorKind::InvalidSpec, "wpd level must be >= 1");
    const auto& h = daubechies_filter(wavelet);
    if (x.size() < (std::size_t{1} << level) * h.size())
        fail(ErrorKind::SignalTooShort, "signal too short for wpd level " + std::to_string(level));
    std::vector<WpdNode> nodes{{"", std::vector<double>(x.begin(), x.end()), x.size(), std::string(wavelet)}};
    for (std::size_t l = 0; l < level; ++l) {
        std::vector<WpdNode> next;
        for (auto& node : nodes) {
            WpdNode a{node.path + "A", {}, x.size(), node.wavelet}, d{node.path + "D", {}, x.size(), node.wavelet};
            detail::dwt_step(node.coefficients, h, a.coefficients, d.coefficients);
            next.push_back(std::move(a));
            next.push_back(std::move(d));
        }
        nodes = std::move(next);
    }
    return nodes;
}

/// Inverts a complete level of nodes back to the source signal.
inline std::vector<double> wpd_reconstruct(std::span<const WpdNode> nodes) {
    if (nodes.empty()) fail(ErrorKind::IncompleteTree, "no nodes given");
    const std::size_t level = nodes.front().level();
    const std::size_t source_length = nodes.front().source_length;
    const std::string wavelet = nodes.front().wavelet;
    if (level == 0) fail(ErrorKind::IncompleteTree, "nodes must have level >= 1");
    std::map<std::string, std::vector<double>> current;
    for (const auto& node : nodes) {
        detail::check_path(node.path);
        if (node.level() != level || node.source_length != source_length || node.wavelet != wavelet)
            fail(ErrorKind::IncompleteTree, "nodes do not form a single uniform level");
        if (!current.emplace(node.path, node.coefficients).second)
            fail(ErrorKind::IncompleteTree, "duplicate node " + node.path);
    }
    if (current.size() != (std::size_t{1} << level))
        fail(ErrorKind::IncompleteTree, "level " + std::to_string(level) + " needs " +
                                            std::to_string(std::size_t{1} << level) + " nodes, got " +
                                            std::to_string(current.size()));
    const auto& h = daubechies_filter(wavelet);
    const auto lengths = detail::level_lengths(source_length, level);
    for (std::size_t l = level; l >= 1; --l) {
        std::map<std::string, std::vector<double>> parents;
        for (auto it = current.begin(); it != current.end(); ++it) {
            const auto& path = it->first;
            if (path.back() != 'A') continue;
            const auto parent = path.substr(0, path.size() - 1);
            const auto sibling = current.find(parent + "D");
            if (sibling == current.end() || sibling->second.size() != it->second.size())
                fail(ErrorKind::IncompleteTree, "missing or mismatched sibling of " + path);
            parents[parent] = detail::idwt_step(it->second, sibling->second, h, lengths[l - 1]);
        }
        current = std::move(parents);
    }
    return current.at("");
}

} // namespace leakbench::signal
