#pragma once

// Univariate time-series features and their assembly into a FeatureMatrix.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataio.hpp"
#include "error.hpp"
#include "feature_matrix.hpp"
#include "parallel.hpp"
#include "signal/emd.hpp"
#include "signal/fft.hpp"
#include "signal/wpd.hpp"

namespace leakbench::features {

/// Value reported when no template pair of length m+1 matches.
inline constexpr double kSampleEntropyCap = 50.0;

namespace detail {

inline double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_std(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double mu = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

inline double sample_variance(std::span<const double> x) {
    const double s = sample_std(x);
    return s * s;
}

/// Linear-interpolated quantile of sorted data (position q*(n-1)).
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace detail

/// Template-pair counts behind sample entropy: `b` pairs match for m points,
/// `a` pairs for m+1 points, over the first N-m templates.
struct TemplateMatches {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
};

inline TemplateMatches count_template_matches(std::span<const double> x, std::size_t m, double tolerance) {
    const std::size_t n_templates = x.size() - m;
    // Sorting by the first coordinate bounds the candidate window of each template.
    std::vector<std::size_t> order(n_templates);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j] || (x[i] == x[j] && i < j); });
    TemplateMatches counts;
    for (std::size_t p = 0; p < n_templates; ++p) {
        const std::size_t i = order[p];
        const double xi = x[i];
        for (std::size_t q = p + 1; q < n_templates; ++q) {
            const std::size_t j = order[q];
            if (x[j] - xi > tolerance) break;
            std::size_t k = 1;
            while (k < m && std::abs(x[i + k] - x[j + k]) <= tolerance) ++k;
            if (k < m) continue;
            ++counts.b;
            if (std::abs(x[i + m] - x[j + m]) <= tolerance) ++counts.a;
        }
    }
    return counts;
}

/// -ln(A/B) with tolerance r * std(x); capped at kSampleEntropyCap when A = 0.
inline double sample_entropy(std::span<const double> x, std::size_t m, double r) {
    if (x.size() <= m + 1) fail(ErrorKind::SignalTooShort, "sample entropy needs more than m+1 samples");
    if (!(r > 0.0)) fail(ErrorKind::InvalidSpec, "sample entropy tolerance must be positive");
    if (m < 1) fail(ErrorKind::InvalidSpec, "sample entropy needs m >= 1");
    const double tolerance = std::max(r * detail::sample_std(x), 1e-12);
    const auto counts = count_template_matches(x, m, tolerance);
    if (counts.a == 0 || counts.b == 0) return kSampleEntropyCap;
    return -std::log(static_cast<double>(counts.a) / static_cast<double>(counts.b));
}

/// Higuchi fractal dimension, clamped to [1, 2]. NaN for a flat signal.
inline double higuchi_fd(std::span<const double> x, std::size_t k_max = 8) {
    if (k_max < 2) fail(ErrorKind::InvalidSpec, "higuchi k_max must be >= 2");
    if (x.size() < 2 * k_max) fail(ErrorKind::SignalTooShort, "higuchi needs at least 2*k_max samples");
    const std::size_t n = x.size();
    std::vector<double> log_inv_k, log_length;
    for (std::size_t k = 1; k <= k_max; ++k) {
        double total = 0.0;
        std::size_t used = 0;
        for (std::size_t m = 0; m < k; ++m) {
            const std::size_t steps = (n - 1 - m) / k;
            if (steps == 0) continue;
            double sum = 0.0;
            for (std::size_t i = 1; i <= steps; ++i) sum += std::abs(x[m + i * k] - x[m + (i - 1) * k]);
            total += sum * static_cast<double>(n - 1) / (static_cast<double>(steps) * static_cast<double>(k)) / static_cast<double>(k);
            ++used;
        }
        const double length = total / static_cast<double>(used);
        if (!(length > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        log_inv_k.push_back(-std::log(static_cast<double>(k)));
        log_length.push_back(std::log(length));
    }
    const double mx = detail::mean(log_inv_k), my = detail::mean(log_length);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < log_inv_k.size(); ++i) {
        sxy += (log_inv_k[i] - mx) * (log_length[i] - my);
        sxx += (log_inv_k[i] - mx) * (log_inv_k[i] - mx);
    }
    return std::clamp(sxy / sxx, 1.0, 2.0);
}

/// Mean Teager-Kaiser energy x[n]^2 - x[n-1]x[n+1] over interior samples.
inline double teager_kaiser_energy(std::span<const double> x) {
    if (x.size() < 3) fail(ErrorKind::SignalTooShort, "teager-kaiser energy needs at least 3 samples");
    double sum = 0.0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) sum += x[i] * x[i] - x[i - 1] * x[i + 1];
    return sum / static_cast<double>(x.size() - 2);
}

struct BasicStats {
    double std = 0.0;
    double iqr = 0.0;
    double rms = 0.0;
    double peak_amplitude = 0.0;
};

inline BasicStats basic_stats(std::span<const double> x) {
    if (x.size() < 2) fail(ErrorKind::SignalTooShort, "basic stats need at least 2 samples");
    BasicStats s;
    s.std = detail::sample_std(x);
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    s.iqr = detail::sorted_quantile(sorted, 0.75) - detail::sorted_quantile(sorted, 0.25);
    double ss = 0.0;
    for (double v : x) {
        ss += v * v;
        s.peak_amplitude = std::max(s.peak_amplitude, std::abs(v));
    }
    s.rms = std::sqrt(ss / static_cast<double>(x.size()));
    return s;
}

/// AR coefficients a_1..a_p with x_n ~ sum_k a_k x_{n-k}, from the biased
/// autocorrelation of the demeaned signal via Levinson-Durbin.
inline std::vector<double> yule_walker_ar(std::span<const double> x, std::size_t order) {
    if (order < 1) fail(ErrorKind::InvalidSpec, "AR order must be >= 1");
    if (x.size() <= 10 * order) fail(ErrorKind::SignalTooShort, "yule-walker needs more than 10*order samples");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*hi - *lo <= 1e-12 * std::max(1.0, std::max(std::abs(*hi), std::abs(*lo))))
        fail(ErrorKind::SingularAutocorrelation, "constant input has a singular autocorrelation matrix");
    const double mu = detail::mean(x);
    const std::size_t n = x.size();
    std::vector<double> r(order + 1, 0.0);
    for (std::size_t lag = 0; lag <= order; ++lag) {
        double sum = 0.0;
        for (std::size_t i = lag; i < n; ++i) sum += (x[i] - mu) * (x[i - lag] - mu);
        r[lag] = sum / static_cast<double>(n);
    }
    std::vector<double> a(order + 1, 0.0), prev;
    double error = r[0];
    for (std::size_t k = 1; k <= order; ++k) {
        if (!(error > 0.0)) fail(ErrorKind::SingularAutocorrelation, "autocorrelation matrix is not positive definite");
        double acc = r[k];
        for (std::size_t j = 1; j < k; ++j) acc -= a[j] * r[k - j];
        const double reflection = acc / error;
        prev = a;
        a[k] = reflection;
        for (std::size_t j = 1; j < k; ++j) a[j] = prev[j] - reflection * prev[k - j];
        error *= 1.0 - reflection * reflection;
    }
    return {a.begin() + 1, a.end()};
}

/// Frequency at which the cumulative periodogram reaches half the total
/// power, interpolating linearly within bins. When the half-power level is
/// attained over a flat stretch, the stretch's midpoint is returned.
inline double median_frequency(std::span<const double> x, double fs) {
    if (x.size() < 64) fail(ErrorKind::SignalTooShort, "median frequency needs at least 64 samples");
    const auto power = signal::periodogram(x);
    const double bin = fs / static_cast<double>(x.size());
    const double total = std::accumulate(power.begin(), power.end(), 0.0);
    if (!(total > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double half = 0.5 * total, slack = 1e-9 * total;

    // Crossing at level `target`: first bin whose cumulative sum reaches it.
    auto crossing = [&](double target, bool strictly_above) {
        double cumulative = 0.0;
        for (std::size_t k = 0; k < power.size(); ++k) {
            const double next = cumulative + power[k];
            if (strictly_above ? next > target : next >= target) {
                const double frac = power[k] > 0.0 ? std::clamp((half - cumulative) / power[k], 0.0, 1.0) : 0.0;
                return std::max(0.0, (static_cast<double>(k) - 1.0 + frac) * bin);
            }
            cumulative = next;
        }
        return static_cast<double>(power.size() - 1) * bin;
    };
    const double lower = crossing(half - slack, false);
    const double upper = crossing(half + slack, true);
    return 0.5 * (lower + upper);
}

/// ln of the sample variance of the WPD coefficients at `path`.
inline double wavelet_log_var(std::span<const double> x, std::string_view path, std::string_view wavelet = "db4") {
    const auto node = signal::wpd(x, path, wavelet);
    const double var = detail::sample_variance(node.coefficients);
    if (!(var > 0.0)) fail(ErrorKind::NonPositiveVariance, "wavelet coefficients at " + std::string(path) + " have zero variance");
    return std::log(var);
}

/// Log-variance at `path` minus log-variance at its sibling (last symbol flipped).
inline double wavelet_log_var_diff(std::span<const double> x, std::string_view path, std::string_view wavelet = "db4") {
    std::string sibling(path);
    if (!sibling.empty()) sibling.back() = sibling.back() == 'A' ? 'D' : 'A';
    return wavelet_log_var(x, path, wavelet) - wavelet_log_var(x, sibling, wavelet);
}

inline double peak_power(std::span<const double> x) {
    const auto power = signal::periodogram(x);
    return *std::max_element(power.begin(), power.end());
}

/// Maximum periodogram value of the emd_stage-th IMF (residual fallback).
inline double fwl_peak_power(std::span<const double> x, double /*fs*/, std::size_t emd_stage) {
    return peak_power(signal::nth_emd(x, emd_stage));
}

// ---------------------------------------------------------------------------
// Feature specs and extraction

struct FeatureSpec {
    /// Registered feature kind, see registered_features().
    std::string name;
    int channel = 1;
    std::optional<std::size_t> emd_stage;
    std::optional<std::string> wpd_path;
    std::map<std::string, double> params;
    /// Column name; derived from the other fields when empty.
    std::string column;

    bool operator==(const FeatureSpec&) const = default;
};

struct FeatureInfo {
    std::string name;
    std::map<std::string, double> default_params;
    /// Features that interpret wpd_path themselves rather than receiving a WPD node.
    bool consumes_path = false;
};

inline const std::vector<FeatureInfo>& registered_features() {
    static const std::vector<FeatureInfo> infos = {
        {"sample_entropy", {{"m", 3}, {"r", 0.15}}},
        {"higuchi_fd", {{"k_max", 8}}},
        {"teager_kaiser_energy", {}},
        {"std", {}},
        {"iqr", {}},
        {"rms", {}},
        {"peak_amplitude", {}},
        {"yule_walker", {{"order", 4}, {"coefficient", 1}}},
        {"median_frequency", {}},
        {"wavelet_log_var", {}, true},
        {"wavelet_log_var_diff", {}, true},
        {"fwl_peak_power", {}},
    };
    return infos;
}

inline const FeatureInfo& feature_info(const std::string& name) {
    for (const auto& info : registered_features())
        if (info.name == name) return info;
    fail(ErrorKind::UnknownFeature, "unknown feature '" + name + "'");
}

inline std::string column_name(const FeatureSpec& spec) {
    if (!spec.column.empty()) return spec.column;
    std::string out = spec.name;
    if (spec.emd_stage) out += "_emd" + std::to_string(*spec.emd_stage);
    if (spec.wpd_path) {
        out += "_wpd";
        for (char c : *spec.wpd_path) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out + "_ch" + std::to_string(spec.channel);
}

/// Fills in default params and checks the spec against the registry.
inline FeatureSpec resolve(FeatureSpec spec) {
    const auto& info = feature_info(spec.name);
    for (const auto& [key, _] : spec.params)
        if (!info.default_params.count(key))
            fail(ErrorKind::InvalidSpec, "feature " + spec.name + " has no parameter '" + key + "'");
    for (const auto& [key, value] : info.default_params) spec.params.try_emplace(key, value);
    if (spec.channel < 1 || spec.channel > 3) fail(ErrorKind::InvalidSpec, "channel must be 1, 2 or 3");
    if (spec.emd_stage && *spec.emd_stage < 1) fail(ErrorKind::InvalidSpec, "emd stage must be >= 1");
    if (spec.wpd_path) signal::detail::check_path(*spec.wpd_path);
    if (info.consumes_path && !spec.wpd_path) fail(ErrorKind::InvalidSpec, spec.name + " requires a wpd path");
    if (spec.name == "fwl_peak_power" && !spec.emd_stage) fail(ErrorKind::InvalidSpec, "fwl_peak_power requires an emd stage");
    return spec;
}

/// The ten default feature presets, one channel per row as listed.
inline std::vector<FeatureSpec> table1_presets() {
    std::vector<FeatureSpec> specs = {
        {"sample_entropy", 3, 2, "AAA", {}, "sampen_emd2_aaa_ch3"},
        {"std", 3, 2, "AAAA", {}, "std_emd2_aaaa_ch3"},
        {"teager_kaiser_energy", 3, 2, "AAAA", {}, "tke_emd2_aaaa_ch3"},
        {"iqr", 1, 9, "AAAAD", {}, "iqr_emd9_aaaad_ch1"},
        {"higuchi_fd", 3, 3, "AD", {}, "higuchi_emd3_ad_ch3"},
        {"sample_entropy", 3, std::nullopt, std::nullopt, {{"m", 4}}, "sampen_m4_ch3"},
        {"yule_walker", 3, 2, "A", {}, "yule_walker1_emd2_a_ch3"},
        {"median_frequency", 3, std::nullopt, std::nullopt, {}, "median_frequency_ch3"},
        {"wavelet_log_var_diff", 3, std::nullopt, "AAAD", {}, "wavelet_log_var_diff_aaad_ch3"},
        {"fwl_peak_power", 1, 7, std::nullopt, {}, "fwl_peak_power_emd7_ch1"},
    };
    for (auto& s : specs) s = resolve(std::move(s));
    return specs;
}

namespace detail {

/// Evaluates a resolved spec on an already EMD-staged signal. Features that
/// are undefined for the input (flat signal) yield NaN.
inline double evaluate_on(const FeatureSpec& spec, std::span<const double> staged, double fs) {
    const auto& info = feature_info(spec.name);
    std::vector<double> node;
    std::span<const double> x = staged;
    double effective_fs = fs;
    if (spec.wpd_path && !info.consumes_path) {
        node = signal::wpd(staged, *spec.wpd_path).coefficients;
        x = node;
        effective_fs = fs / static_cast<double>(std::size_t{1} << spec.wpd_path->size());
    }
    const auto param = [&](const char* key) { return spec.params.at(key); };
    try {
        if (spec.name == "sample_entropy")
            return sample_entropy(x, static_cast<std::size_t>(param("m")), param("r"));
        if (spec.name == "higuchi_fd") return higuchi_fd(x, static_cast<std::size_t>(param("k_max")));
        if (spec.name == "teager_kaiser_energy") return teager_kaiser_energy(x);
        if (spec.name == "std") return basic_stats(x).std;
        if (spec.name == "iqr") return basic_stats(x).iqr;
        if (spec.name == "rms") return basic_stats(x).rms;
        if (spec.name == "peak_amplitude") return basic_stats(x).peak_amplitude;
        if (spec.name == "yule_walker") {
            const auto coeffs = yule_walker_ar(x, static_cast<std::size_t>(param("order")));
            const auto index = static_cast<std::size_t>(param("coefficient"));
            if (index < 1 || index > coeffs.size()) fail(ErrorKind::InvalidSpec, "yule_walker coefficient index out of range");
            return coeffs[index - 1];
        }
        if (spec.name == "median_frequency") return median_frequency(x, effective_fs);
        if (spec.name == "wavelet_log_var") return wavelet_log_var(x, *spec.wpd_path);
        if (spec.name == "wavelet_log_var_diff") return wavelet_log_var_diff(x, *spec.wpd_path);
        if (spec.name == "fwl_peak_power") return peak_power(x);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::NonPositiveVariance || e.kind() == ErrorKind::SingularAutocorrelation)
            return std::numeric_limits<double>::quiet_NaN();
        throw;
    }
    fail(ErrorKind::UnknownFeature, "unknown feature '" + spec.name + "'");
}

} // namespace detail

/// Evaluates one spec on one record (EMD staging, then WPD, then the feature).
inline double compute_feature(const Record& record, const FeatureSpec& raw_spec) {
    const auto spec = resolve(raw_spec);
    const auto& channel = record.channels[static_cast<std::size_t>(spec.channel - 1)];
    if (spec.emd_stage) return detail::evaluate_on(spec, signal::nth_emd(channel, *spec.emd_stage), record.sampling_rate);
    return detail::evaluate_on(spec, channel, record.sampling_rate);
}

struct ImputationReport {
    std::vector<std::size_t> per_column;
    std::size_t total = 0;
};

struct ExtractionResult {
    FeatureMatrix matrix;
    ImputationReport imputation;
};

/// Replaces non-finite entries of each column by the median of its finite
/// entries.
inline ImputationReport impute_column_medians(FeatureMatrix& m) {
    ImputationReport report;
    report.per_column.assign(m.n_cols(), 0);
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        std::vector<double> finite;
        for (std::size_t r = 0; r < m.n_rows; ++r)
            if (std::isfinite(m.at(r, c))) finite.push_back(m.at(r, c));
        if (finite.size() == m.n_rows) continue;
        if (finite.empty()) fail(ErrorKind::AllValuesNonFinite, "feature " + m.feature_names[c] + " has no finite value");
        std::sort(finite.begin(), finite.end());
        const double median = ::leakbench::features::detail::sorted_quantile(finite, 0.5);
        for (std::size_t r = 0; r < m.n_rows; ++r)
            if (!std::isfinite(m.at(r, c))) {
                m.at(r, c) = median;
                ++report.per_column[c];
                ++report.total;
            }
    }
    return report;
}

/// One row per record and one column per spec. Each channel's EMD is run
/// once, deep enough for every spec that needs it. Records are processed in
/// parallel; the result does not depend on the schedule.
inline ExtractionResult extract_feature_matrix(const RecordSet& set, const std::vector<FeatureSpec>& raw_specs) {
    if (raw_specs.empty()) fail(ErrorKind::InvalidSpec, "no feature specs given");
    std::vector<FeatureSpec> specs;
    for (const auto& s : raw_specs) specs.push_back(resolve(s));

    ExtractionResult out;
    auto& m = out.matrix;
    for (const auto& s : specs) m.feature_names.push_back(column_name(s));
    m.n_rows = set.size();
    m.values.assign(m.n_rows * m.n_cols(), 0.0);
    m.labels.resize(m.n_rows);
    m.sample_ids.resize(m.n_rows);

    std::array<std::size_t, 3> deepest{0, 0, 0};
    for (const auto& s : specs)
        if (s.emd_stage) deepest[s.channel - 1] = std::max(deepest[s.channel - 1], *s.emd_stage);

    parallel_for(set.size(), [&](std::size_t r) {
        const auto& record = set.records[r];
        m.labels[r] = record.label == Label::Preterm ? 1 : 0;
        m.sample_ids[r] = record.id;
        std::array<std::optional<signal::ImfSet>, 3> decomposed;
        for (std::size_t c = 0; c < 3; ++c)
            if (deepest[c]) decomposed[c] = signal::emd(record.channels[c], deepest[c]);
        for (std::size_t col = 0; col < specs.size(); ++col) {
            const auto& s = specs[col];
            const auto ch = static_cast<std::size_t>(s.channel - 1);
            if (s.emd_stage) {
                const auto staged = signal::nth_emd(*decomposed[ch], *s.emd_stage);
                m.at(r, col) = detail::evaluate_on(s, staged, record.sampling_rate);
            } else {
                m.at(r, col) = detail::evaluate_on(s, record.channels[ch], record.sampling_rate);
            }
        }
    });
    out.imputation = impute_column_medians(m);
    return out;
}

} // namespace leakbench::features
