#pragma once

// Minority over-sampling: SMOTE, ADASYN, Cluster-SMOTE, SMOTE + Tomek-link
// cleaning, and random duplication.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <array>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "feature_matrix.hpp"
#include "neighbors.hpp"
#include "rng.hpp"

namespace leakbench {

enum class SamplerAlgorithm { None, RandomDup, SMOTE, ADASYN, ClusterSMOTE, SMOTETomek };

inline std::string_view sampler_name(SamplerAlgorithm a) {
    switch (a) {
    case SamplerAlgorithm::None: return "None";
    case SamplerAlgorithm::RandomDup: return "RandomDup";
    case SamplerAlgorithm::SMOTE: return "SMOTE";
    case SamplerAlgorithm::ADASYN: return "ADASYN";
    case SamplerAlgorithm::ClusterSMOTE: return "ClusterSMOTE";
    case SamplerAlgorithm::SMOTETomek: return "SMOTETomek";
    }
    return "None";
}

inline SamplerAlgorithm parse_sampler(std::string_view name) {
    for (auto a : {SamplerAlgorithm::None, SamplerAlgorithm::RandomDup, SamplerAlgorithm::SMOTE, SamplerAlgorithm::ADASYN,
                   SamplerAlgorithm::ClusterSMOTE, SamplerAlgorithm::SMOTETomek})
        if (sampler_name(a) == name) return a;
    fail(ErrorKind::InvalidSpec, "unknown sampler '" + std::string(name) + "'");
}

struct SamplerConfig {
    SamplerAlgorithm algorithm = SamplerAlgorithm::SMOTE;
    /// Target minority/majority ratio after sampling (1.0 = balanced).
    double proportion = 1.0;
    std::size_t k_neighbors = 5;
    std::size_t n_clusters = 2;
    std::uint64_t seed = 0;
    /// Measure neighbour distances on per-column z-scores of the input matrix.
    bool standardize = false;

    bool operator==(const SamplerConfig&) const = default;
};

struct SampledMatrix {
    FeatureMatrix matrix;
    std::vector<bool> synthetic_mask;
    /// For synthetic rows, the two input rows interpolated (equal for duplicates).
    std::vector<std::optional<std::pair<std::size_t, std::size_t>>> parents;
    /// For original rows, the input row index.
    std::vector<std::optional<std::size_t>> source_index;
    /// Rows dropped by Tomek cleaning, as ids of the pre-cleaning matrix.
    std::vector<std::string> removed_ids;
    bool nothing_to_do = false;
    bool k_clamped = false;
    std::size_t effective_k = 0;

    std::size_t synthetic_count() const {
        return static_cast<std::size_t>(std::count(synthetic_mask.begin(), synthetic_mask.end(), true));
    }
};

namespace oversample_detail {

inline SampledMatrix passthrough(const FeatureMatrix& m) {
    SampledMatrix out;
    out.matrix = m;
    out.synthetic_mask.assign(m.n_rows, false);
    out.parents.assign(m.n_rows, std::nullopt);
    out.source_index.resize(m.n_rows);
    for (std::size_t i = 0; i < m.n_rows; ++i) out.source_index[i] = i;
    return out;
}

/// Number of rows to add so minority/majority reaches `proportion`.
inline std::ptrdiff_t rows_to_generate(const FeatureMatrix& m, double proportion) {
    if (!(proportion > 0.0) || !std::isfinite(proportion)) fail(ErrorKind::InvalidSpec, "proportion must be positive");
    const auto target = static_cast<std::ptrdiff_t>(std::ceil(proportion * static_cast<double>(m.majority_count()) - 1e-9));
    return target - static_cast<std::ptrdiff_t>(m.minority_count());
}

/// Distance-space copy of the matrix rows (optionally z-scored).
inline std::vector<double> distance_space(const FeatureMatrix& m, bool standardize) {
    std::vector<double> pts = m.values;
    if (!standardize) return pts;
    const std::size_t d = m.n_cols();
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m.n_rows; ++r) mean += m.at(r, c);
        mean /= static_cast<double>(m.n_rows);
        double var = 0.0;
        for (std::size_t r = 0; r < m.n_rows; ++r) var += (m.at(r, c) - mean) * (m.at(r, c) - mean);
        const double sd = std::sqrt(var / static_cast<double>(m.n_rows));
        for (std::size_t r = 0; r < m.n_rows; ++r) pts[r * d + c] = sd > 0.0 ? (m.at(r, c) - mean) / sd : 0.0;
    }
    return pts;
}

inline std::vector<double> gather_rows(const std::vector<double>& pts, std::size_t d, const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    out.reserve(rows.size() * d);
    for (auto r : rows) out.insert(out.end(), pts.begin() + static_cast<std::ptrdiff_t>(r * d), pts.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
    return out;
}

inline std::vector<std::size_t> rows_with_label(const FeatureMatrix& m, int label) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m.n_rows; ++i)
        if (m.labels[i] == label) rows.push_back(i);
    return rows;
}

inline std::string synthetic_id(const FeatureMatrix& m, std::size_t serial, std::size_t parent) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "~syn%06zu:", serial);
    return buffer + m.sample_ids[parent];
}

inline void append_synthetic(SampledMatrix& out, const FeatureMatrix& m, std::size_t a, std::size_t b, double lambda) {
    const auto pa = m.row(a), pb = m.row(b);
    std::vector<double> row(pa.size());
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = pa[c] + lambda * (pb[c] - pa[c]);
    out.matrix.push_row(row, 1, synthetic_id(m, out.matrix.n_rows - m.n_rows, a));
    out.synthetic_mask.push_back(true);
    out.parents.emplace_back(std::make_pair(a, b));
    out.source_index.push_back(std::nullopt);
}

/// Minority neighbour lists (indices into m) for each row of `members`.
inline std::vector<std::vector<std::size_t>> minority_neighbors(const std::vector<double>& pts, std::size_t d,
                                                                const std::vector<std::size_t>& members, std::size_t k) {
    NeighborIndex index(gather_rows(pts, d, members), d);
    std::vector<std::vector<std::size_t>> lists(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (const auto& nb : index.query(index.point(i), k, i)) lists[i].push_back(members[nb.index]);
    }
    return lists;
}

/// Core SMOTE draw: `count` synthetics from `members` (uniform base choice,
/// uniform neighbour among its list, lambda ~ U(0,1)).
inline void smote_draw(SampledMatrix& out, const FeatureMatrix& m, const std::vector<std::size_t>& members,
                       const std::vector<std::vector<std::size_t>>& neighbors, std::size_t count, Rng& rng) {
    for (std::size_t g = 0; g < count; ++g) {
        const auto base = static_cast<std::size_t>(rng.below(members.size()));
        const auto& nbs = neighbors[base];
        const std::size_t partner = nbs.empty() ? members[base] : nbs[rng.below(nbs.size())];
        const double lambda = rng.uniform();
        append_synthetic(out, m, members[base], partner, lambda);
    }
}

/// Splits `total` proportionally to `weights` (largest remainder; ties go to
/// the lower index).
inline std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double share = weights[i] / sum * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(share));
        assigned += counts[i];
        remainders.emplace_back(share - std::floor(share), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; assigned < total; ++j, ++assigned) ++counts[remainders[j % remainders.size()].second];
    return counts;
}

struct Prepared {
    SampledMatrix out;
    std::vector<std::size_t> minority;
    std::size_t k = 0;
    std::size_t to_generate = 0;
};

/// Shared validation and bookkeeping. Returns nullopt-equivalent (via
/// nothing_to_do) when the proportion is already met.
inline Prepared prepare(const FeatureMatrix& m, const SamplerConfig& cfg, std::size_t min_minority) {
    validate(m);
    Prepared p;
    p.out = passthrough(m);
    p.minority = rows_with_label(m, 1);
    if (p.minority.size() < min_minority)
        fail(ErrorKind::TooFewMinority, "need at least " + std::to_string(min_minority) + " minority rows, have " +
                                            std::to_string(p.minority.size()));
    if (cfg.k_neighbors < 1) fail(ErrorKind::InvalidSpec, "k_neighbors must be >= 1");
    p.k = std::min(cfg.k_neighbors, p.minority.empty() ? std::size_t{0} : p.minority.size() - 1);
    p.out.k_clamped = p.k < cfg.k_neighbors;
    p.out.effective_k = p.k;
    const auto g = rows_to_generate(m, cfg.proportion);
    if (g <= 0) {
        p.out.nothing_to_do = true;
        return p;
    }
    p.to_generate = static_cast<std::size_t>(g);
    return p;
}

} // namespace oversample_detail

inline SampledMatrix smote(const FeatureMatrix& m, const SamplerConfig& cfg) {
    using namespace oversample_detail;
    auto p = prepare(m, cfg, 2);
    if (p.out.nothing_to_do) return std::move(p.out);
    const auto pts = distance_space(m, cfg.standardize);
    const auto neighbors = minority_neighbors(pts, m.n_cols(), p.minority, p.k);
    Rng rng(cfg.seed);
    smote_draw(p.out, m, p.minority, neighbors, p.to_generate, rng);
    return std::move(p.out);
}

/// SMOTE with synthetics allocated by neighbourhood difficulty: the share of
/// majority rows among each minority row's k nearest neighbours overall.
inline SampledMatrix adasyn(const FeatureMatrix& m, const SamplerConfig& cfg) {
    using namespace oversample_detail;
    auto p = prepare(m, cfg, 2);
    if (p.out.nothing_to_do) return std::move(p.out);
    const std::size_t d = m.n_cols();
    const auto pts = distance_space(m, cfg.standardize);
    const auto neighbors = minority_neighbors(pts, d, p.minority, p.k);

    const std::size_t k_all = std::min(cfg.k_neighbors, m.n_rows - 1);
    NeighborIndex all(pts, d);
    std::vector<double> difficulty(p.minority.size(), 0.0);
    for (std::size_t i = 0; i < p.minority.size(); ++i) {
        const auto row = p.minority[i];
        std::size_t majority = 0;
        for (const auto& nb : all.query(all.point(row), k_all, row)) majority += m.labels[nb.index] == 0;
        difficulty[i] = static_cast<double>(majority) / static_cast<double>(k_all);
    }
    Rng rng(cfg.seed);
    if (std::all_of(difficulty.begin(), difficulty.end(), [](double r) { return r == 0.0; })) {
        smote_draw(p.out, m, p.minority, neighbors, p.to_generate, rng);
        return std::move(p.out);
    }
    const auto counts = apportion(difficulty, p.to_generate);
    for (std::size_t i = 0; i < p.minority.size(); ++i)
        for (std::size_t g = 0; g < counts[i]; ++g) {
            const auto& nbs = neighbors[i];
            const std::size_t partner = nbs.empty() ? p.minority[i] : nbs[rng.below(nbs.size())];
            append_synthetic(p.out, m, p.minority[i], partner, rng.uniform());
        }
    return std::move(p.out);
}

/// Lloyd's k-means with a fixed iteration count. Initial centroids are
/// distinct rows drawn by `rng`; empty clusters keep their previous centroid.
/// Returns the cluster id of each point.
inline std::vector<std::size_t> kmeans(const std::vector<double>& pts, std::size_t d, std::size_t k, Rng& rng,
                                       std::size_t iterations = 50) {
    const std::size_t n = pts.size() / d;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::vector<double> centroids;
    for (std::size_t c = 0; c < k; ++c)
        centroids.insert(centroids.end(), pts.begin() + static_cast<std::ptrdiff_t>(order[c] * d),
                         pts.begin() + static_cast<std::ptrdiff_t>((order[c] + 1) * d));
    std::vector<std::size_t> assign(n, 0);
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            Neighbor best{std::numeric_limits<double>::infinity(), 0};
            for (std::size_t c = 0; c < k; ++c) {
                const Neighbor cand{squared_distance({pts.data() + i * d, d}, {centroids.data() + c * d, d}), c};
                if (cand < best) best = cand;
            }
            assign[i] = best.index;
        }
        std::vector<double> sums(k * d, 0.0);
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++sizes[assign[i]];
            for (std::size_t j = 0; j < d; ++j) sums[assign[i] * d + j] += pts[i * d + j];
        }
        for (std::size_t c = 0; c < k; ++c)
            if (sizes[c])
                for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = sums[c * d + j] / static_cast<double>(sizes[c]);
    }
    return assign;
}

/// k-means on the minority rows, then SMOTE inside each cluster with
/// synthetics apportioned by cluster size.
inline SampledMatrix cluster_smote(const FeatureMatrix& m, const SamplerConfig& cfg) {
    using namespace oversample_detail;
    if (cfg.n_clusters < 1) fail(ErrorKind::InvalidSpec, "n_clusters must be >= 1");
    auto p = prepare(m, cfg, std::max<std::size_t>(2, cfg.n_clusters));
    if (p.out.nothing_to_do) return std::move(p.out);
    const std::size_t d = m.n_cols();
    const auto pts = distance_space(m, cfg.standardize);
    const auto minority_pts = gather_rows(pts, d, p.minority);
    Rng cluster_rng(derive_seed(cfg.seed, {0x6b6d65616eULL}));
    const auto assign = kmeans(minority_pts, d, cfg.n_clusters, cluster_rng);

    std::vector<std::vector<std::size_t>> members(cfg.n_clusters);
    for (std::size_t i = 0; i < p.minority.size(); ++i) members[assign[i]].push_back(p.minority[i]);
    std::vector<double> sizes;
    for (const auto& c : members) sizes.push_back(static_cast<double>(c.size()));
    const auto counts = apportion(sizes, p.to_generate);

    Rng rng(cfg.seed);
    for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
        if (members[c].empty() || counts[c] == 0) continue;
        const std::size_t k = std::min(p.k, members[c].size() - 1);
        const auto neighbors = minority_neighbors(pts, d, members[c], k);
        smote_draw(p.out, m, members[c], neighbors, counts[c], rng);
    }
    return std::move(p.out);
}

/// Indices of rows in mutual nearest-neighbour pairs of opposite class.
inline std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const FeatureMatrix& m, bool standardize = false) {
    using namespace oversample_detail;
    const auto pts = distance_space(m, standardize);
    NeighborIndex index(pts, m.n_cols());
    std::vector<std::size_t> nearest(m.n_rows);
    for (std::size_t i = 0; i < m.n_rows; ++i) nearest[i] = index.query(index.point(i), 1, i).front().index;
    std::vector<std::pair<std::size_t, std::size_t>> links;
    for (std::size_t i = 0; i < m.n_rows; ++i) {
        const auto j = nearest[i];
        if (i < j && nearest[j] == i && m.labels[i] != m.labels[j]) links.emplace_back(i, j);
    }
    return links;
}

/// SMOTE followed by removal of both members of every Tomek link. A link is
/// kept when removing it would empty either class.
inline SampledMatrix smote_tomek(const FeatureMatrix& m, const SamplerConfig& cfg) {
    auto sampled = smote(m, cfg);
    const auto& aug = sampled.matrix;
    if (aug.n_rows < 2) return sampled;
    std::vector<bool> drop(aug.n_rows, false);
    std::array<std::size_t, 2> remaining{aug.count_label(0), aug.count_label(1)};
    for (const auto& [a, b] : tomek_links(aug, cfg.standardize)) {
        std::array<std::size_t, 2> after = remaining;
        --after[aug.labels[a]];
        --after[aug.labels[b]];
        if (after[0] == 0 || after[1] == 0) continue;
        remaining = after;
        drop[a] = drop[b] = true;
    }
    SampledMatrix out;
    out.matrix = aug.empty_like();
    out.nothing_to_do = sampled.nothing_to_do;
    out.k_clamped = sampled.k_clamped;
    out.effective_k = sampled.effective_k;
    for (std::size_t i = 0; i < aug.n_rows; ++i) {
        if (drop[i]) {
            out.removed_ids.push_back(aug.sample_ids[i]);
            continue;
        }
        out.matrix.push_row(aug.row(i), aug.labels[i], aug.sample_ids[i]);
        out.synthetic_mask.push_back(sampled.synthetic_mask[i]);
        out.parents.push_back(sampled.parents[i]);
        out.source_index.push_back(sampled.source_index[i]);
    }
    return out;
}

/// Appends exact copies of uniformly drawn minority rows.
inline SampledMatrix random_duplicate(const FeatureMatrix& m, const SamplerConfig& cfg) {
    using namespace oversample_detail;
    validate(m);
    auto out = passthrough(m);
    const auto minority = rows_with_label(m, 1);
    if (minority.empty()) fail(ErrorKind::TooFewMinority, "random duplication needs at least one minority row");
    const auto g = rows_to_generate(m, cfg.proportion);
    if (g <= 0) {
        out.nothing_to_do = true;
        return out;
    }
    Rng rng(cfg.seed);
    for (std::ptrdiff_t i = 0; i < g; ++i) {
        const auto row = minority[rng.below(minority.size())];
        out.matrix.push_row(m.row(row), 1, synthetic_id(m, static_cast<std::size_t>(i), row));
        out.synthetic_mask.push_back(true);
        out.parents.emplace_back(std::make_pair(row, row));
        out.source_index.push_back(std::nullopt);
    }
    return out;
}

/// Dispatches on cfg.algorithm; None returns the input unchanged.
inline SampledMatrix oversample(const FeatureMatrix& m, const SamplerConfig& cfg) {
    switch (cfg.algorithm) {
    case SamplerAlgorithm::None: {
        validate(m);
        auto out = oversample_detail::passthrough(m);
        out.nothing_to_do = true;
        return out;
    }
    case SamplerAlgorithm::RandomDup: return random_duplicate(m, cfg);
    case SamplerAlgorithm::SMOTE: return smote(m, cfg);
    case SamplerAlgorithm::ADASYN: return adasyn(m, cfg);
    case SamplerAlgorithm::ClusterSMOTE: return cluster_smote(m, cfg);
    case SamplerAlgorithm::SMOTETomek: return smote_tomek(m, cfg);
    }
    fail(ErrorKind::InvalidSpec, "unknown sampler");
}

/// FeatureMatrix CSV plus synthetic, parent_a, parent_b columns (parents by
/// input sample id; empty for originals).
inline std::string to_csv(const SampledMatrix& s, const FeatureMatrix& input, const std::vector<std::string>& comments = {}) {
    std::vector<std::vector<std::string>> extra(s.matrix.n_rows);
    for (std::size_t i = 0; i < s.matrix.n_rows; ++i) {
        extra[i] = {s.synthetic_mask[i] ? "1" : "0", "", ""};
        if (s.parents[i]) {
            extra[i][1] = input.sample_ids[s.parents[i]->first];
            extra[i][2] = input.sample_ids[s.parents[i]->second];
        }
    }
    return to_csv(s.matrix, comments, {"synthetic", "parent_a", "parent_b"}, extra);
}

} // namespace leakbench
