#pragma once

// Cross-validation harness with explicit over-sampling placement.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "classify.hpp"
#include "error.hpp"
#include "feature_matrix.hpp"
#include "oversample.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace leakbench {

// ---------------------------------------------------------------------------
// Folds

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Shuffles each class with one seeded stream (positives first), then deals
/// positives round-robin over folds; negatives continue the rotation where
/// positives stopped so fold sizes differ by at most one.
inline std::vector<Fold> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) fail(ErrorKind::InvalidSpec, "need at least 2 folds");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (pos.size() < k || neg.size() < k)
        fail(ErrorKind::TooFewPerClass, "each class needs at least " + std::to_string(k) + " samples (have " +
                                            std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) + " negative)");
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<std::size_t> fold_of(labels.size());
    std::size_t slot = 0;
    for (auto i : pos) fold_of[i] = slot++ % k;
    for (auto i : neg) fold_of[i] = slot++ % k;
    std::vector<Fold> folds(k);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t f = 0; f < k; ++f) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
    return folds;
}

// ---------------------------------------------------------------------------
// Metrics

/// Mann-Whitney AUC with ties counted one half, via midranks.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) fail(ErrorKind::ShapeMismatch, "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double n_pos = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1) {
                rank_sum += midrank;
                n_pos += 1.0;
            }
        i = j;
    }
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) fail(ErrorKind::SingleClass, "AUC needs both classes");
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0; // predict positive when score >= threshold
};

/// Empirical ROC curve, one point per distinct score plus the (0,0) origin.
inline std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) fail(ErrorKind::SingleClass, "ROC needs both classes");
    std::vector<RocPoint> points{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        for (; j < n && scores[order[j]] == scores[order[i]]; ++j) (labels[order[j]] == 1 ? tp : fp) += 1.0;
        points.push_back({fp / n_neg, tp / n_pos, scores[order[i]]});
        i = j;
    }
    return points;
}

struct ConfusionMetrics {
    double accuracy = 0.0;
    double sensitivity = 0.0; // recall on label 1
    double specificity = 0.0; // recall on label 0
};

inline double accuracy(std::span<const int> pred, std::span<const int> labels) {
    if (pred.size() != labels.size() || pred.empty()) fail(ErrorKind::ShapeMismatch, "prediction/label length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline ConfusionMetrics confusion_metrics(std::span<const int> pred, std::span<const int> labels) {
    ConfusionMetrics out;
    out.accuracy = accuracy(pred, labels);
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (labels[i] == 1)
            (pred[i] == 1 ? tp : fn) += 1;
        else
            (pred[i] == 1 ? fp : tn) += 1;
    }
    if (tp + fn == 0 || tn + fp == 0) fail(ErrorKind::SingleClass, "sensitivity/specificity need both classes");
    out.sensitivity = tp / (tp + fn);
    out.specificity = tn / (tn + fp);
    return out;
}

struct Summary {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation; 0 for a single value
};

inline Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Pipelines

enum class Placement { None, BeforeSplit, AfterSplit };

inline std::string_view placement_name(Placement p) {
    switch (p) {
    case Placement::None: return "none";
    case Placement::BeforeSplit: return "before_split";
    case Placement::AfterSplit: return "after_split";
    }
    return "none";
}

inline Placement parse_placement(std::string_view name) {
    for (auto p : {Placement::None, Placement::BeforeSplit, Placement::AfterSplit})
        if (placement_name(p) == name) return p;
    fail(ErrorKind::InvalidSpec, "unknown placement '" + std::string(name) + "'");
}

struct PipelineSpec {
    SamplerConfig sampler;
    ClassifierSpec classifier;
    Placement placement = Placement::AfterSplit;
    std::size_t n_folds = 10;
    std::uint64_t seed = 0;
    /// z-score features with statistics from the (possibly augmented) training partition.
    bool standardize = false;
    /// Required for BeforeSplit, which exists only to demonstrate leakage.
    bool allow_leakage = false;
};

inline void validate(const PipelineSpec& spec) {
    if (spec.n_folds < 2) fail(ErrorKind::InvalidSpec, "n_folds must be at least 2");
    if (spec.placement == Placement::BeforeSplit && !spec.allow_leakage)
        fail(ErrorKind::LeakageNotAcknowledged, "placement before_split requires allow_leakage");
    if (!(spec.sampler.proportion > 0.0)) fail(ErrorKind::InvalidSpec, "sampler proportion must be positive");
    validate(spec.classifier);
}

struct ClassCounts {
    std::size_t negative = 0;
    std::size_t positive = 0;
};

inline ClassCounts class_counts(std::span<const int> labels) {
    ClassCounts c;
    for (int l : labels) (l == 1 ? c.positive : c.negative) += 1;
    return c;
}

struct FoldReport {
    double auc = 0.0;
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    ClassCounts train_counts;
    ClassCounts test_counts;
    std::size_t synthetic_in_train = 0;
    std::size_t synthetic_in_test = 0;
    std::vector<std::string> warnings;
    // Audit trail; not part of the serialized summary.
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<bool> test_synthetic;
    std::vector<int> test_labels;
    std::vector<double> test_scores;
};

struct MetricsReport {
    PipelineSpec spec;
    std::vector<FoldReport> per_fold;
    std::map<std::string, Summary> aggregate; // auc, accuracy, sensitivity, specificity
    double wall_time_seconds = 0.0;
};

inline std::map<std::string, Summary> aggregate_folds(const std::vector<FoldReport>& folds) {
    std::map<std::string, std::vector<double>> columns;
    for (const auto& f : folds) {
        columns["auc"].push_back(f.auc);
        columns["accuracy"].push_back(f.accuracy);
        columns["sensitivity"].push_back(f.sensitivity);
        columns["specificity"].push_back(f.specificity);
    }
    std::map<std::string, Summary> out;
    for (const auto& [name, values] : columns) out[name] = summarize(values);
    return out;
}

namespace evaluate_detail {

constexpr std::uint64_t kSamplerStream = 0x73616d70;
constexpr std::uint64_t kClassifierStream = 0x636c6173;
constexpr std::uint64_t kFoldStream = 0x666f6c64;
constexpr std::uint64_t kInnerStream = 0x696e6e72;

/// Applies train-partition z-scores to both partitions in place.
inline void standardize_pair(FeatureMatrix& train, FeatureMatrix& test) {
    const auto s = classify_detail::Standardizer::fit(train);
    for (std::size_t r = 0; r < train.n_rows; ++r) s.apply(train.row(r), train.row(r));
    for (std::size_t r = 0; r < test.n_rows; ++r) s.apply(test.row(r), test.row(r));
}

/// Reorders rows by sample id so fitted models do not depend on input order.
inline FeatureMatrix sorted_by_id(const FeatureMatrix& m) {
    std::vector<std::size_t> order(m.n_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m.sample_ids[a] < m.sample_ids[b]; });
    return m.subset(order);
}

inline void note_sampler(const SampledMatrix& s, std::vector<std::string>& warnings) {
    if (s.k_clamped) warnings.push_back("sampler k clamped to " + std::to_string(s.effective_k));
    if (s.nothing_to_do) warnings.push_back("sampler had nothing to generate");
}

struct Evaluated {
    std::vector<double> scores;
    std::vector<int> predictions;
};

inline Evaluated fit_and_score(const ClassifierSpec& clf, FeatureMatrix train, FeatureMatrix test, bool standardize) {
    if (standardize) standardize_pair(train, test);
    const auto model = fit(clf, sorted_by_id(train));
    Evaluated out;
    out.scores = score(model, test);
    out.predictions.resize(out.scores.size());
    for (std::size_t i = 0; i < out.scores.size(); ++i)
        out.predictions[i] = out.scores[i] >= model.natural_threshold() ? 1 : 0;
    return out;
}

inline FoldReport finish_fold(const FeatureMatrix& train, const FeatureMatrix& test, const std::vector<bool>& train_synthetic,
                              std::vector<bool> test_synthetic, Evaluated eval, std::vector<std::string> warnings) {
    FoldReport r;
    r.auc = auc(eval.scores, test.labels);
    const auto cm = confusion_metrics(eval.predictions, test.labels);
    r.accuracy = cm.accuracy;
    r.sensitivity = cm.sensitivity;
    r.specificity = cm.specificity;
    r.train_counts = class_counts(train.labels);
    r.test_counts = class_counts(test.labels);
    r.synthetic_in_train = static_cast<std::size_t>(std::count(train_synthetic.begin(), train_synthetic.end(), true));
    r.synthetic_in_test = static_cast<std::size_t>(std::count(test_synthetic.begin(), test_synthetic.end(), true));
    r.warnings = std::move(warnings);
    r.train_ids = train.sample_ids;
    r.test_ids = test.sample_ids;
    r.test_synthetic = std::move(test_synthetic);
    r.test_labels = test.labels;
    r.test_scores = std::move(eval.scores);
    return r;
}

inline SamplerConfig fold_sampler(const PipelineSpec& spec, std::uint64_t unit) {
    SamplerConfig cfg = spec.sampler;
    cfg.seed = derive_seed(spec.sampler.seed, {kSamplerStream, spec.seed, unit});
    return cfg;
}

inline ClassifierSpec fold_classifier(const PipelineSpec& spec, std::uint64_t unit) {
    ClassifierSpec clf = spec.classifier;
    clf.seed = derive_seed(spec.classifier.seed, {kClassifierStream, spec.seed, unit});
    return clf;
}

} // namespace evaluate_detail

/// k-fold evaluation of `spec` on `m`. Folds run in parallel; every fold
/// draws from streams keyed by (seed, fold), so the report is schedule-free.
inline MetricsReport run_pipeline(const FeatureMatrix& m, const PipelineSpec& spec) {
    using namespace evaluate_detail;
    const auto started = std::chrono::steady_clock::now();
    validate(spec);
    validate(m);

    MetricsReport report;
    report.spec = spec;
    report.per_fold.resize(spec.n_folds);

    const bool sample = spec.placement != Placement::None && spec.sampler.algorithm != SamplerAlgorithm::None;
    const FeatureMatrix* pool = &m;
    std::vector<bool> pool_synthetic(m.n_rows, false);
    std::vector<std::string> pool_warnings;
    SampledMatrix augmented;
    if (spec.placement == Placement::BeforeSplit && sample) {
        augmented = oversample(m, fold_sampler(spec, spec.n_folds));
        note_sampler(augmented, pool_warnings);
        pool = &augmented.matrix;
        pool_synthetic = augmented.synthetic_mask;
    }

    const auto folds = stratified_kfold(pool->labels, spec.n_folds, derive_seed(spec.seed, {kFoldStream}));
    parallel_for(spec.n_folds, [&](std::size_t f) {
        auto warnings = pool_warnings;
        FeatureMatrix train = pool->subset(folds[f].train);
        const FeatureMatrix test = pool->subset(folds[f].test);
        std::vector<bool> train_synthetic, test_synthetic;
        for (auto i : folds[f].train) train_synthetic.push_back(pool_synthetic[i]);
        for (auto i : folds[f].test) test_synthetic.push_back(pool_synthetic[i]);
        if (spec.placement == Placement::AfterSplit && sample) {
            auto sampled = oversample(train, fold_sampler(spec, f));
            note_sampler(sampled, warnings);
            train = std::move(sampled.matrix);
            train_synthetic = std::move(sampled.synthetic_mask);
        }
        auto eval = fit_and_score(fold_classifier(spec, f), train, test, spec.standardize);
        report.per_fold[f] = finish_fold(train, test, train_synthetic, std::move(test_synthetic), std::move(eval), std::move(warnings));
    });

    report.aggregate = aggregate_folds(report.per_fold);
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

/// Aligned-column human summary.
inline std::string to_text(const MetricsReport& r) {
    std::string out;
    out += "placement " + std::string(placement_name(r.spec.placement)) + ", sampler " +
           std::string(sampler_name(r.spec.sampler.algorithm)) + ", classifier " +
           std::string(classifier_name(r.spec.classifier.kind)) + ", folds " + std::to_string(r.spec.n_folds) + "\n";
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.insert(0, w - s.size(), ' ');
        return s;
    };
    out += pad("fold", 6) + pad("auc", 9) + pad("accuracy", 10) + pad("sens", 9) + pad("spec", 9) + pad("train+", 8) +
           pad("train-", 8) + pad("test+", 7) + pad("test-", 7) + pad("syn_test", 10) + "\n";
    for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
        const auto& p = r.per_fold[f];
        out += pad(std::to_string(f), 6) + pad(text::format_fixed(p.auc, 4), 9) + pad(text::format_fixed(p.accuracy, 4), 10) +
               pad(text::format_fixed(p.sensitivity, 4), 9) + pad(text::format_fixed(p.specificity, 4), 9) +
               pad(std::to_string(p.train_counts.positive), 8) + pad(std::to_string(p.train_counts.negative), 8) +
               pad(std::to_string(p.test_counts.positive), 7) + pad(std::to_string(p.test_counts.negative), 7) +
               pad(std::to_string(p.synthetic_in_test), 10) + "\n";
    }
    for (const auto& [name, s] : r.aggregate)
        out += pad(name, 12) + "  " + text::format_fixed(s.mean, 4) + " +/- " + text::format_fixed(s.std, 4) + "\n";
    return out;
}

/// Per-fold ROC curves as CSV: fold,fpr,tpr,threshold.
inline std::string roc_csv(const MetricsReport& r, const std::vector<std::string>& comments = {}) {
    std::string out;
    for (const auto& c : comments) out += "# " + c + "\n";
    out += "fold,fpr,tpr,threshold\n";
    for (std::size_t f = 0; f < r.per_fold.size(); ++f)
        for (const auto& p : roc_curve(r.per_fold[f].test_scores, r.per_fold[f].test_labels))
            out += std::to_string(f) + "," + text::format_double(p.fpr) + "," + text::format_double(p.tpr) + "," +
                   text::format_double(p.threshold) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Bootstrap feature ranking

struct BootstrapAuc {
    double mean_auc = 0.0;
    double std_auc = 0.0;
};

/// Stratified bootstrap of the single-feature AUC. Iteration i draws from
/// its own stream derive_seed(seed, {i}).
inline BootstrapAuc bootstrap_feature_auc(std::span<const double> values, std::span<const int> labels, std::size_t n_boot,
                                          std::uint64_t seed) {
    if (values.size() != labels.size()) fail(ErrorKind::ShapeMismatch, "values and labels differ in length");
    if (n_boot == 0) fail(ErrorKind::InvalidSpec, "n_boot must be positive");
    for (double v : values)
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, "bootstrap values must be finite");
    const std::size_t n = values.size();
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) fail(ErrorKind::SingleClass, "bootstrap AUC needs both classes");

    // Sort once; each iteration then only needs multiplicity counts and a linear sweep.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::size_t> group_end(n);
    for (std::size_t i = n; i-- > 0;)
        group_end[i] = (i + 1 < n && values[order[i + 1]] == values[order[i]]) ? group_end[i + 1] : i + 1;

    const double pairs = static_cast<double>(pos.size()) * static_cast<double>(neg.size());
    std::vector<double> aucs(n_boot);
    parallel_for(n_boot, [&](std::size_t it) {
        Rng rng(derive_seed(seed, {it}));
        std::vector<std::uint32_t> count(n, 0);
        for (std::size_t d = 0; d < pos.size(); ++d) ++count[pos[rng.below(pos.size())]];
        for (std::size_t d = 0; d < neg.size(); ++d) ++count[neg[rng.below(neg.size())]];
        double neg_below = 0.0, wins = 0.0;
        for (std::size_t i = 0; i < n;) {
            const std::size_t end = group_end[i];
            double p = 0.0, q = 0.0;
            for (std::size_t t = i; t < end; ++t) (labels[order[t]] == 1 ? p : q) += count[order[t]];
            wins += p * (neg_below + 0.5 * q);
            neg_below += q;
            i = end;
        }
        aucs[it] = wins / pairs;
    });
    const auto s = summarize(aucs);
    return {s.mean, s.std};
}

struct FeatureRank {
    std::string feature;
    double mean_auc = 0.0;
    double std_auc = 0.0;
    double separation = 0.0; // |mean_auc - 0.5|
};

/// Bootstrap AUC per column, ordered by descending separation from 0.5,
/// ties by feature name. Column j uses stream derive_seed(seed, {j}).
inline std::vector<FeatureRank> rank_features(const FeatureMatrix& m, std::size_t n_boot, std::uint64_t seed) {
    validate(m);
    std::vector<FeatureRank> ranks(m.n_cols());
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        const auto column = m.column(c);
        const auto b = bootstrap_feature_auc(column, m.labels, n_boot, derive_seed(seed, {c}));
        ranks[c] = {m.feature_names[c], b.mean_auc, b.std_auc, std::abs(b.mean_auc - 0.5)};
    }
    std::stable_sort(ranks.begin(), ranks.end(), [](const FeatureRank& a, const FeatureRank& b) {
        if (a.separation != b.separation) return a.separation > b.separation;
        return a.feature < b.feature;
    });
    return ranks;
}

inline std::string ranking_csv(const std::vector<FeatureRank>& ranks, const std::vector<std::string>& comments = {}) {
    std::string out;
    for (const auto& c : comments) out += "# " + c + "\n";
    out += "rank,feature,mean_auc,std_auc,separation\n";
    for (std::size_t i = 0; i < ranks.size(); ++i)
        out += std::to_string(i + 1) + "," + ranks[i].feature + "," + text::format_double(ranks[i].mean_auc) + "," +
               text::format_double(ranks[i].std_auc) + "," + text::format_double(ranks[i].separation) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Sampler search

/// Cartesian grid over one algorithm's hyper-parameters. Empty n_clusters
/// means the config default.
struct SamplerGrid {
    SamplerAlgorithm algorithm = SamplerAlgorithm::SMOTE;
    std::vector<double> proportions{1.0};
    std::vector<std::size_t> k_neighbors{5};
    std::vector<std::size_t> n_clusters;
};

inline std::vector<SamplerConfig> expand_grid(const SamplerGrid& grid) {
    if (grid.proportions.empty() || grid.k_neighbors.empty()) fail(ErrorKind::InvalidSpec, "sampler grid has an empty axis");
    std::vector<std::size_t> clusters = grid.n_clusters;
    if (clusters.empty()) clusters.push_back(SamplerConfig{}.n_clusters);
    std::vector<SamplerConfig> out;
    for (double p : grid.proportions)
        for (auto k : grid.k_neighbors)
            for (auto c : clusters) {
                SamplerConfig cfg;
                cfg.algorithm = grid.algorithm;
                cfg.proportion = p;
                cfg.k_neighbors = k;
                cfg.n_clusters = c;
                out.push_back(cfg);
            }
    return out;
}

enum class SearchMode { TunedSame, BestOverall };

struct CandidateReport {
    SamplerConfig config;
    double inner_auc = 0.0; // mean over outer folds of the inner 3-fold mean
    double outer_auc = 0.0; // mean outer-fold AUC
    std::vector<double> outer_fold_auc;
};

struct SearchResult {
    SearchMode mode = SearchMode::BestOverall;
    std::size_t best_index = 0;
    SamplerConfig best_config;
    double best_outer_auc = 0.0;
    std::vector<CandidateReport> candidates;
};

struct SearchOptions {
    std::size_t n_folds = 10;
    std::size_t inner_folds = 3;
    bool standardize = false;
    /// The algorithm TunedSame is restricted to.
    SamplerAlgorithm base_algorithm = SamplerAlgorithm::SMOTE;
};

/// Nested cross-validation over sampler candidates. Inside every outer
/// training fold, each candidate is scored by an inner k-fold split of that
/// fold (sampler applied to inner training parts only); the candidate with
/// the best mean inner AUC wins (ties to the earlier candidate). Outer-fold
/// AUCs are reported for every candidate but never used for selection.
inline SearchResult sampler_search(const FeatureMatrix& m, const ClassifierSpec& classifier,
                                   const std::vector<SamplerConfig>& candidates, SearchMode mode, std::uint64_t seed,
                                   const SearchOptions& options = {}) {
    using namespace evaluate_detail;
    validate(m);
    validate(classifier);
    std::vector<SamplerConfig> pool;
    for (const auto& c : candidates)
        if (mode == SearchMode::BestOverall || c.algorithm == options.base_algorithm) pool.push_back(c);
    if (pool.empty()) fail(ErrorKind::InvalidSpec, "sampler search has no candidates");

    const auto outer = stratified_kfold(m.labels, options.n_folds, derive_seed(seed, {kFoldStream}));
    const std::size_t n_units = outer.size() * pool.size();
    std::vector<double> inner_auc(n_units), outer_auc(n_units);
    parallel_for(n_units, [&](std::size_t unit) {
        const std::size_t f = unit / pool.size(), c = unit % pool.size();
        PipelineSpec spec;
        spec.sampler = pool[c];
        spec.classifier = classifier;
        spec.seed = derive_seed(seed, {f});
        const FeatureMatrix train = m.subset(outer[f].train);
        const FeatureMatrix test = m.subset(outer[f].test);

        const auto inner = stratified_kfold(train.labels, options.inner_folds, derive_seed(seed, {kInnerStream, f}));
        double sum = 0.0;
        for (std::size_t i = 0; i < inner.size(); ++i) {
            const auto sampled = oversample(train.subset(inner[i].train), fold_sampler(spec, i + 1));
            const FeatureMatrix held = train.subset(inner[i].test);
            const auto eval = fit_and_score(fold_classifier(spec, i + 1), sampled.matrix, held, options.standardize);
            sum += auc(eval.scores, held.labels);
        }
        inner_auc[unit] = sum / static_cast<double>(inner.size());

        const auto sampled = oversample(train, fold_sampler(spec, 0));
        const auto eval = fit_and_score(fold_classifier(spec, 0), sampled.matrix, test, options.standardize);
        outer_auc[unit] = auc(eval.scores, test.labels);
    });

    SearchResult result;
    result.mode = mode;
    for (std::size_t c = 0; c < pool.size(); ++c) {
        CandidateReport rep;
        rep.config = pool[c];
        std::vector<double> inner_values;
        for (std::size_t f = 0; f < outer.size(); ++f) {
            inner_values.push_back(inner_auc[f * pool.size() + c]);
            rep.outer_fold_auc.push_back(outer_auc[f * pool.size() + c]);
        }
        rep.inner_auc = summarize(inner_values).mean;
        rep.outer_auc = summarize(rep.outer_fold_auc).mean;
        result.candidates.push_back(std::move(rep));
    }
    for (std::size_t c = 1; c < result.candidates.size(); ++c)
        if (result.candidates[c].inner_auc > result.candidates[result.best_index].inner_auc) result.best_index = c;
    result.best_config = result.candidates[result.best_index].config;
    result.best_outer_auc = result.candidates[result.best_index].outer_auc;
    return result;
}

} // namespace leakbench
